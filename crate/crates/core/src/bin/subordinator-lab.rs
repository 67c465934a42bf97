use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use subordinator_lab::harness::{
    emit_plot, error_csv, load_config, run_experiment, summary, write_record, Experiment, PlotKind, WORKERS_ENV,
};
use subordinator_lab::{Error, Result};

#[derive(Parser)]
#[command(name = "subordinator-lab", version, about = "First-passage undershoot experiments for subordinators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample first passages and write one row per replica.
    Simulate(RunArgs),
    /// KS distance of the undershoot ratio to Beta(α, 1−α).
    VerifyDl(RunArgs),
    /// Large-deviation ratio to target.
    VerifyLde(RunArgs),
    /// Monte Carlo double Laplace transform against Φ(q)/(qΦ(q+λ)).
    VerifyDlt(RunArgs),
    /// Tail ratio Π(x,∞)Γ(1−α)/(x^{−α}ℓ(x)).
    Karamata(RunArgs),
    /// Potter bound search on the standard grids.
    Potter(RunArgs),
    /// Render an SVG from a result CSV.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "eps-rel")]
    eps_rel: Option<f64>,
}

#[derive(Args)]
struct PlotArgs {
    /// cdf-overlay or ratio-vs-s
    kind: String,
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Beta parameter for cdf-overlay.
    #[arg(long)]
    alpha: Option<f64>,
}

fn init_workers() -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Parameter(format!("{WORKERS_ENV} must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Parameter(e.to_string()))?;
    }
    Ok(())
}

fn run(experiment: Experiment, args: RunArgs) -> ExitCode {
    let mut out = args.out.clone();
    let result = (|| {
        let mut cfg = load_config(&args.config)?;
        if cfg.experiment != experiment {
            return Err(Error::Parameter(format!(
                "config describes `{}`, but `{}` was requested",
                cfg.experiment.as_str(),
                experiment.as_str()
            )));
        }
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        if let Some(n) = args.n {
            cfg.n = n;
        }
        if let Some(eps) = args.eps_rel {
            cfg.policy.eps_rel = eps;
        }
        if let Some(o) = &args.out {
            cfg.output = Some(o.clone());
        }
        let path = cfg
            .output
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", experiment.as_str())));
        out = Some(path.clone());
        let record = run_experiment(&cfg)?;
        write_record(&record, &path)?;
        eprintln!("{}", summary(&record));
        eprintln!("wrote {}", path.display());
        Ok(record.exit_code())
    })();
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            if let Some(path) = out {
                if let Err(e) = std::fs::write(&path, error_csv(&err)) {
                    eprintln!("could not write error row to {}: {e}", path.display());
                }
            } else {
                print!("{}", error_csv(&err));
            }
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_workers() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match cli.command {
        Command::Simulate(a) => run(Experiment::Simulate, a),
        Command::VerifyDl(a) => run(Experiment::VerifyDl, a),
        Command::VerifyLde(a) => run(Experiment::VerifyLde, a),
        Command::VerifyDlt(a) => run(Experiment::VerifyDlt, a),
        Command::Karamata(a) => run(Experiment::Karamata, a),
        Command::Potter(a) => run(Experiment::Potter, a),
        Command::Plot(p) => {
            let res = PlotKind::parse(&p.kind).and_then(|kind| emit_plot(&p.csv, kind, p.alpha, &p.out));
            match res {
                Ok(()) => {
                    eprintln!("wrote {}", p.out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    print!("{}", error_csv(&e));
                    ExitCode::from(2)
                }
            }
        }
    }
}
