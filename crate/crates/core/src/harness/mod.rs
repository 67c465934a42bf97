//! Experiment configs, reproducible runs, CSV/SVG output.
//!
//! Config files are JSON. A minimal example:
//!
//! ```json
//! {
//!   "experiment": "verify-dl",
//!   "spec": {"family": {"kind": "stable", "alpha": 0.5, "scale": 1.0}},
//!   "alpha": 0.5,
//!   "s_list": [1.0],
//!   "n": 100000,
//!   "seed": 7
//! }
//! ```
//!
//! Every random draw comes from a stream keyed by `(seed, level index,
//! replica index)`, so output bytes do not depend on the worker count.

mod config;
mod plot;
mod run;

pub use config::{load_config, Experiment, ExperimentConfig, Thresholds, EXPERIMENTS};
pub use plot::{emit_plot, render_plot, PlotKind};
pub use run::{
    error_csv, meta_path, run_experiment, summary, to_csv, write_record, Diagnostic, ResultRecord, DLT_HEADER,
    ERROR_HEADER, KARAMATA_HEADER, POTTER_HEADER, SIMULATE_HEADER, VERIFIER_HEADER,
};

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "SUBORDINATOR_LAB_WORKERS";
