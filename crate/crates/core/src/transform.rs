//! Double Laplace transform of the undershoot,
//!
//! ∫_0^∞ e^{−qt} E exp(−λ X_{T(t)−}) dt = Φ(q) / (q Φ(q+λ)),
//!
//! its Monte Carlo counterpart over a grid of levels t, and Gaver–Stehfest
//! inversion in q at fixed λ.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::{check_regular_variation, ContractionFn, Range};
use crate::model::SubordinatorSpec;
use crate::regvar::SlowVaryingFn;
use crate::rng::{derive_seed, substream};
use crate::sampler::{PassageSampler, TruncationPolicy};

/// Upper time cutoff in units of 1/q; e^{−14} < 1e−6.
pub const CUTOFF_Q_UNITS: f64 = 14.0;

pub const GS_DEFAULT_TERMS: usize = 14;
pub const GS_MAX_TERMS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleLaplacePoint {
    pub q: f64,
    pub lambda: f64,
    pub value: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// Φ(q) / (q Φ(q+λ))
pub fn dl_theoretical(spec: &SubordinatorSpec, q: f64, lambda: f64) -> Result<f64> {
    check_positive("q", q)?;
    check_positive("lambda", lambda)?;
    Ok(spec.phi(q)? / (q * spec.phi(q + lambda)?))
}

pub fn dl_point(spec: &SubordinatorSpec, q: f64, lambda: f64) -> Result<DoubleLaplacePoint> {
    Ok(DoubleLaplacePoint {
        q,
        lambda,
        value: dl_theoretical(spec, q, lambda)?,
    })
}

/// Uniform levels `step, 2·step, …, t_max`; the level 0 node is implicit
/// with E exp(−λX_{T(0)−}) = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub step: f64,
    pub t_max: f64,
}

impl TimeGrid {
    pub fn new(step: f64, t_max: f64) -> Result<Self> {
        check_positive("grid step", step)?;
        if !(t_max >= step) {
            return Err(Error::Domain(format!(
                "grid end {t_max} must be at least one step ({step})"
            )));
        }
        Ok(TimeGrid { step, t_max })
    }

    /// Grid covering the cutoff 14/q for every q ≥ `q_min`.
    pub fn covering(step: f64, q_min: f64) -> Result<Self> {
        check_positive("q", q_min)?;
        let intervals = (CUTOFF_Q_UNITS / q_min / step).ceil();
        Self::new(step, intervals * step)
    }

    pub fn intervals(&self) -> usize {
        (self.t_max / self.step).round() as usize
    }

    /// Node levels including 0.
    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.intervals()).map(|i| i as f64 * self.step).collect()
    }

    pub fn end(&self) -> f64 {
        self.intervals() as f64 * self.step
    }

    fn scaled(&self, s: f64) -> TimeGrid {
        TimeGrid {
            step: self.step * s,
            t_max: self.end() * s,
        }
    }
}

/// Monte Carlo estimate of the double transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DlEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// Richardson estimate |T_h − T_{2h}|/3 of the trapezoid error.
    pub quad_error: f64,
    /// Bound e^{−qT}/q on the error of the tail closure.
    pub tail_bound: f64,
}

/// Undershoots sampled once at every grid level; reusable across (q, λ).
#[derive(Debug, Clone)]
pub struct UndershootGrid {
    grid: TimeGrid,
    /// Undershoots per positive node, in node order.
    undershoots: Vec<Vec<f64>>,
}

impl UndershootGrid {
    /// Node `k` (level k·step) draws replicas from the stream family keyed
    /// by `derive_seed(seed, k)`.
    pub fn sample(
        spec: &SubordinatorSpec,
        grid: TimeGrid,
        n: usize,
        policy: &TruncationPolicy,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("samples per node must be at least 1".into()));
        }
        policy.validate()?;
        let undershoots = (1..=grid.intervals())
            .into_par_iter()
            .map(|k| {
                let level = k as f64 * grid.step;
                let sampler = PassageSampler::new(spec, level, policy)?;
                let node_seed = derive_seed(seed, k as u64);
                (0..n as u64)
                    .map(|i| {
                        let mut rng = substream(node_seed, i);
                        sampler.sample(&mut rng).map(|p| p.undershoot)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(UndershootGrid { grid, undershoots })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    /// Per node: mean and variance of the mean of exp(−λ·scale·X).
    fn node_moments(&self, lambda: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.undershoots.len() + 1);
        out.push((1.0, 0.0));
        for xs in &self.undershoots {
            let n = xs.len() as f64;
            let mean = xs.iter().map(|&x| (-lambda * x).exp()).sum::<f64>() / n;
            let var = if xs.len() > 1 {
                xs.iter().map(|&x| ((-lambda * x).exp() - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            out.push((mean, var / n));
        }
        out
    }

    /// ∫_0^∞ e^{−qt} m(t) dt with m piecewise linear between nodes, the
    /// exponential kernel integrated exactly, and m held at its last value
    /// beyond the grid.
    pub fn estimate(&self, q: f64, lambda: f64) -> Result<DlEstimate> {
        check_positive("q", q)?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be non-negative, got {lambda}")));
        }
        let end = self.grid.end();
        if end * q < CUTOFF_Q_UNITS * (1.0 - 1e-12) {
            return Err(Error::Domain(format!(
                "time grid ends at {end}, short of the cutoff {:.6} = 14/q",
                CUTOFF_Q_UNITS / q
            )));
        }
        let moments = self.node_moments(lambda);
        let nodes = self.grid.nodes();
        let fine: Vec<usize> = (0..nodes.len()).collect();
        let mut coarse: Vec<usize> = (0..nodes.len()).step_by(2).collect();
        if coarse.last() != Some(&(nodes.len() - 1)) {
            coarse.push(nodes.len() - 1);
        }
        let w_fine = product_trapezoid_weights(&nodes, &fine, q);
        let w_coarse = product_trapezoid_weights(&nodes, &coarse, q);
        let fine_value: f64 = fine.iter().zip(&w_fine).map(|(&i, w)| w * moments[i].0).sum();
        let coarse_value: f64 = coarse.iter().zip(&w_coarse).map(|(&i, w)| w * moments[i].0).sum();
        let variance: f64 = fine.iter().zip(&w_fine).map(|(&i, w)| w * w * moments[i].1).sum();
        let stderr = variance.sqrt();
        let quad_error = (fine_value - coarse_value).abs() / 3.0;
        let floor = 64.0 * f64::EPSILON * fine_value.abs();
        if quad_error > 3.0 * stderr + floor {
            return Err(Error::Numeric(format!(
                "time grid too coarse: quadrature error {quad_error:.3e} exceeds 3 × stderr {stderr:.3e}"
            )));
        }
        Ok(DlEstimate {
            estimate: fine_value,
            stderr,
            quad_error,
            tail_bound: (-q * end).exp() / q,
        })
    }
}

/// (1 − e^{−z}(1+z)) / z²
fn right_weight_factor(z: f64) -> f64 {
    if z < 1e-3 {
        0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0
    } else {
        (-(-z).exp_m1() - z * (-z).exp()) / (z * z)
    }
}

/// Weights w_j with ∫ e^{−qt} m(t) dt ≈ Σ w_j m(t_{idx_j}), the last
/// weight carrying the tail closure e^{−qT}/q.
fn product_trapezoid_weights(nodes: &[f64], idx: &[usize], q: f64) -> Vec<f64> {
    let mut w = vec![0.0; idx.len()];
    for j in 0..idx.len() - 1 {
        let a = nodes[idx[j]];
        let h = nodes[idx[j + 1]] - a;
        let z = q * h;
        let scale = (-q * a).exp();
        let right = h * right_weight_factor(z);
        let total = -(-z).exp_m1() / q;
        w[j] += scale * (total - right);
        w[j + 1] += scale * right;
    }
    let end = nodes[*idx.last().expect("non-empty")];
    *w.last_mut().expect("non-empty") += (-q * end).exp() / q;
    w
}

/// Monte Carlo double transform: passages over every level of `grid`,
/// `n` replicas per level, then [`UndershootGrid::estimate`].
#[allow(clippy::too_many_arguments)]
pub fn dl_empirical(
    spec: &SubordinatorSpec,
    q: f64,
    lambda: f64,
    n: usize,
    grid: TimeGrid,
    policy: &TruncationPolicy,
    seed: u64,
) -> Result<DlEstimate> {
    check_positive("q", q)?;
    check_positive("lambda", lambda)?;
    if grid.end() * q < CUTOFF_Q_UNITS * (1.0 - 1e-12) {
        return Err(Error::Domain(format!(
            "time grid ends at {}, short of the cutoff 14/q = {:.6}",
            grid.end(),
            CUTOFF_Q_UNITS / q
        )));
    }
    UndershootGrid::sample(spec, grid, n, policy, seed)?.estimate(q, lambda)
}

/// Stehfest weights V_1..V_N.
pub fn stehfest_weights(terms: usize) -> Result<Vec<f64>> {
    if terms == 0 || terms % 2 == 1 {
        return Err(Error::Parameter(format!(
            "Gaver–Stehfest needs a positive even number of terms, got {terms}"
        )));
    }
    if terms > GS_MAX_TERMS {
        return Err(Error::Parameter(format!(
            "{terms} Gaver–Stehfest terms overflow double precision; at most {GS_MAX_TERMS}"
        )));
    }
    let fact: Vec<f64> = (0..=2 * terms).scan(1.0, |acc, k| {
        if k > 0 {
            *acc *= k as f64;
        }
        Some(*acc)
    }).collect();
    let half = terms / 2;
    let weights = (1..=terms)
        .map(|k| {
            let mut sum = 0.0;
            for j in k.div_ceil(2)..=k.min(half) {
                sum += (j as f64).powi(half as i32) * fact[2 * j]
                    / (fact[half - j] * fact[j] * fact[j - 1] * fact[k - j] * fact[2 * j - k]);
            }
            if (k + half).is_multiple_of(2) {
                sum
            } else {
                -sum
            }
        })
        .collect();
    Ok(weights)
}

/// f(t) ≈ (ln 2 / t) Σ_k V_k f̂(k ln 2 / t)
pub fn invert_laplace_gs<F: Fn(f64) -> f64>(fhat: F, t: f64, terms: usize) -> Result<f64> {
    check_positive("t", t)?;
    let weights = stehfest_weights(terms)?;
    let a = std::f64::consts::LN_2 / t;
    let mut sum = 0.0;
    for (k, v) in weights.iter().enumerate() {
        let y = fhat((k + 1) as f64 * a);
        if !y.is_finite() {
            return Err(Error::Numeric(format!(
                "transform is not finite at q = {}",
                (k + 1) as f64 * a
            )));
        }
        sum += v * y;
    }
    Ok(a * sum)
}

/// Where the double transform of the rescaled undershoot comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DlSource {
    Theoretical,
    /// Grid in units of the level s: passages over s·t for t on `grid`.
    Empirical {
        n: usize,
        grid: TimeGrid,
        policy: TruncationPolicy,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledDlRow {
    pub s: f64,
    pub c: f64,
    pub normalized_value: f64,
    /// Zero for the theoretical source.
    pub stderr: f64,
    /// q^{α−1} λ^{−α}
    pub limit: f64,
}

/// For each level s,
/// ℓ(cs)/(c^α ℓ(s)) · ∫_0^∞ e^{−qt} E exp(−λ X_{T(st)−}/(cs)) dt
/// against its limit q^{α−1}λ^{−α}. The inner transform equals
/// Φ(q/s) / (q Φ(q/s + λ/(cs))).
#[allow(clippy::too_many_arguments)]
pub fn scaled_dl_limit_check(
    spec: &SubordinatorSpec,
    alpha: f64,
    ell: &SlowVaryingFn,
    c_fn: &ContractionFn,
    q: f64,
    lambda: f64,
    s_list: &[f64],
    source: DlSource,
) -> Result<Vec<ScaledDlRow>> {
    check_positive("q", q)?;
    check_positive("lambda", lambda)?;
    check_regular_variation(spec, alpha, Range::Long)?;
    c_fn.validate_on(Range::Long, s_list)?;
    let limit = q.powf(alpha - 1.0) * lambda.powf(-alpha);
    let mut rows = Vec::with_capacity(s_list.len());
    for (k, &s) in s_list.iter().enumerate() {
        let c = c_fn.eval(s);
        let norm = ell.eval(c * s)? / (c.powf(alpha) * ell.eval(s)?);
        let (value, stderr) = match source {
            DlSource::Theoretical => (spec.phi(q / s)? / (q * spec.phi(q / s + lambda / (c * s))?), 0.0),
            DlSource::Empirical { n, grid, policy, seed } => {
                let scaled = UndershootGrid::sample(spec, grid.scaled(s), n, &policy, derive_seed(seed, k as u64))?;
                let est = scaled.estimate(q / s, lambda / (c * s))?;
                (est.estimate / s, est.stderr / s)
            }
        };
        rows.push(ScaledDlRow {
            s,
            c,
            normalized_value: norm * value,
            stderr: norm * stderr,
            limit,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, Tolerance};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn theoretical_examples() {
        let st = SubordinatorSpec::stable(0.5, 1.0).unwrap();
        assert_relative_eq!(dl_theoretical(&st, 1.0, 1.0).unwrap(), 0.5f64.sqrt(), max_relative = 1e-14);
        let cp = SubordinatorSpec::compound_poisson_exp(1.0, 1.0).unwrap();
        assert_eq!(dl_theoretical(&cp, 1.0, 1.0).unwrap(), 0.75);
        // quadrature Φ as an independent route
        let phi_q = |l: f64| cp.phi_quadrature(l).unwrap();
        assert_relative_eq!(phi_q(1.0) / phi_q(2.0), 0.75, max_relative = 1e-8);
        for spec in [&st, &cp] {
            for q in [0.3, 1.0, 5.0] {
                assert_relative_eq!(dl_theoretical(spec, q, 1e-12).unwrap(), 1.0 / q, max_relative = 1e-6);
            }
        }
        assert!(dl_theoretical(&st, 0.0, 1.0).is_err());
        assert!(dl_theoretical(&st, 1.0, -1.0).is_err());
    }

    #[test]
    fn weights_reproduce_exact_integrals() {
        // m(t) = 1 + t is linear, so the product rule is exact up to the closure.
        let nodes: Vec<f64> = (0..=400).map(|i| i as f64 * 0.1).collect();
        let idx: Vec<usize> = (0..nodes.len()).collect();
        let q = 0.7;
        let w = product_trapezoid_weights(&nodes, &idx, q);
        let v: f64 = w.iter().zip(&nodes).map(|(w, t)| w * (1.0 + t)).sum();
        let end = *nodes.last().unwrap();
        let exact_to_end = integrate(|t| (-q * t).exp() * (1.0 + t), 0.0, end, Tolerance::default()).unwrap().value;
        assert_relative_eq!(v - (-q * end).exp() * (1.0 + end) / q, exact_to_end, max_relative = 1e-12);
        assert_relative_eq!(right_weight_factor(9.99e-4), right_weight_factor(1.001e-3), max_relative = 1e-5);
    }

    #[test]
    fn stehfest_pairs() {
        assert_relative_eq!(invert_laplace_gs(|q| 1.0 / q, 2.5, 14).unwrap(), 1.0, epsilon = 1e-7);
        assert_relative_eq!(
            invert_laplace_gs(|q| 1.0 / (q + 1.0), 1.0, 14).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-6
        );
        assert_relative_eq!(
            invert_laplace_gs(|q| q.powf(-0.5), 1.0, 14).unwrap(),
            1.0 / PI.sqrt(),
            epsilon = 1e-6
        );
        let v = stehfest_weights(14).unwrap();
        // Σ V_k = 0 (inverse of 1/q is exact for every N)
        assert!(v.iter().sum::<f64>().abs() < 1e-6);
    }

    #[test]
    fn stehfest_parameter_errors() {
        for bad in [0, 7, 22] {
            assert!(matches!(invert_laplace_gs(|q| 1.0 / q, 1.0, bad), Err(Error::Parameter(_))));
        }
        assert!(invert_laplace_gs(|q| 1.0 / q, 1.0, 20).is_ok());
    }

    #[test]
    fn grid_coverage() {
        let g = TimeGrid::covering(0.05, 0.5).unwrap();
        assert!(g.end() >= 28.0 - 1e-12);
        let cp = SubordinatorSpec::compound_poisson_exp(1.0, 1.0).unwrap();
        let short = TimeGrid::new(0.1, 5.0).unwrap();
        assert!(matches!(
            dl_empirical(&cp, 1.0, 1.0, 10, short, &TruncationPolicy::default(), 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let cp = SubordinatorSpec::compound_poisson_exp(1.0, 1.0).unwrap();
        let grid = TimeGrid::covering(2.0, 1.0).unwrap();
        let res = dl_empirical(&cp, 1.0, 1.0, 20_000, grid, &TruncationPolicy::default(), 3);
        assert!(matches!(res, Err(Error::Numeric(_))), "{res:?}");
    }

    #[test]
    fn scaled_theoretical_rows() {
        let st = SubordinatorSpec::stable(0.5, 1.0).unwrap();
        let ell = SlowVaryingFn::constant(1.0);
        let c = ContractionFn::power(-0.5);
        let rows =
            scaled_dl_limit_check(&st, 0.5, &ell, &c, 1.0, 1.0, &[1e2, 1e4, 1e8], DlSource::Theoretical).unwrap();
        for r in &rows {
            assert_eq!(r.limit, 1.0);
            // closed form (c + 1)^{−1/2}
            assert_relative_eq!(r.normalized_value, (r.c + 1.0).powf(-0.5), max_relative = 1e-12);
        }
        assert!((rows[2].normalized_value - 1.0).abs() < 1e-4);
        let rows = scaled_dl_limit_check(&st, 0.5, &ell, &c, 4.0, 1.0, &[1e8], DlSource::Theoretical).unwrap();
        assert_eq!(rows[0].limit, 0.5);
        assert!((rows[0].normalized_value - 0.5).abs() < 1e-3);
    }
}
