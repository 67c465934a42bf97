//! Slowly varying functions and numerical checks of regular-variation
//! hypotheses: Karamata tail ratios and Potter bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SubordinatorSpec;
use crate::special::gamma_fn;

/// The point at which a function is slowly varying.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VaryingAt {
    ZeroPlus,
    Infinity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SlowKind {
    Constant { value: f64 },
    /// 1 + log(1 + x)
    LogShift,
    /// 1 + log(1 + log(1 + x))
    IterLog,
    /// x^rho with rho != 0. Not slowly varying; used for negative tests.
    PowerProbe { rho: f64 },
}

pub const ELL_KINDS: &[&str] = &["constant", "log-shift", "iter-log", "power-probe"];

/// A named slowly varying function ℓ.
///
/// With `reciprocal` set the kind is evaluated at 1/x, which turns the
/// kinds that vary slowly at infinity into nontrivial functions slowly
/// varying at 0+.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlowVaryingFn {
    #[serde(flatten)]
    pub kind: SlowKind,
    #[serde(default = "default_varying_at")]
    pub varying_at: VaryingAt,
    #[serde(default)]
    pub reciprocal: bool,
}

fn default_varying_at() -> VaryingAt {
    VaryingAt::Infinity
}

impl SlowVaryingFn {
    pub fn new(kind: SlowKind, varying_at: VaryingAt) -> Result<Self> {
        let f = SlowVaryingFn {
            kind,
            varying_at,
            reciprocal: false,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn constant(value: f64) -> Self {
        SlowVaryingFn {
            kind: SlowKind::Constant { value },
            varying_at: VaryingAt::Infinity,
            reciprocal: false,
        }
    }

    pub fn log_shift() -> Self {
        SlowVaryingFn {
            kind: SlowKind::LogShift,
            varying_at: VaryingAt::Infinity,
            reciprocal: false,
        }
    }

    pub fn iter_log() -> Self {
        SlowVaryingFn {
            kind: SlowKind::IterLog,
            varying_at: VaryingAt::Infinity,
            reciprocal: false,
        }
    }

    pub fn power_probe(rho: f64) -> Self {
        SlowVaryingFn {
            kind: SlowKind::PowerProbe { rho },
            varying_at: VaryingAt::Infinity,
            reciprocal: false,
        }
    }

    /// x ↦ kind(1/x), slowly varying at 0+.
    pub fn at_zero_via_reciprocal(kind: SlowKind) -> Self {
        SlowVaryingFn {
            kind,
            varying_at: VaryingAt::ZeroPlus,
            reciprocal: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SlowKind::Constant { value } if !(value > 0.0 && value.is_finite()) => Err(
                Error::Range(format!("constant slowly varying value must be > 0, got {value}")),
            ),
            SlowKind::PowerProbe { rho } if rho == 0.0 || !rho.is_finite() => Err(Error::Range(
                format!("power probe exponent must be nonzero and finite, got {rho}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn is_slowly_varying(&self) -> bool {
        !matches!(self.kind, SlowKind::PowerProbe { .. })
    }

    pub fn name(&self) -> String {
        let base = match self.kind {
            SlowKind::Constant { value } => format!("constant({value})"),
            SlowKind::LogShift => "log-shift".to_string(),
            SlowKind::IterLog => "iter-log".to_string(),
            SlowKind::PowerProbe { rho } => format!("power-probe({rho})"),
        };
        if self.reciprocal {
            format!("{base}∘(1/x)")
        } else {
            base
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || x.is_nan() {
            return Err(Error::Domain(format!(
                "slowly varying function needs x > 0, got {x}"
            )));
        }
        let arg = if self.reciprocal { 1.0 / x } else { x };
        Ok(self.eval_kind(arg))
    }

    fn eval_kind(&self, x: f64) -> f64 {
        match self.kind {
            SlowKind::Constant { value } => value,
            SlowKind::LogShift => 1.0 + x.ln_1p(),
            SlowKind::IterLog => 1.0 + x.ln_1p().ln_1p(),
            SlowKind::PowerProbe { rho } => x.powf(rho),
        }
    }
}

pub fn ell_eval(ell: &SlowVaryingFn, x: f64) -> Result<f64> {
    ell.eval(x)
}

/// Π(x,∞)·Γ(1−α) / (x^{−α} ℓ(x)).
///
/// Tends to 1 along x → `ell.varying_at` exactly when the tail satisfies the
/// Karamata condition with index α and slowly varying part ℓ.
pub fn karamata_ratio(
    spec: &SubordinatorSpec,
    alpha: f64,
    ell: &SlowVaryingFn,
    x: f64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Range(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let tail = spec.levy_tail(x)?;
    let g = gamma_fn(1.0 - alpha)?;
    // Divide in log space so x^{-α} cannot overflow at extreme x.
    let log_den = -alpha * x.ln() + ell.eval(x)?.ln();
    if tail == 0.0 {
        return Ok(0.0);
    }
    Ok((tail.ln() + g.ln() - log_den).exp())
}

/// Outcome of a Potter bound search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotterResult {
    pub holds: bool,
    /// Smallest admissible constant A ≥ 1 at the reported threshold.
    #[serde(rename = "A")]
    pub a: f64,
    /// Threshold: the bound is asserted for grid levels beyond R in the
    /// direction of `varying_at` (s > R at infinity, s < R at 0+).
    #[serde(rename = "R")]
    pub r: f64,
}

/// Largest constant the Potter search accepts before declaring failure.
pub const POTTER_A_MAX: f64 = 1e6;

/// Level grid used by the Potter experiments: decades 10^1..10^100, or their
/// reciprocals for functions slowly varying at 0+.
pub fn potter_s_grid(at: VaryingAt) -> Vec<f64> {
    (1..=100)
        .map(|k| match at {
            VaryingAt::Infinity => 10f64.powi(k),
            VaryingAt::ZeroPlus => 10f64.powi(-k),
        })
        .collect()
}

/// Contraction grid used by the Potter experiments: decades 10^-1..10^-80.
/// The depth is what makes a pure power ratio c^{-ρ} with ρ > ε exceed
/// A·c^{-ε} for every A ≤ 10^6 when ρ − ε = 0.1.
pub fn potter_c_grid() -> Vec<f64> {
    (1..=80).map(|k| 10f64.powi(-k)).collect()
}

/// Search the grid for the smallest threshold R such that the two-sided
/// bound A^{-1}c^ε ≤ ℓ(s)/ℓ(cs) ≤ A c^{-ε} holds at all levels beyond R with
/// some A ≤ [`POTTER_A_MAX`]; reports that R and the least such A.
pub fn potter_check(
    ell: &SlowVaryingFn,
    epsilon: f64,
    s_grid: &[f64],
    c_grid: &[f64],
) -> Result<PotterResult> {
    if !(epsilon > 0.0) {
        return Err(Error::Range(format!("epsilon must be > 0, got {epsilon}")));
    }
    if s_grid.is_empty() || c_grid.is_empty() {
        return Err(Error::Domain("Potter grids must be non-empty".into()));
    }
    if let Some(c) = c_grid.iter().find(|c| !(**c > 0.0 && **c < 1.0)) {
        return Err(Error::Range(format!("contraction grid must lie in (0,1), got {c}")));
    }
    let mut levels: Vec<f64> = s_grid.to_vec();
    if levels.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Domain("level grid must be positive".into()));
    }
    // Order levels along the approach direction, so "beyond R" is a suffix.
    match ell.varying_at {
        VaryingAt::Infinity => levels.sort_by(f64::total_cmp),
        VaryingAt::ZeroPlus => levels.sort_by(|a, b| b.total_cmp(a)),
    }
    levels.dedup();

    // Needed A per level, then suffix maxima.
    let mut need = Vec::with_capacity(levels.len());
    for &s in &levels {
        let ls = ell.eval(s)?;
        let mut a_s: f64 = 1.0;
        for &c in c_grid {
            let ratio = ls / ell.eval(c * s)?;
            let ce = c.powf(epsilon);
            a_s = a_s.max(ratio * ce).max(ce / ratio);
        }
        need.push(a_s);
    }
    let mut suffix = need.clone();
    for i in (0..suffix.len().saturating_sub(1)).rev() {
        suffix[i] = suffix[i].max(suffix[i + 1]);
    }

    // Candidate k: assert the bound for levels[k..]; R is the level just
    // before (or 0 / ∞ when the whole grid is covered).
    for (k, &a) in suffix.iter().enumerate() {
        if a <= POTTER_A_MAX {
            let r = if k == 0 {
                match ell.varying_at {
                    VaryingAt::Infinity => 0.0,
                    VaryingAt::ZeroPlus => f64::INFINITY,
                }
            } else {
                levels[k - 1]
            };
            return Ok(PotterResult { holds: true, a, r });
        }
    }
    let last = *suffix.last().expect("non-empty");
    Ok(PotterResult {
        holds: false,
        a: last,
        r: levels[levels.len().saturating_sub(2)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn evaluations() {
        assert_eq!(SlowVaryingFn::constant(1.0).eval(123.0).unwrap(), 1.0);
        let e = std::f64::consts::E;
        assert_relative_eq!(SlowVaryingFn::log_shift().eval(e - 1.0).unwrap(), 2.0, max_relative = 1e-15);
        // oracle: 1 + ln(10001) computed from log10
        let oracle = 1.0 + 10001f64.log10() * std::f64::consts::LN_10;
        assert_relative_eq!(SlowVaryingFn::log_shift().eval(1e4).unwrap(), oracle, max_relative = 1e-14);
        assert_relative_eq!(SlowVaryingFn::log_shift().eval(1e4).unwrap(), 10.21044, epsilon = 5e-6);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(SlowVaryingFn::log_shift().eval(0.0), Err(Error::Domain(_))));
        assert!(matches!(SlowVaryingFn::iter_log().eval(-2.0), Err(Error::Domain(_))));
        assert!(SlowVaryingFn::new(SlowKind::Constant { value: 0.0 }, VaryingAt::Infinity).is_err());
        assert!(SlowVaryingFn::new(SlowKind::PowerProbe { rho: 0.0 }, VaryingAt::Infinity).is_err());
    }

    #[test]
    fn slow_variation_at_extreme_grid_point() {
        for ell in [SlowVaryingFn::constant(2.0), SlowVaryingFn::log_shift(), SlowVaryingFn::iter_log()] {
            for lam in [0.5, 2.0] {
                let r = ell.eval(lam * 1e8).unwrap() / ell.eval(1e8).unwrap();
                assert!((r - 1.0).abs() <= 0.05, "{} λ={lam}: {r}", ell.name());
            }
        }
        for kind in [SlowKind::LogShift, SlowKind::IterLog] {
            let ell = SlowVaryingFn::at_zero_via_reciprocal(kind);
            for lam in [0.5, 2.0] {
                let r = ell.eval(lam * 1e-8).unwrap() / ell.eval(1e-8).unwrap();
                assert!((r - 1.0).abs() <= 0.05, "{} λ={lam}: {r}", ell.name());
            }
        }
        // The probe is visibly not slowly varying.
        let p = SlowVaryingFn::power_probe(0.2);
        let r = p.eval(2e8).unwrap() / p.eval(1e8).unwrap();
        assert!((r - 1.0).abs() > 0.1);
    }

    #[test]
    fn potter_constant_is_trivial() {
        let res = potter_check(&SlowVaryingFn::constant(1.0), 0.1, &potter_s_grid(VaryingAt::Infinity), &potter_c_grid())
            .unwrap();
        assert!(res.holds);
        assert_eq!(res.a, 1.0);
        assert_eq!(res.r, 0.0);
    }

    #[test]
    fn potter_log_shift_holds_on_short_grid() {
        let s: Vec<f64> = (0..=8).map(|k| 10f64.powi(k)).collect();
        let c: Vec<f64> = (1..=4).map(|k| 10f64.powi(-k)).collect();
        let res = potter_check(&SlowVaryingFn::log_shift(), 0.1, &s, &c).unwrap();
        assert!(res.holds);
        // oracle: brute-force maximum of both one-sided ratios over the grid
        let ell = SlowVaryingFn::log_shift();
        let mut oracle: f64 = 1.0;
        for &si in &s {
            for &ci in &c {
                let q = ell.eval(si).unwrap() / ell.eval(ci * si).unwrap();
                oracle = oracle.max(q * ci.powf(0.1)).max(ci.powf(0.1) / q);
            }
        }
        assert_relative_eq!(res.a, oracle, max_relative = 1e-12);
    }

    #[test]
    fn potter_power_probe_fails() {
        let res = potter_check(&SlowVaryingFn::power_probe(0.2), 0.1, &potter_s_grid(VaryingAt::Infinity), &potter_c_grid())
            .unwrap();
        assert!(!res.holds);
        // Direct evaluation: the needed constant is c^{-0.1} at c = 1e-80.
        assert_relative_eq!(res.a, 1e8, max_relative = 1e-9);
    }

    #[test]
    fn potter_rejects_bad_grids() {
        let ell = SlowVaryingFn::log_shift();
        assert!(potter_check(&ell, 0.1, &[], &[0.5]).is_err());
        assert!(potter_check(&ell, 0.1, &[10.0], &[1.5]).is_err());
        assert!(potter_check(&ell, 0.0, &[10.0], &[0.5]).is_err());
    }

    #[test]
    fn serde_shape() {
        let ell: SlowVaryingFn = serde_json::from_str(r#"{"kind":"log-shift"}"#).unwrap();
        assert_eq!(ell, SlowVaryingFn::log_shift());
        let ell: SlowVaryingFn =
            serde_json::from_str(r#"{"kind":"power-probe","rho":0.2,"varying_at":"zero-plus"}"#).unwrap();
        assert_eq!(ell.kind, SlowKind::PowerProbe { rho: 0.2 });
        assert_eq!(ell.varying_at, VaryingAt::ZeroPlus);
    }
}
