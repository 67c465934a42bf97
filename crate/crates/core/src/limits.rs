//! Limit laws for the undershoot ratio X_{T(s)−}/s and the verifiers that
//! compare simulated passages against them.
//!
//! * the Beta(α, 1−α) law of the Dynkin–Lamperti theorem and its small-t
//!   asymptote sin(πα)/(πα)·t^α;
//! * the large-deviation target sin(πα)/(πα)·ℓ(s)/ℓ(c(s)s)·c(s)^α for
//!   P(X_{T(s)−}/s ≤ c(s)) as s → ∞ (long range) or s → 0+ (short range);
//! * the two-parameter normalized limit sin(πα)/(πα)·t^{−α}x^α of
//!   ℓ(cs)/(c^α ℓ(s))·P(X_{T(st)−}/(cs) ≤ x).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Family, SubordinatorSpec};
use crate::regvar::{SlowKind, SlowVaryingFn, VaryingAt};
use crate::rng::derive_seed;
use crate::sampler::{CreepReport, PassageSample, PassageSampler, TruncationPolicy};

/// 97.5% standard normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Minimum expected count of qualifying samples (target·N) for a rare-event
/// run; keeps the relative standard error at or below 5%.
pub const MIN_EXPECTED_HITS: f64 = 400.0;

const CF_MAX_ITER: usize = 500;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Range(format!("alpha must lie in (0,1), got {alpha}")))
    }
}

/// sin(πα)/(πα)
pub fn small_t_constant(alpha: f64) -> f64 {
    (PI * alpha).sin() / (PI * alpha)
}

/// CDF of Beta(α, 1−α) at t, by the continued fraction for the regularized
/// incomplete beta function (modified Lentz). B(α, 1−α) = π / sin(πα).
pub fn beta_cdf(alpha: f64, t: f64) -> Result<f64> {
    check_alpha(alpha).map_err(|e| Error::Domain(e.to_string()))?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("beta_cdf needs t in [0,1], got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if t == 1.0 {
        return Ok(1.0);
    }
    let (a, b) = (alpha, 1.0 - alpha);
    if t > (a + 1.0) / (a + b + 2.0) {
        Ok(1.0 - incomplete_beta_cf(b, a, 1.0 - t)?)
    } else {
        incomplete_beta_cf(a, b, t)
    }
}

/// I_x(a, b) for a + b = 1.
fn incomplete_beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let ln_beta = (PI / (PI * a).sin()).ln();
    let prefix = (a * x.ln() + b * (-x).ln_1p() - ln_beta).exp() / a;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            return Ok(prefix * h);
        }
    }
    Err(Error::Numeric(format!(
        "incomplete beta continued fraction did not converge at x = {x}"
    )))
}

/// sin(πα)/(πα)·t^α
pub fn beta_cdf_small_t_asymptote(alpha: f64, t: f64) -> f64 {
    small_t_constant(alpha) * t.powf(alpha)
}

/// Sorted sample of undershoot ratios in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    values: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("empirical CDF values must lie in [0,1], got {v}")));
        }
        values.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { values })
    }

    pub fn from_samples(samples: &[PassageSample]) -> Result<Self> {
        Self::new(samples.iter().map(PassageSample::ratio).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// F̂(x) = #{v ≤ x}/n
    pub fn eval(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }
}

/// sup_x |F̂(x) − F(x)|, evaluated on both sides of every jump of F̂.
pub fn ks_distance<F: Fn(f64) -> f64>(ecdf: &EmpiricalCdf, cdf: F) -> Result<f64> {
    if ecdf.is_empty() {
        return Err(Error::Domain("KS distance of an empty sample".into()));
    }
    let n = ecdf.len() as f64;
    let v = &ecdf.values;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        let x = v[i];
        let mut j = i;
        while j < v.len() && v[j] == x {
            j += 1;
        }
        let f = cdf(x);
        let below = i as f64 / n;
        let at = j as f64 / n;
        d = d.max((at - f).abs()).max((below - f).abs());
        i = j;
    }
    Ok(d)
}

/// Two-sample KS statistic sup_x |F̂_a(x) − F̂_b(x)|.
pub fn ks_two_sample(a: &EmpiricalCdf, b: &EmpiricalCdf) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("KS distance of an empty sample".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.values.len() && j < b.values.len() {
        let x = a.values[i].min(b.values[j]);
        while i < a.values.len() && a.values[i] <= x {
            i += 1;
        }
        while j < b.values.len() && b.values[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Right-hand side of the large-deviation estimate at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdeTarget {
    pub alpha: f64,
    pub ell: SlowVaryingFn,
    pub s: f64,
    pub c: f64,
}

impl LdeTarget {
    pub fn value(&self) -> Result<f64> {
        lde_target(self.alpha, &self.ell, self.s, self.c)
    }
}

/// sin(πα)/(πα)·ℓ(s)/ℓ(cs)·c^α
pub fn lde_target(alpha: f64, ell: &SlowVaryingFn, s: f64, c: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Range(format!("c must lie in (0,1), got {c}")));
    }
    if !(s > 0.0) {
        return Err(Error::Domain(format!("level must be positive, got {s}")));
    }
    Ok(small_t_constant(alpha) * (ell.eval(s)? / ell.eval(c * s)?) * c.powf(alpha))
}

/// Point estimate with a 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionEstimate {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

pub fn wilson_interval(hits: usize, n: usize) -> ProportionEstimate {
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z_95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ProportionEstimate {
        p_hat: p,
        ci_low: (center - half).max(0.0),
        ci_high: (center + half).min(1.0),
        n,
    }
}

fn fraction_at_or_below(samples: &[PassageSample], c: f64) -> ProportionEstimate {
    let hits = samples.iter().filter(|p| p.undershoot / p.level <= c).count();
    wilson_interval(hits, samples.len())
}

/// Fraction of samples with undershoot/level ≤ c, with Wilson interval.
pub fn lde_estimate(samples: &[PassageSample], c: f64) -> Result<ProportionEstimate> {
    if samples.is_empty() {
        return Err(Error::Domain("lde_estimate needs at least one sample".into()));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Range(format!("c must lie in (0,1), got {c}")));
    }
    let level = samples[0].level;
    if samples.iter().any(|p| p.level != level) {
        return Err(Error::Domain("lde_estimate samples must share one level".into()));
    }
    Ok(fraction_at_or_below(samples, c))
}

/// Direction of the level limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Range {
    /// s → ∞; Φ regularly varying at 0+.
    Long,
    /// s → 0+; Φ regularly varying at ∞.
    Short,
}

impl Range {
    pub fn as_str(&self) -> &'static str {
        match self {
            Range::Long => "long",
            Range::Short => "short",
        }
    }
}

/// Gate: Φ must be regularly varying with index `alpha` at 0+ (long range)
/// or at ∞ (short range).
pub fn check_regular_variation(spec: &SubordinatorSpec, alpha: f64, range: Range) -> Result<()> {
    check_alpha(alpha)?;
    let at_zero = range == Range::Long;
    let index = spec.phi_index(at_zero)?;
    let tol = if matches!(spec.family(), Family::TabulatedTail(_)) {
        0.1
    } else {
        1e-9
    };
    let place = if at_zero { "0+" } else { "infinity" };
    if !(index > 0.0 && index < 1.0) {
        return Err(Error::Hypothesis(format!(
            "Φ of the {} family is regularly varying at {place} with index {index}, outside (0,1)",
            spec.family_name()
        )));
    }
    if (index - alpha).abs() > tol {
        return Err(Error::Hypothesis(format!(
            "Φ is regularly varying at {place} with index {index:.4}, not alpha = {alpha}"
        )));
    }
    Ok(())
}

/// Result of a Dynkin–Lamperti check at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynkinLampertiCheck {
    pub s: f64,
    pub n: usize,
    pub ks: f64,
    pub threshold: f64,
    pub pass: bool,
    pub artificial_creep_share: f64,
}

/// Simulate `n` undershoot ratios at level `s` and measure their KS distance
/// to Beta(α, 1−α).
#[allow(clippy::too_many_arguments)]
pub fn dl_theorem_check(
    spec: &SubordinatorSpec,
    alpha: f64,
    s: f64,
    n: usize,
    policy: &TruncationPolicy,
    seed: u64,
    range: Range,
    ks_threshold: f64,
) -> Result<DynkinLampertiCheck> {
    check_regular_variation(spec, alpha, range)?;
    let samples = PassageSampler::new(spec, s, policy)?.batch(n, seed)?;
    let ecdf = EmpiricalCdf::from_samples(&samples)?;
    let ks = ks_distance(&ecdf, |t| beta_cdf(alpha, t).unwrap_or(f64::NAN))?;
    let creep = CreepReport::new(spec, &samples);
    Ok(DynkinLampertiCheck {
        s,
        n,
        ks,
        threshold: ks_threshold,
        pass: ks <= ks_threshold,
        artificial_creep_share: creep.artificial_share(),
    })
}

/// The cutoff used for the two-ε diagnostic: ten times `policy.eps_rel`,
/// or `None` when that would reach the level itself.
pub fn coarse_policy(policy: &TruncationPolicy) -> Option<TruncationPolicy> {
    let eps_rel = 10.0 * policy.eps_rel;
    (eps_rel < 1.0).then_some(TruncationPolicy { eps_rel, ..*policy })
}

/// Two-sample KS distance between undershoot ratios drawn with `policy`
/// and with [`coarse_policy`], on the same streams.
pub fn truncation_sensitivity(
    spec: &SubordinatorSpec,
    s: f64,
    n: usize,
    policy: &TruncationPolicy,
    seed: u64,
) -> Result<Option<f64>> {
    let Some(coarse) = coarse_policy(policy) else {
        return Ok(None);
    };
    let fine = PassageSampler::new(spec, s, policy)?.batch(n, seed)?;
    let rough = PassageSampler::new(spec, s, &coarse)?.batch(n, seed)?;
    ks_two_sample(&EmpiricalCdf::from_samples(&fine)?, &EmpiricalCdf::from_samples(&rough)?).map(Some)
}

/// Closed set of contraction schedules c(s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ContractionFn {
    /// c(s) = scale·s^exponent
    Power {
        exponent: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// c(s) = exp(−√|ln s|): slow enough that ℓ(s)/ℓ(c(s)s) → 1 for
    /// logarithmic ℓ, while c(s) → 0 and c(s)s → ∞.
    LogSpeed,
    /// c(s) = value; never satisfies c(s) → 0.
    Constant { value: f64 },
}

fn one() -> f64 {
    1.0
}

pub const C_FN_KINDS: &[&str] = &["power", "log-speed", "constant"];

impl ContractionFn {
    pub fn power(exponent: f64) -> Self {
        ContractionFn::Power { exponent, scale: 1.0 }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            ContractionFn::Power { exponent, scale } => scale * s.powf(exponent),
            ContractionFn::LogSpeed => (-s.ln().abs().sqrt()).exp(),
            ContractionFn::Constant { value } => value,
        }
    }

    /// Analytic part of the hypothesis gate: c(s) → 0 (and, long range,
    /// c(s)s → ∞) along the limit direction.
    pub fn check_form(&self, range: Range) -> Result<()> {
        match (*self, range) {
            (ContractionFn::Constant { value }, _) => Err(Error::Hypothesis(format!(
                "c(s) = {value} does not tend to 0"
            ))),
            (ContractionFn::Power { exponent, .. }, Range::Long) if !(exponent < 0.0) => {
                Err(Error::Hypothesis(format!(
                    "c(s) = s^{exponent} does not tend to 0 as s → ∞"
                )))
            }
            (ContractionFn::Power { exponent, .. }, Range::Long) if !(exponent > -1.0) => {
                Err(Error::Hypothesis(format!(
                    "c(s)·s = s^{} does not tend to ∞ as s → ∞",
                    1.0 + exponent
                )))
            }
            (ContractionFn::Power { exponent, .. }, Range::Short) if !(exponent > 0.0) => {
                Err(Error::Hypothesis(format!(
                    "c(s) = s^{exponent} does not tend to 0 as s → 0+"
                )))
            }
            (ContractionFn::Power { scale, .. }, _) if !(scale > 0.0) => {
                Err(Error::Hypothesis(format!("c(s) scale must be positive, got {scale}")))
            }
            _ => Ok(()),
        }
    }

    /// Full gate: analytic form plus the numerical trend along `s_list`.
    pub fn validate_on(&self, range: Range, s_list: &[f64]) -> Result<()> {
        self.check_form(range)?;
        if s_list.is_empty() {
            return Err(Error::Domain("level list must be non-empty".into()));
        }
        for &s in s_list {
            if !(s > 0.0) {
                return Err(Error::Domain(format!("levels must be positive, got {s}")));
            }
            let c = self.eval(s);
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::Hypothesis(format!("c({s}) = {c} is outside (0,1)")));
            }
        }
        let mut ordered = s_list.to_vec();
        match range {
            Range::Long => ordered.sort_by(f64::total_cmp),
            Range::Short => ordered.sort_by(|a, b| b.total_cmp(a)),
        }
        for w in ordered.windows(2) {
            let (c0, c1) = (self.eval(w[0]), self.eval(w[1]));
            if !(c1 < c0) {
                return Err(Error::Hypothesis(format!(
                    "c(s) does not decrease toward the limit between s = {} and s = {}",
                    w[0], w[1]
                )));
            }
            if range == Range::Long && !(c1 * w[1] > c0 * w[0]) {
                return Err(Error::Hypothesis(format!(
                    "c(s)·s does not increase between s = {} and s = {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }
}

fn check_ell(ell: &SlowVaryingFn, range: Range) -> Result<()> {
    ell.validate()?;
    if !ell.is_slowly_varying() {
        return Err(Error::Hypothesis(format!("{} is not slowly varying", ell.name())));
    }
    let want = match range {
        Range::Long => VaryingAt::Infinity,
        Range::Short => VaryingAt::ZeroPlus,
    };
    if !matches!(ell.kind, SlowKind::Constant { .. }) && ell.varying_at != want {
        return Err(Error::Hypothesis(format!(
            "{} varies slowly at {:?}, but the {} range needs {want:?}",
            ell.name(),
            ell.varying_at,
            range.as_str()
        )));
    }
    Ok(())
}

/// One level of a large-deviation check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdeRow {
    pub s: f64,
    pub c: f64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub target: f64,
    /// p_hat / target
    pub ratio: f64,
    pub n: usize,
    pub artificial_creep_share: f64,
}

/// Parameters shared by the large-deviation verifiers.
#[derive(Debug, Clone)]
pub struct LdeSetup<'a> {
    pub spec: &'a SubordinatorSpec,
    pub alpha: f64,
    pub ell: &'a SlowVaryingFn,
    pub c_fn: &'a ContractionFn,
    pub s_list: &'a [f64],
    pub n: usize,
    pub policy: TruncationPolicy,
    pub seed: u64,
    pub range: Range,
}

impl LdeSetup<'_> {
    fn gate(&self) -> Result<()> {
        check_regular_variation(self.spec, self.alpha, self.range)?;
        check_ell(self.ell, self.range)?;
        self.c_fn.validate_on(self.range, self.s_list)?;
        if self.n == 0 {
            return Err(Error::Domain("sample count must be at least 1".into()));
        }
        Ok(())
    }

    fn check_budget(&self, s: f64, expected_p: f64) -> Result<()> {
        if expected_p * (self.n as f64) < MIN_EXPECTED_HITS {
            return Err(Error::Hypothesis(format!(
                "rare-event budget: expected hits target·N = {:.1} < {MIN_EXPECTED_HITS} at s = {s}",
                expected_p * self.n as f64
            )));
        }
        Ok(())
    }

    /// Per-level stream family; shared by both verifiers so that t = x = 1
    /// reproduces the same samples.
    fn level_seed(&self, index: usize) -> u64 {
        derive_seed(self.seed, index as u64)
    }
}

/// Estimate P(X_{T(s)−}/s ≤ c(s)) at every level and compare with the
/// large-deviation target.
pub fn lde_theorem_check(setup: &LdeSetup<'_>) -> Result<Vec<LdeRow>> {
    setup.gate()?;
    let mut rows = Vec::with_capacity(setup.s_list.len());
    for (k, &s) in setup.s_list.iter().enumerate() {
        let c = setup.c_fn.eval(s);
        let target = lde_target(setup.alpha, setup.ell, s, c)?;
        setup.check_budget(s, target)?;
        let samples = PassageSampler::new(setup.spec, s, &setup.policy)?.batch(setup.n, setup.level_seed(k))?;
        let est = lde_estimate(&samples, c)?;
        rows.push(LdeRow {
            s,
            c,
            p_hat: est.p_hat,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            target,
            ratio: est.p_hat / target,
            n: setup.n,
            artificial_creep_share: CreepReport::new(setup.spec, &samples).artificial_share(),
        });
    }
    Ok(rows)
}

/// One level of the normalized two-parameter check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledRow {
    pub s: f64,
    pub c: f64,
    /// P̂(X_{T(st)−}/(c s) ≤ x)
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// ℓ(cs)/(c^α ℓ(s))
    pub factor: f64,
    /// factor·p_hat
    pub normalized: f64,
    /// sin(πα)/(πα)·t^{−α}x^α
    pub limit: f64,
}

pub fn scaled_limit(alpha: f64, t: f64, x: f64) -> f64 {
    small_t_constant(alpha) * t.powf(-alpha) * x.powf(alpha)
}

/// For each level s, estimate ℓ(cs)/(c^α ℓ(s))·P(X_{T(st)−}/(cs) ≤ x) and
/// pair it with its limit. At t = x = 1 the sampled probabilities are
/// bit-identical to [`lde_theorem_check`] under the same setup.
pub fn scaled_probability_check(setup: &LdeSetup<'_>, t: f64, x: f64) -> Result<Vec<ScaledRow>> {
    if !(t > 0.0 && x > 0.0) {
        return Err(Error::Domain(format!("t and x must be positive, got t={t}, x={x}")));
    }
    setup.gate()?;
    let limit = scaled_limit(setup.alpha, t, x);
    let mut rows = Vec::with_capacity(setup.s_list.len());
    for (k, &s) in setup.s_list.iter().enumerate() {
        let c = setup.c_fn.eval(s);
        let norm = setup.ell.eval(c * s)? / (c.powf(setup.alpha) * setup.ell.eval(s)?);
        setup.check_budget(s, limit / norm)?;
        let level = s * t;
        let samples = PassageSampler::new(setup.spec, level, &setup.policy)?.batch(setup.n, setup.level_seed(k))?;
        // X/(cs) ≤ x  ⇔  X/(st) ≤ x·c/t
        let est = fraction_at_or_below(&samples, x * c / t);
        rows.push(ScaledRow {
            s,
            c,
            p_hat: est.p_hat,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            factor: norm,
            normalized: norm * est.p_hat,
            limit,
        });
    }
    Ok(rows)
}

#[cfg(test)]
#[allow(clippy::approx_constant)] // pinned six-place literals
mod tests {
    use super::*;
    use crate::quad::{integrate_from_zero, Tolerance};
    use approx::assert_relative_eq;

    /// Quadrature of the Beta(α,1−α) density, independent of the continued fraction.
    fn beta_cdf_oracle(alpha: f64, t: f64) -> f64 {
        let k = (PI * alpha).sin() / PI;
        let tol = Tolerance { rel: 1e-13, abs: 1e-300 };
        if t <= 0.5 {
            k * integrate_from_zero(|x| x.powf(alpha - 1.0) * (1.0 - x).powf(-alpha), t, tol).unwrap().value
        } else {
            1.0 - k * integrate_from_zero(|y| (1.0 - y).powf(alpha - 1.0) * y.powf(-alpha), 1.0 - t, tol).unwrap().value
        }
    }

    #[test]
    fn beta_cdf_examples() {
        assert_eq!(beta_cdf(0.3, 1.0).unwrap(), 1.0);
        assert_relative_eq!(beta_cdf(0.5, 0.5).unwrap(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(beta_cdf(0.5, 0.25).unwrap(), 1.0 / 3.0, max_relative = 1e-10);
        assert_relative_eq!(beta_cdf(0.5, 0.25).unwrap(), beta_cdf_oracle(0.5, 0.25), max_relative = 1e-10);
    }

    #[test]
    fn beta_cdf_matches_quadrature() {
        for &alpha in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            for &t in &[1e-6, 1e-3, 0.01, 0.2, 0.5, 0.77, 0.99, 0.999999] {
                let v = beta_cdf(alpha, t).unwrap();
                let o = beta_cdf_oracle(alpha, t);
                assert!(((v - o) / o).abs() <= 1e-10, "α={alpha} t={t}: {v} vs {o}");
            }
        }
    }

    #[test]
    fn beta_cdf_domain() {
        assert!(matches!(beta_cdf(0.5, 1.5), Err(Error::Domain(_))));
        assert!(matches!(beta_cdf(0.5, -0.1), Err(Error::Domain(_))));
        assert!(beta_cdf(1.0, 0.5).is_err());
    }

    #[test]
    fn small_t_asymptote() {
        assert_relative_eq!(beta_cdf_small_t_asymptote(0.5, 0.01), 0.2 / PI, max_relative = 1e-14);
        assert_relative_eq!(beta_cdf_small_t_asymptote(0.5, 0.01), 0.063662, epsilon = 1e-6);
        assert_relative_eq!(beta_cdf_small_t_asymptote(0.5, 1.0), 0.636620, epsilon = 1e-6);
        let ratio = beta_cdf(0.5, 0.01).unwrap() / beta_cdf_small_t_asymptote(0.5, 0.01);
        // arcsin series: 1 + t/6 + 3t²/40 + …
        assert_relative_eq!(ratio, 1.0 + 0.01 / 6.0 + 3.0 * 1e-4 / 40.0, max_relative = 1e-6);
        assert_relative_eq!(ratio, 1.0017, epsilon = 5e-5);
        for &alpha in &[0.3, 0.5, 0.7] {
            for &t in &[1e-2, 1e-3, 1e-4] {
                let r = beta_cdf(alpha, t).unwrap() / beta_cdf_small_t_asymptote(alpha, t);
                assert!((r - 1.0).abs() <= 2.0 * t, "α={alpha} t={t} r={r}");
            }
        }
    }

    #[test]
    fn ks_examples() {
        // quantile lattice F^{-1}(i/n) for the uniform law
        let n = 50;
        let e = EmpiricalCdf::new((1..=n).map(|i| i as f64 / n as f64).collect()).unwrap();
        assert!(ks_distance(&e, |x| x).unwrap() <= 1.0 / n as f64 + 1e-15);
        let e = EmpiricalCdf::new(vec![0.5]).unwrap();
        assert_relative_eq!(ks_distance(&e, |x| x).unwrap(), 0.5);
        let e = EmpiricalCdf::new(vec![0.75, 0.25]).unwrap();
        assert_relative_eq!(ks_distance(&e, |x| x).unwrap(), 0.25);
        assert!(ks_distance(&EmpiricalCdf::new(vec![]).unwrap(), |x| x).is_err());
        assert!(EmpiricalCdf::new(vec![1.2]).is_err());
    }

    #[test]
    fn ks_ties() {
        let e = EmpiricalCdf::new(vec![0.5, 0.5, 0.5, 0.9]).unwrap();
        // at 0.5: F̂ jumps 0 → 0.75 vs F = 0.5
        assert_relative_eq!(ks_distance(&e, |x| x).unwrap(), 0.5);
        let a = EmpiricalCdf::new(vec![0.1, 0.2, 0.3]).unwrap();
        let b = EmpiricalCdf::new(vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(ks_two_sample(&a, &b).unwrap(), 0.0);
        let b = EmpiricalCdf::new(vec![0.6, 0.7]).unwrap();
        assert_eq!(ks_two_sample(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn lde_target_examples() {
        let one = SlowVaryingFn::constant(1.0);
        assert_relative_eq!(lde_target(0.5, &one, 3.0, 0.01).unwrap(), 0.2 / PI, max_relative = 1e-14);
        assert_relative_eq!(lde_target(0.4, &one, 3.0, 1.0).unwrap(), small_t_constant(0.4), max_relative = 1e-14);
        let v = lde_target(0.5, &SlowVaryingFn::log_shift(), 1e4, 0.01).unwrap();
        let oracle = 0.2 / PI * (1.0 + 10001f64.ln()) / (1.0 + 101f64.ln());
        assert_relative_eq!(v, oracle, max_relative = 1e-14);
        assert_relative_eq!(v, 0.11576, epsilon = 1e-5);
        for &a in &[0.2, 0.5, 0.8] {
            for &c in &[1e-3, 0.1, 0.6] {
                assert_eq!(
                    lde_target(a, &one, 10.0, c).unwrap(),
                    beta_cdf_small_t_asymptote(a, c)
                );
            }
        }
    }

    fn fake(level: f64, us: &[f64]) -> Vec<PassageSample> {
        us.iter()
            .map(|&u| PassageSample {
                level,
                crossing_time: 1.0,
                undershoot: u,
                overshoot: if u == level { 0.0 } else { 0.1 },
                crept: u == level,
            })
            .collect()
    }

    #[test]
    fn lde_estimate_counting() {
        let all_crept = fake(2.0, &[2.0; 10]);
        assert_eq!(lde_estimate(&all_crept, 0.5).unwrap().p_hat, 0.0);
        let half = fake(1.0, &[0.1, 0.2, 0.8, 0.9]);
        let est = lde_estimate(&half, 0.5).unwrap();
        assert_eq!(est.p_hat, 0.5);
        assert!(est.ci_low < 0.5 && est.ci_high > 0.5);
        assert!(matches!(lde_estimate(&[], 0.5), Err(Error::Domain(_))));
        let mixed = [fake(1.0, &[0.1]), fake(2.0, &[0.1])].concat();
        assert!(lde_estimate(&mixed, 0.5).is_err());
    }

    #[test]
    fn wilson_half_width() {
        // p = 0.063769 at N = 10^6 → half-width ≈ 0.00048
        let est = wilson_interval(63_776, 1_000_000);
        assert_relative_eq!(0.5 * (est.ci_high - est.ci_low), 0.00048, epsilon = 1e-5);
    }

    #[test]
    fn contraction_gates() {
        let s = [1e2, 1e3, 1e4];
        assert!(ContractionFn::power(-0.4).validate_on(Range::Long, &s).is_ok());
        assert!(matches!(
            ContractionFn::Constant { value: 0.5 }.validate_on(Range::Long, &s),
            Err(Error::Hypothesis(_))
        ));
        assert!(ContractionFn::power(-1.0).validate_on(Range::Long, &s).is_err());
        assert!(ContractionFn::power(0.3).validate_on(Range::Long, &s).is_err());
        assert!(ContractionFn::power(0.3).validate_on(Range::Short, &[1e-2, 1e-3]).is_ok());
        assert!(ContractionFn::LogSpeed.validate_on(Range::Long, &[1e4, 1e8, 1e16]).is_ok());
        assert!(ContractionFn::LogSpeed.validate_on(Range::Short, &[1e-4, 1e-8]).is_ok());
        // scale pushes c above 1 on the list
        let c = ContractionFn::Power { exponent: -0.1, scale: 5.0 };
        assert!(c.validate_on(Range::Long, &[10.0]).is_err());
    }

    #[test]
    fn log_speed_ratio_tends_to_one() {
        let ell = SlowVaryingFn::log_shift();
        let c = ContractionFn::LogSpeed;
        let r = |s: f64| ell.eval(s).unwrap() / ell.eval(c.eval(s) * s).unwrap();
        assert!(r(1e100) < r(1e10));
        assert!((r(1e100) - 1.0).abs() < 0.08);
    }

    #[test]
    fn hypothesis_gate_for_regular_variation() {
        let cp = SubordinatorSpec::compound_poisson_exp(1.0, 1.0).unwrap();
        assert!(matches!(check_regular_variation(&cp, 0.5, Range::Long), Err(Error::Hypothesis(_))));
        let st = SubordinatorSpec::stable(0.5, 1.0).unwrap();
        assert!(check_regular_variation(&st, 0.5, Range::Long).is_ok());
        assert!(check_regular_variation(&st, 0.4, Range::Long).is_err());
        let ts = SubordinatorSpec::tempered_stable(0.5, 1.0, 1.0).unwrap();
        assert!(check_regular_variation(&ts, 0.5, Range::Short).is_ok());
        assert!(check_regular_variation(&ts, 0.5, Range::Long).is_err());
    }

    #[test]
    fn scaled_limit_values() {
        assert_relative_eq!(scaled_limit(0.5, 4.0, 1.0), 1.0 / PI, max_relative = 1e-14);
        assert_relative_eq!(scaled_limit(0.5, 1.0, 0.25), 1.0 / PI, max_relative = 1e-14);
        assert_relative_eq!(scaled_limit(0.5, 4.0, 1.0), 0.318310, epsilon = 1e-6);
    }
}
