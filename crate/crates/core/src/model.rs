//! Parametric subordinators: drift plus a Lévy-measure family, with the
//! Laplace exponent Φ and the Lévy tail Π(x,∞).
//!
//! Φ is available in two routes. Closed forms exist for the stable,
//! tempered-stable and exponential compound Poisson families. Every family,
//! including tabulated tails, can also be evaluated by quadrature of
//!
//! ```text
//! Φ(λ) = λ (d + ∫_0^∞ e^{-λx} Π(x,∞) dx)
//! ```
//!
//! split at x = 1/λ, where the integrand changes character.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};
use crate::regvar::SlowVaryingFn;
use crate::special::{self, ln_gamma};

pub use crate::special::gamma_fn;

/// Jump-size law of a compound Poisson family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum JumpLaw {
    Exponential { mean: f64 },
    /// P(J > x) = (xmin/x)^alpha for x ≥ xmin.
    Pareto { alpha: f64, xmin: f64 },
}

impl JumpLaw {
    fn survival(&self, x: f64) -> f64 {
        match *self {
            JumpLaw::Exponential { mean } => (-x / mean).exp(),
            JumpLaw::Pareto { alpha, xmin } => {
                if x < xmin {
                    1.0
                } else {
                    (xmin / x).powf(alpha)
                }
            }
        }
    }

    /// Inverse survival function: x with P(J > x) = p, p ∈ (0,1].
    pub(crate) fn inverse_survival(&self, p: f64) -> f64 {
        match *self {
            JumpLaw::Exponential { mean } => -mean * p.ln(),
            JumpLaw::Pareto { alpha, xmin } => xmin * p.powf(-1.0 / alpha),
        }
    }
}

/// How a tabulated tail was produced; kept so configs round-trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TailSource {
    Table {
        x: Vec<f64>,
        tail: Vec<f64>,
    },
    /// Tabulates x^{-α} ℓ(x) / Γ(1-α) on a log grid.
    Generator { generator: TailGenerator },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailGenerator {
    pub alpha: f64,
    pub ell: SlowVaryingFn,
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_points_per_decade")]
    pub points_per_decade: usize,
}

fn default_x_min() -> f64 {
    1e-12
}
fn default_x_max() -> f64 {
    1e16
}
fn default_points_per_decade() -> usize {
    40
}

impl TailGenerator {
    pub fn new(alpha: f64, ell: SlowVaryingFn) -> Self {
        TailGenerator {
            alpha,
            ell,
            x_min: default_x_min(),
            x_max: default_x_max(),
            points_per_decade: default_points_per_decade(),
        }
    }

    fn build(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Range(format!(
                "tail generator alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        if !(self.x_min > 0.0 && self.x_max > self.x_min) || self.points_per_decade < 2 {
            return Err(Error::Spec(
                "tail generator needs 0 < x_min < x_max and at least 2 points per decade".into(),
            ));
        }
        self.ell.validate()?;
        let g = gamma_fn(1.0 - self.alpha)?;
        let decades = (self.x_max / self.x_min).log10();
        let n = (decades * self.points_per_decade as f64).ceil() as usize + 1;
        let lo = self.x_min.ln();
        let step = (self.x_max.ln() - lo) / (n - 1) as f64;
        let mut xs = Vec::with_capacity(n);
        let mut ts = Vec::with_capacity(n);
        for i in 0..n {
            let x = (lo + step * i as f64).exp();
            xs.push(x);
            ts.push(x.powf(-self.alpha) * self.ell.eval(x)? / g);
        }
        Ok((xs, ts))
    }
}

/// A monotone Lévy tail given at knots and interpolated linearly in
/// log–log coordinates, with power-law extrapolation from the end segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TailSource", into = "TailSource")]
pub struct TabulatedTail {
    source: TailSource,
    ln_x: Vec<f64>,
    ln_tail: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

impl TryFrom<TailSource> for TabulatedTail {
    type Error = Error;

    fn try_from(source: TailSource) -> Result<Self> {
        let (xs, ts) = match &source {
            TailSource::Table { x, tail } => (x.clone(), tail.clone()),
            TailSource::Generator { generator } => generator.build()?,
        };
        TabulatedTail::from_parts(source, &xs, &ts)
    }
}

impl From<TabulatedTail> for TailSource {
    fn from(t: TabulatedTail) -> Self {
        t.source
    }
}

impl TabulatedTail {
    pub fn from_table(x: Vec<f64>, tail: Vec<f64>) -> Result<Self> {
        TailSource::Table { x, tail }.try_into()
    }

    pub fn from_generator(generator: TailGenerator) -> Result<Self> {
        TailSource::Generator { generator }.try_into()
    }

    fn from_parts(source: TailSource, xs: &[f64], ts: &[f64]) -> Result<Self> {
        if xs.len() != ts.len() {
            return Err(Error::Spec(format!(
                "tabulated tail has {} abscissae but {} values",
                xs.len(),
                ts.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::Spec("tabulated tail needs at least two knots".into()));
        }
        for w in xs.windows(2) {
            if !(w[0] > 0.0 && w[1] > w[0] && w[1].is_finite()) {
                return Err(Error::Spec(
                    "tabulated tail abscissae must be positive and strictly increasing".into(),
                ));
            }
        }
        for (i, w) in ts.windows(2).enumerate() {
            if w[1] > w[0] {
                return Err(Error::Spec(format!(
                    "tabulated tail increases between knots {i} and {}",
                    i + 1
                )));
            }
        }
        if ts.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::Spec("tabulated tail values must be positive and finite".into()));
        }
        let ln_x: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ln_tail: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        let n = ln_x.len();
        let left_slope = (ln_tail[1] - ln_tail[0]) / (ln_x[1] - ln_x[0]);
        let right_slope = (ln_tail[n - 1] - ln_tail[n - 2]) / (ln_x[n - 1] - ln_x[n - 2]);
        if !(right_slope < 0.0) {
            return Err(Error::Spec(
                "tabulated tail must decrease over its last segment (no mass at infinity)".into(),
            ));
        }
        if left_slope <= -1.0 {
            return Err(Error::Spec(format!(
                "tabulated tail is not integrable at 0: local index {left_slope} <= -1"
            )));
        }
        let tab = TabulatedTail {
            source,
            ln_x,
            ln_tail,
            left_slope,
            right_slope,
        };
        // ∫_0^1 Π(x,∞) dx < ∞, checked numerically.
        let check = quad::integrate_from_zero(|x| tab.eval(x), 1.0, Tolerance { rel: 1e-8, abs: 1e-300 })
            .map_err(|e| Error::Spec(format!("integrability check failed: {e}")))?;
        if !check.value.is_finite() {
            return Err(Error::Spec("tabulated tail is not integrable near 0".into()));
        }
        Ok(tab)
    }

    pub fn source(&self) -> &TailSource {
        &self.source
    }

    pub fn knots(&self) -> usize {
        self.ln_x.len()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let lx = x.ln();
        let n = self.ln_x.len();
        if lx <= self.ln_x[0] {
            return (self.ln_tail[0] + self.left_slope * (lx - self.ln_x[0])).exp();
        }
        if lx >= self.ln_x[n - 1] {
            return (self.ln_tail[n - 1] + self.right_slope * (lx - self.ln_x[n - 1])).exp();
        }
        let k = self.ln_x.partition_point(|&v| v <= lx) - 1;
        let w = (lx - self.ln_x[k]) / (self.ln_x[k + 1] - self.ln_x[k]);
        (self.ln_tail[k] + w * (self.ln_tail[k + 1] - self.ln_tail[k])).exp()
    }

    /// Smallest x with tail(x) = y, for 0 < y ≤ tail at the smallest knot or
    /// within the left extrapolation.
    pub fn inverse(&self, y: f64) -> f64 {
        let ly = y.ln();
        let n = self.ln_x.len();
        if ly >= self.ln_tail[0] {
            if self.left_slope == 0.0 {
                return self.ln_x[0].exp();
            }
            return (self.ln_x[0] + (ly - self.ln_tail[0]) / self.left_slope).exp();
        }
        if ly <= self.ln_tail[n - 1] {
            return (self.ln_x[n - 1] + (ly - self.ln_tail[n - 1]) / self.right_slope).exp();
        }
        // ln_tail is non-increasing: first knot strictly below ly.
        let k = self.ln_tail.partition_point(|&v| v >= ly);
        let (t0, t1) = (self.ln_tail[k - 1], self.ln_tail[k]);
        let w = (ly - t0) / (t1 - t0);
        (self.ln_x[k - 1] + w * (self.ln_x[k] - self.ln_x[k - 1])).exp()
    }

    /// Tail index near 0+ implied by the left extrapolation.
    pub fn left_index(&self) -> f64 {
        -self.left_slope
    }
}

/// Lévy-measure family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    /// Φ(λ) = c λ^α.
    Stable { alpha: f64, scale: f64 },
    /// Φ(λ) = c ((λ+θ)^α − θ^α).
    TemperedStable { alpha: f64, theta: f64, scale: f64 },
    /// Finite activity: jumps at `rate` with the given size law.
    CompoundPoisson { rate: f64, jump: JumpLaw },
    TabulatedTail(TabulatedTail),
    /// No jumps; the process is pure drift.
    None,
}

pub const FAMILY_KINDS: &[&str] = &[
    "stable",
    "tempered-stable",
    "compound-poisson",
    "tabulated-tail",
    "none",
];

/// A subordinator: drift coefficient plus Lévy-measure family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct SubordinatorSpec {
    drift: f64,
    family: Family,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    #[serde(default)]
    drift: f64,
    family: Family,
}

impl TryFrom<RawSpec> for SubordinatorSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        SubordinatorSpec::new(raw.drift, raw.family)
    }
}

impl From<SubordinatorSpec> for RawSpec {
    fn from(s: SubordinatorSpec) -> Self {
        RawSpec {
            drift: s.drift,
            family: s.family,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Spec(format!("alpha must lie in (0,1), got {alpha}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Spec(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Which evaluation route a [`LaplaceExponentEval`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiMethod {
    ClosedForm,
    QuadratureOfTail,
}

impl SubordinatorSpec {
    pub fn new(drift: f64, family: Family) -> Result<Self> {
        if !(drift >= 0.0 && drift.is_finite()) {
            return Err(Error::Spec(format!("drift must be finite and >= 0, got {drift}")));
        }
        match &family {
            Family::Stable { alpha, scale } => {
                check_alpha(*alpha)?;
                check_positive("scale", *scale)?;
            }
            Family::TemperedStable { alpha, theta, scale } => {
                check_alpha(*alpha)?;
                check_positive("theta", *theta)?;
                check_positive("scale", *scale)?;
            }
            Family::CompoundPoisson { rate, jump } => {
                check_positive("rate", *rate)?;
                match *jump {
                    JumpLaw::Exponential { mean } => check_positive("mean", mean)?,
                    JumpLaw::Pareto { alpha, xmin } => {
                        check_positive("pareto alpha", alpha)?;
                        check_positive("xmin", xmin)?;
                    }
                }
            }
            Family::TabulatedTail(_) => {}
            Family::None => {
                if drift == 0.0 {
                    return Err(Error::Spec(
                        "process is identically zero: no drift and no jumps".into(),
                    ));
                }
            }
        }
        Ok(SubordinatorSpec { drift, family })
    }

    pub fn stable(alpha: f64, scale: f64) -> Result<Self> {
        Self::new(0.0, Family::Stable { alpha, scale })
    }

    pub fn tempered_stable(alpha: f64, theta: f64, scale: f64) -> Result<Self> {
        Self::new(0.0, Family::TemperedStable { alpha, theta, scale })
    }

    pub fn compound_poisson_exp(rate: f64, mean: f64) -> Result<Self> {
        Self::new(
            0.0,
            Family::CompoundPoisson {
                rate,
                jump: JumpLaw::Exponential { mean },
            },
        )
    }

    pub fn pure_drift(drift: f64) -> Result<Self> {
        Self::new(drift, Family::None)
    }

    pub fn tabulated(tail: TabulatedTail) -> Result<Self> {
        Self::new(0.0, Family::TabulatedTail(tail))
    }

    pub fn with_drift(mut self, drift: f64) -> Result<Self> {
        if !(drift >= 0.0 && drift.is_finite()) {
            return Err(Error::Spec(format!("drift must be finite and >= 0, got {drift}")));
        }
        self.drift = drift;
        Ok(self)
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Stable { .. } => "stable",
            Family::TemperedStable { .. } => "tempered-stable",
            Family::CompoundPoisson { .. } => "compound-poisson",
            Family::TabulatedTail(_) => "tabulated-tail",
            Family::None => "none",
        }
    }

    /// True when Π((0,∞)) < ∞.
    pub fn is_finite_activity(&self) -> bool {
        match &self.family {
            Family::CompoundPoisson { .. } | Family::None => true,
            Family::TabulatedTail(t) => t.left_slope == 0.0,
            _ => false,
        }
    }

    pub fn has_closed_form_phi(&self) -> bool {
        !matches!(
            self.family,
            Family::TabulatedTail(_)
                | Family::CompoundPoisson {
                    jump: JumpLaw::Pareto { .. },
                    ..
                }
        )
    }

    /// Π(x,∞) for x > 0.
    pub fn levy_tail(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || x.is_nan() {
            return Err(Error::Domain(format!("Lévy tail needs x > 0, got {x}")));
        }
        Ok(self.tail_unchecked(x))
    }

    pub(crate) fn tail_unchecked(&self, x: f64) -> f64 {
        match &self.family {
            Family::Stable { alpha, scale } => {
                scale * (-alpha * x.ln() - ln_gamma(1.0 - alpha)).exp()
            }
            Family::TemperedStable { alpha, theta, scale } => {
                tempered_tail(*alpha, *theta, *scale, x)
            }
            Family::CompoundPoisson { rate, jump } => rate * jump.survival(x),
            Family::TabulatedTail(t) => t.eval(x),
            Family::None => 0.0,
        }
    }

    /// Φ(λ) by the closed form when one exists, otherwise by quadrature.
    pub fn phi(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) || lambda.is_nan() {
            return Err(Error::Domain(format!("phi needs lambda >= 0, got {lambda}")));
        }
        if lambda == 0.0 {
            return Ok(0.0);
        }
        if lambda.is_infinite() {
            return Err(Error::Domain("phi needs finite lambda".into()));
        }
        match self.phi_closed_form(lambda) {
            Some(v) => Ok(v),
            None => self.phi_quadrature(lambda),
        }
    }

    /// Closed-form Φ, if the family has one.
    pub fn phi_closed_form(&self, lambda: f64) -> Option<f64> {
        let jumps = match &self.family {
            Family::Stable { alpha, scale } => scale * lambda.powf(*alpha),
            Family::TemperedStable { alpha, theta, scale } => {
                // (λ+θ)^α − θ^α without cancellation for λ ≪ θ
                scale * theta.powf(*alpha) * (alpha * (lambda / theta).ln_1p()).exp_m1()
            }
            Family::CompoundPoisson {
                rate,
                jump: JumpLaw::Exponential { mean },
            } => rate * lambda * mean / (1.0 + lambda * mean),
            Family::None => 0.0,
            _ => return None,
        };
        Some(self.drift * lambda + jumps)
    }

    /// Φ(λ) = λ(d + ∫ e^{−λx} Π(x,∞) dx), default tolerance 1e−9 relative.
    pub fn phi_quadrature(&self, lambda: f64) -> Result<f64> {
        self.phi_quadrature_tol(lambda, Tolerance::default())
    }

    pub fn phi_quadrature_tol(&self, lambda: f64, tol: Tolerance) -> Result<f64> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("phi needs finite lambda >= 0, got {lambda}")));
        }
        if lambda == 0.0 {
            return Ok(0.0);
        }
        if matches!(self.family, Family::None) {
            return Ok(self.drift * lambda);
        }
        let split = 1.0 / lambda;
        let f = |x: f64| (-lambda * x).exp() * self.tail_unchecked(x);
        let head = quad::integrate_from_zero(f, split, tol)
            .map_err(|e| Error::Numeric(format!("phi({lambda}) head integral: {e}")))?;
        let tail = quad::integrate_to_infinity(f, split, split, tol)
            .map_err(|e| Error::Numeric(format!("phi({lambda}) tail integral: {e}")))?;
        Ok(lambda * (self.drift + head.value + tail.value))
    }

    /// ∫_0^ε x Π(dx) = ∫_0^ε Π(x,∞)dx − εΠ(ε,∞): the mean rate of jumps
    /// below ε.
    pub fn small_jump_drift(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Domain(format!("cutoff must be positive, got {eps}")));
        }
        let v = match &self.family {
            Family::Stable { alpha, scale } => {
                scale * alpha / (1.0 - alpha) * (((1.0 - alpha) * eps.ln()) - ln_gamma(1.0 - alpha)).exp()
            }
            Family::TemperedStable { alpha, theta, scale } => {
                scale * alpha * theta.powf(alpha - 1.0)
                    * special::lower_incomplete_gamma(1.0 - alpha, theta * eps)
                    / gamma_fn(1.0 - alpha)?
            }
            Family::CompoundPoisson {
                rate,
                jump: JumpLaw::Exponential { mean },
            } => {
                let z = eps / mean;
                // 1 − e^{−z}(1+z), series for small z
                let core = if z < 1e-3 {
                    z * z / 2.0 - z * z * z / 3.0 + z.powi(4) / 8.0
                } else {
                    -(-z).exp_m1() - z * (-z).exp()
                };
                rate * mean * core
            }
            Family::CompoundPoisson {
                jump: JumpLaw::Pareto { xmin, .. },
                ..
            } if eps <= *xmin => 0.0,
            Family::None => 0.0,
            _ => {
                let tol = Tolerance { rel: 1e-9, abs: 1e-300 };
                let head = quad::integrate_from_zero(|x| self.tail_unchecked(x), eps, tol)
                    .map_err(|e| Error::Numeric(format!("small-jump drift: {e}")))?;
                (head.value - eps * self.tail_unchecked(eps)).max(0.0)
            }
        };
        Ok(v)
    }

    /// Index of regular variation of Φ at 0+ (`at_zero`) or at ∞, computed
    /// analytically where the family allows.
    pub fn phi_index(&self, at_zero: bool) -> Result<f64> {
        let d = self.drift;
        let idx = match (&self.family, at_zero) {
            (_, false) if d > 0.0 => 1.0,
            (Family::Stable { alpha, .. }, _) => *alpha,
            (Family::TemperedStable { .. }, true) => 1.0,
            (Family::TemperedStable { alpha, .. }, false) => *alpha,
            (Family::CompoundPoisson { .. }, false) => 0.0,
            (
                Family::CompoundPoisson {
                    jump: JumpLaw::Exponential { .. },
                    ..
                },
                true,
            ) => 1.0,
            (
                Family::CompoundPoisson {
                    jump: JumpLaw::Pareto { alpha, .. },
                    ..
                },
                true,
            ) => alpha.min(1.0),
            (Family::None, _) => 1.0,
            (Family::TabulatedTail(t), false) => t.left_index(),
            (Family::TabulatedTail(_), true) => {
                if d > 0.0 {
                    1.0
                } else {
                    // log-slope of Φ far into the small-λ regime
                    let l = 1e-12;
                    (self.phi(2.0 * l)? / self.phi(l)?).ln() / std::f64::consts::LN_2
                }
            }
        };
        Ok(idx)
    }
}

fn tempered_tail(alpha: f64, theta: f64, scale: f64, x: f64) -> f64 {
    // Π(x,∞) = c/Γ(1−α) [x^{−α} e^{−θx} − θ^α Γ(1−α, θx)]
    let z = theta * x;
    let g = special::gamma_fn(1.0 - alpha).unwrap_or(f64::NAN);
    if z > 30.0 {
        // Asymptotic series avoids the cancellation: the bracket equals
        // x^{−α}e^{−z}·α Σ_k (−1)^k (α+1)_k / z^{k+1}.
        let mut term = alpha / z;
        let mut sum = term;
        for k in 1..30 {
            term *= -(alpha + k as f64) / z;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return scale / g * (-alpha * x.ln() - z).exp() * sum;
    }
    let bracket = x.powf(-alpha) * (-z).exp()
        - theta.powf(alpha) * special::upper_incomplete_gamma(1.0 - alpha, z);
    (scale / g * bracket).max(0.0)
}

pub fn phi(spec: &SubordinatorSpec, lambda: f64) -> Result<f64> {
    spec.phi(lambda)
}

pub fn levy_tail(spec: &SubordinatorSpec, x: f64) -> Result<f64> {
    spec.levy_tail(x)
}

/// Φ evaluator bound to a spec and an evaluation route.
#[derive(Debug, Clone, Copy)]
pub struct LaplaceExponentEval<'a> {
    pub spec: &'a SubordinatorSpec,
    pub method: PhiMethod,
}

impl<'a> LaplaceExponentEval<'a> {
    pub fn new(spec: &'a SubordinatorSpec, method: PhiMethod) -> Result<Self> {
        if method == PhiMethod::ClosedForm && !spec.has_closed_form_phi() {
            return Err(Error::Spec(format!(
                "family {} has no closed-form Laplace exponent",
                spec.family_name()
            )));
        }
        Ok(LaplaceExponentEval { spec, method })
    }

    pub fn eval(&self, lambda: f64) -> Result<f64> {
        match self.method {
            PhiMethod::ClosedForm => self.spec.phi(lambda),
            PhiMethod::QuadratureOfTail => self.spec.phi_quadrature(lambda),
        }
    }
}
