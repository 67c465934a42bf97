//! Adaptive Gauss–Kronrod quadrature with helpers for integrable endpoint
//! singularities at zero and exponentially decaying tails.

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const MAX_SUBINTERVALS: usize = 2000;
const MAX_PANELS: usize = 400;

/// Relative and absolute error targets. The achieved error satisfies
/// `err <= max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-9,
            abs: 1e-300,
        }
    }
}

impl Tolerance {
    fn bound(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (1.0f64).min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Estimate { value, error: err }
}

/// Globally adaptive GK21 on a finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numeric(format!(
            "finite interval required, got [{a}, {b}]"
        )));
    }
    let first = gk21(&f, a, b);
    let mut parts = vec![(a, b, first)];
    let mut total = first.value;
    let mut total_err = first.error;
    loop {
        if !(total.is_finite() && total_err.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if total_err <= tol.bound(total) {
            break;
        }
        if parts.len() >= MAX_SUBINTERVALS {
            return Err(Error::Numeric(format!(
                "quadrature on [{a}, {b}] did not converge: estimate {total:e}, error {total_err:e} after {MAX_SUBINTERVALS} subintervals"
            )));
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.error.total_cmp(&y.1 .2.error))
            .expect("non-empty");
        let (lo, hi, est) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval at floating-point resolution; accept what we have.
            parts.push((lo, hi, Estimate { value: est.value, error: 0.0 }));
            total_err -= est.error;
            continue;
        }
        let left = gk21(&f, lo, mid);
        let right = gk21(&f, mid, hi);
        total += left.value + right.value - est.value;
        total_err += left.error + right.error - est.error;
        parts.push((lo, mid, left));
        parts.push((mid, hi, right));
    }
    // Re-sum to drop accumulated update rounding.
    let value = parts.iter().map(|p| p.2.value).sum();
    let error = parts.iter().map(|p| p.2.error).sum();
    Ok(Estimate { value, error })
}

/// ∫_a^∞ f over panels of doubling width starting at `width`. Suited to
/// integrands with exponential (or faster than x^-2) decay.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    width: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    if !(width > 0.0) {
        return Err(Error::Numeric(format!("panel width must be positive, got {width}")));
    }
    let mut total: f64 = 0.0;
    let mut err = 0.0;
    let mut lo = a;
    let mut w = width;
    let mut quiet = 0;
    for _ in 0..MAX_PANELS {
        let hi = lo + w;
        let panel_tol = Tolerance {
            rel: tol.rel,
            abs: tol.abs.max(0.1 * tol.rel * total.abs()),
        };
        let est = integrate(&f, lo, hi, panel_tol)?;
        total += est.value;
        err += est.error;
        // Panels before any mass is seen do not count as quiet: the integrand
        // may vanish numerically near `a` (e.g. e^{-x} far out) and only
        // become visible further along.
        let negligible = est.value.abs() <= 0.01 * tol.rel * total.abs() || est.value.abs() <= tol.abs;
        if total != 0.0 && negligible {
            quiet += 1;
            if quiet >= 2 {
                return Ok(Estimate { value: total, error: err });
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        w *= 2.0;
        if !lo.is_finite() {
            break;
        }
    }
    if total == 0.0 {
        return Ok(Estimate { value: 0.0, error: err });
    }
    Err(Error::Numeric(format!(
        "tail integral from {a} did not settle: running value {total:e}"
    )))
}

/// ∫_0^b f for integrands with an integrable singularity at the origin,
/// via the substitution x = b·e^{-u}.
pub fn integrate_from_zero<F: Fn(f64) -> f64>(f: F, b: f64, tol: Tolerance) -> Result<Estimate> {
    if !(b > 0.0) {
        return Err(Error::Numeric(format!("upper limit must be positive, got {b}")));
    }
    let g = |u: f64| {
        let x = b * (-u).exp();
        if x <= 0.0 {
            0.0
        } else {
            f(x) * x
        }
    };
    integrate_to_infinity(g, 0.0, 1.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_integrate_constants() {
        let est = gk21(&|_| 1.0, -1.0, 1.0);
        assert_relative_eq!(est.value, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn polynomial_is_exact() {
        let est = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert_relative_eq!(est.value, 64.0 / 6.0 - 8.0, max_relative = 1e-13);
    }

    #[test]
    fn singular_endpoint() {
        // ∫_0^1 x^{-0.9} dx = 10
        let est = integrate_from_zero(|x| x.powf(-0.9), 1.0, Tolerance::default()).unwrap();
        assert_relative_eq!(est.value, 10.0, max_relative = 1e-8);
        // ∫_0^1 x^{-1/2} log(1/x) dx = 4
        let est = integrate_from_zero(|x| x.powf(-0.5) * (1.0 / x).ln(), 1.0, Tolerance::default())
            .unwrap();
        assert_relative_eq!(est.value, 4.0, max_relative = 1e-8);
    }

    #[test]
    fn exponential_tail() {
        let est = integrate_to_infinity(|x| (-x).exp(), 1.0, 1.0, Tolerance::default()).unwrap();
        assert_relative_eq!(est.value, (-1.0f64).exp(), max_relative = 1e-10);
        let lam = 1e-4;
        let est =
            integrate_to_infinity(|x| (-lam * x).exp() * x.powf(-0.5), 1.0 / lam, 1.0 / lam, Tolerance::default())
                .unwrap();
        // Γ(1/2, 1)·λ^{-1/2}
        let expected = crate::special::upper_incomplete_gamma(0.5, 1.0) * lam.powf(-0.5);
        assert_relative_eq!(est.value, expected, max_relative = 1e-8);
    }

    #[test]
    fn mass_after_leading_zeros() {
        // e^{-x} underflows on [0, 1e3]; mass sits in the far panels of u.
        let est = integrate_from_zero(|x| (-x).exp(), 1e4, Tolerance::default())
            .unwrap();
        assert_relative_eq!(est.value, 1.0, max_relative = 1e-8);
        let zero = integrate_to_infinity(|_| 0.0, 0.0, 1.0, Tolerance::default()).unwrap();
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let res = integrate(|x| if x > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, Tolerance::default());
        assert!(res.is_err());
    }
}
