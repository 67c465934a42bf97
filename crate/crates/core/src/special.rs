//! Gamma-family special functions.

use statrs::function::gamma as sg;

use crate::error::{Error, Result};

/// Γ(z) for z > 0.
pub fn gamma_fn(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("gamma requires z > 0, got {z}")));
    }
    Ok(sg::gamma(z))
}

pub fn ln_gamma(z: f64) -> f64 {
    sg::ln_gamma(z)
}

/// Upper incomplete gamma Γ(a, x) = ∫_x^∞ t^{a-1} e^{-t} dt, a > 0, x ≥ 0.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return sg::gamma(a);
    }
    sg::gamma_ur(a, x) * sg::gamma(a)
}

/// Lower incomplete gamma γ(a, x) = ∫_0^x t^{a-1} e^{-t} dt, a > 0, x ≥ 0.
pub fn lower_incomplete_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    // For tiny x the series leading term is more accurate than P(a,x)·Γ(a).
    if x < 1e-8 {
        return x.powf(a) * (1.0 / a - x / (a + 1.0));
    }
    sg::gamma_lr(a, x) * sg::gamma(a)
}
