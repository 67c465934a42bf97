//! Simulation and numerical verification of first-passage undershoots for
//! subordinators.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] – parametric subordinators, the Laplace exponent and the Lévy tail.
//! * [`sampler`] – jump-level Monte Carlo of the path up to first passage.
//! * [`regvar`] – slowly varying functions, Karamata ratios and Potter bounds.
//! * [`transform`] – the double Laplace transform of the undershoot, its Monte
//!   Carlo counterpart and Gaver–Stehfest inversion.
//! * [`limits`] – Beta limit laws, large-deviation targets and verifiers.
//! * [`harness`] – experiment configs, CSV output, plots and the CLI driver.

// `!(x > 0.0)` is used on purpose so that NaN is rejected with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod limits;
pub mod model;
pub mod quad;
pub mod regvar;
pub mod rng;
pub mod sampler;
pub mod special;
pub mod transform;

pub use error::{Error, Result};
pub use limits::{
    beta_cdf, beta_cdf_small_t_asymptote, dl_theorem_check, ks_distance, lde_estimate,
    lde_target, lde_theorem_check, scaled_probability_check, EmpiricalCdf, LdeTarget, Range,
};
pub use model::{gamma_fn, levy_tail, phi, Family, JumpLaw, LaplaceExponentEval, SubordinatorSpec};
pub use regvar::{ell_eval, karamata_ratio, potter_check, SlowKind, SlowVaryingFn, VaryingAt};
pub use sampler::{
    batch_passages, sample_passage, small_jump_drift, PassageSample, TruncationPolicy,
};
pub use transform::{dl_empirical, dl_theoretical, invert_laplace_gs, scaled_dl_limit_check};

/// Toolkit version recorded in result metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
