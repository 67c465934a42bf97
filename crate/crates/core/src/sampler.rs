//! Jump-level Monte Carlo of a subordinator up to first passage over a
//! level s.
//!
//! Jumps larger than ε = eps_rel·s arrive as a Poisson process with rate
//! Π(ε,∞); between jumps the path grows linearly at rate d + δ(ε), where
//! δ(ε) = ∫_0^ε x Π(dx) compensates the discarded small jumps. Compound
//! Poisson families are simulated exactly with no cutoff.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Family, JumpLaw, SubordinatorSpec, TabulatedTail};
use crate::rng::{open_unit, substream};
use crate::special::ln_gamma;

/// Default budget on the expected number of jumps in one passage.
pub const DEFAULT_JUMP_BUDGET: f64 = 1e7;

/// Share of artificially crept samples (d = 0 but the compensating drift
/// crossed the level) above which a run is flagged.
pub const ARTIFICIAL_CREEP_LIMIT: f64 = 1e-3;

/// Small-jump cutoff and compensation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    #[serde(default = "default_eps_rel")]
    pub eps_rel: f64,
    #[serde(default = "default_compensate")]
    pub compensate: bool,
}

fn default_eps_rel() -> f64 {
    1e-5
}
fn default_compensate() -> bool {
    true
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            eps_rel: default_eps_rel(),
            compensate: default_compensate(),
        }
    }
}

impl TruncationPolicy {
    pub fn new(eps_rel: f64, compensate: bool) -> Result<Self> {
        let p = TruncationPolicy { eps_rel, compensate };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_rel > 0.0 && self.eps_rel < 1.0 {
            Ok(())
        } else {
            Err(Error::Range(format!("eps_rel must lie in (0,1), got {}", self.eps_rel)))
        }
    }
}

/// One first-passage record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageSample {
    pub level: f64,
    pub crossing_time: f64,
    /// X_{T(s)−}
    pub undershoot: f64,
    /// X_{T(s)} − s
    pub overshoot: f64,
    pub crept: bool,
}

impl PassageSample {
    pub fn ratio(&self) -> f64 {
        self.undershoot / self.level
    }

    pub fn invariants_hold(&self) -> bool {
        let base = self.level > 0.0
            && self.crossing_time > 0.0
            && self.undershoot >= 0.0
            && self.undershoot <= self.level
            && self.overshoot >= 0.0;
        if self.crept {
            base && self.overshoot == 0.0 && self.undershoot == self.level
        } else {
            // crossing jump = overshoot + (level − undershoot) > level − undershoot
            base && self.overshoot > 0.0
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum JumpSource<'a> {
    None,
    /// ε·U^{−1/α}
    Stable { eps: f64, inv_alpha: f64 },
    /// stable proposals accepted with probability e^{−θx}
    Tempered { eps: f64, inv_alpha: f64, theta: f64 },
    Compound(&'a JumpLaw),
    Tabulated { tail: &'a TabulatedTail, tail_eps: f64 },
}

/// A sampler for one (spec, level, policy), reusable across replicas.
#[derive(Debug, Clone)]
pub struct PassageSampler<'a> {
    level: f64,
    rate: f64,
    growth: f64,
    source: JumpSource<'a>,
    max_events: u64,
    artificial_creep_possible: bool,
}

impl<'a> PassageSampler<'a> {
    pub fn new(spec: &'a SubordinatorSpec, level: f64, policy: &TruncationPolicy) -> Result<Self> {
        Self::with_budget(spec, level, policy, DEFAULT_JUMP_BUDGET)
    }

    pub fn with_budget(
        spec: &'a SubordinatorSpec,
        level: f64,
        policy: &TruncationPolicy,
        jump_budget: f64,
    ) -> Result<Self> {
        if !(level > 0.0) || !level.is_finite() {
            return Err(Error::Domain(format!("level must be positive and finite, got {level}")));
        }
        policy.validate()?;
        let eps = policy.eps_rel * level;
        let (rate, source) = match spec.family() {
            Family::None => (0.0, JumpSource::None),
            Family::Stable { alpha, scale } => (
                stable_tail(*alpha, *scale, eps),
                JumpSource::Stable { eps, inv_alpha: 1.0 / alpha },
            ),
            Family::TemperedStable { alpha, theta, scale } => (
                stable_tail(*alpha, *scale, eps),
                JumpSource::Tempered { eps, inv_alpha: 1.0 / alpha, theta: *theta },
            ),
            Family::CompoundPoisson { rate, jump } => (*rate, JumpSource::Compound(jump)),
            Family::TabulatedTail(t) => {
                let tail_eps = t.eval(eps);
                (tail_eps, JumpSource::Tabulated { tail: t, tail_eps })
            }
        };
        let truncated = !spec.is_finite_activity() || matches!(source, JumpSource::Tabulated { .. });
        let delta = if policy.compensate && truncated && !matches!(source, JumpSource::Compound(_)) {
            spec.small_jump_drift(eps)?
        } else {
            0.0
        };
        let growth = spec.drift() + delta;
        if rate == 0.0 && growth == 0.0 {
            return Err(Error::NeverCrosses);
        }
        // Expected events per passage ≈ rate·E[T(s)], with E[T(s)] ≍ 1/Φ(1/s).
        let expected_time = if growth > 0.0 { level / growth } else { f64::INFINITY };
        let phi = spec.phi(1.0 / level)?;
        let expected_time = expected_time.min(if phi > 0.0 { 1.0 / phi } else { f64::INFINITY });
        let expected_events = rate * expected_time;
        if !(expected_events <= jump_budget) {
            return Err(Error::Resource(format!(
                "expected {expected_events:.3e} jumps per passage at level {level} exceeds budget {jump_budget:.1e}; raise eps_rel"
            )));
        }
        let max_events = (1000.0 * expected_events.max(1000.0)).min(1e12) as u64;
        Ok(PassageSampler {
            level,
            rate,
            growth,
            source,
            max_events,
            artificial_creep_possible: spec.drift() == 0.0 && delta > 0.0,
        })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    /// Rate of (proposed) jumps above the cutoff.
    pub fn jump_rate(&self) -> f64 {
        self.rate
    }

    /// Linear growth rate between jumps, including compensation.
    pub fn growth_rate(&self) -> f64 {
        self.growth
    }

    /// True when d = 0 and all creeping comes from compensation drift.
    pub fn creep_is_artificial(&self) -> bool {
        self.artificial_creep_possible
    }

    #[inline]
    fn draw_jump<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        match self.source {
            JumpSource::None => None,
            JumpSource::Stable { eps, inv_alpha } => Some(eps * open_unit(rng).powf(-inv_alpha)),
            JumpSource::Tempered { eps, inv_alpha, theta } => {
                let x = eps * open_unit(rng).powf(-inv_alpha);
                if rng.random::<f64>() < (-theta * x).exp() {
                    Some(x)
                } else {
                    None
                }
            }
            JumpSource::Compound(law) => Some(law.inverse_survival(open_unit(rng))),
            JumpSource::Tabulated { tail, tail_eps } => Some(tail.inverse(open_unit(rng) * tail_eps)),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PassageSample> {
        let s = self.level;
        let mut x = 0.0f64;
        let mut t = 0.0f64;
        for _ in 0..self.max_events {
            let tau = if self.rate > 0.0 {
                -open_unit(rng).ln() / self.rate
            } else {
                f64::INFINITY
            };
            if self.growth > 0.0 && s - x < self.growth * tau {
                let sample = PassageSample {
                    level: s,
                    crossing_time: t + (s - x) / self.growth,
                    undershoot: s,
                    overshoot: 0.0,
                    crept: true,
                };
                debug_assert!(sample.invariants_hold(), "{sample:?}");
                return Ok(sample);
            }
            if !tau.is_finite() {
                return Err(Error::NeverCrosses);
            }
            x = (x + self.growth * tau).min(s);
            t += tau;
            if let Some(j) = self.draw_jump(rng) {
                if x + j > s {
                    let sample = PassageSample {
                        level: s,
                        crossing_time: t,
                        undershoot: x,
                        overshoot: x + j - s,
                        crept: false,
                    };
                    debug_assert!(sample.invariants_hold(), "{sample:?}");
                    return Ok(sample);
                }
                x += j;
            }
        }
        Err(Error::Resource(format!(
            "passage over {s} not reached within {} events",
            self.max_events
        )))
    }

    /// `n` replicas, replica `i` drawing from substream `(seed, i)`; output
    /// ordered by replica index.
    pub fn batch(&self, n: usize, seed: u64) -> Result<Vec<PassageSample>> {
        let results: Vec<Result<PassageSample>> = (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(seed, i);
                self.sample(&mut rng).map_err(|e| Error::Replica {
                    index: i,
                    source: Box::new(e),
                })
            })
            .collect();
        results.into_iter().collect()
    }
}

fn stable_tail(alpha: f64, scale: f64, x: f64) -> f64 {
    scale * (-alpha * x.ln() - ln_gamma(1.0 - alpha)).exp()
}

pub fn sample_passage<R: Rng + ?Sized>(
    spec: &SubordinatorSpec,
    s: f64,
    policy: &TruncationPolicy,
    rng: &mut R,
) -> Result<PassageSample> {
    PassageSampler::new(spec, s, policy)?.sample(rng)
}

pub fn small_jump_drift(spec: &SubordinatorSpec, eps: f64) -> Result<f64> {
    spec.small_jump_drift(eps)
}

pub fn batch_passages(
    spec: &SubordinatorSpec,
    s: f64,
    policy: &TruncationPolicy,
    n: usize,
    seed: u64,
) -> Result<Vec<PassageSample>> {
    if n == 0 {
        return Err(Error::Domain("batch size must be at least 1".into()));
    }
    PassageSampler::new(spec, s, policy)?.batch(n, seed)
}

/// Creeping summary of a batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CreepReport {
    pub crept: usize,
    /// Creeps that can only come from compensation drift (d = 0).
    pub artificial: usize,
    pub total: usize,
}

impl CreepReport {
    pub fn new(spec: &SubordinatorSpec, samples: &[PassageSample]) -> Self {
        let crept = samples.iter().filter(|s| s.crept).count();
        let artificial = if spec.drift() == 0.0 { crept } else { 0 };
        CreepReport {
            crept,
            artificial,
            total: samples.len(),
        }
    }

    pub fn artificial_share(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.artificial as f64 / self.total as f64
        }
    }

    pub fn flagged(&self) -> bool {
        self.artificial_share() > ARTIFICIAL_CREEP_LIMIT
    }
}
