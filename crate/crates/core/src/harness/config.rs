//! Experiment configuration: JSON schema, defaults, validation and hashing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::limits::{ContractionFn, Range, C_FN_KINDS};
use crate::model::{SubordinatorSpec, FAMILY_KINDS};
use crate::regvar::{SlowVaryingFn, ELL_KINDS};
use crate::sampler::TruncationPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Raw passage samples.
    Simulate,
    /// Dynkin–Lamperti: KS distance to Beta(α, 1−α).
    VerifyDl,
    /// Large-deviation ratio to target (or the normalized two-parameter
    /// limit when `t` or `x` differ from 1).
    VerifyLde,
    /// Double Laplace transform, Monte Carlo against closed form.
    VerifyDlt,
    Karamata,
    Potter,
}

pub const EXPERIMENTS: &[&str] = &["simulate", "verify-dl", "verify-lde", "verify-dlt", "karamata", "potter"];

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::VerifyDl => "verify-dl",
            Experiment::VerifyLde => "verify-lde",
            Experiment::VerifyDlt => "verify-dlt",
            Experiment::Karamata => "karamata",
            Experiment::Potter => "potter",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        serde_json::from_value(Value::String(name.to_string()))
            .map_err(|_| unknown("experiment", name, EXPERIMENTS))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// verify-dl: pass iff KS ≤ ks.
    #[serde(default = "d_ks")]
    pub ks: f64,
    /// verify-lde: pass iff ratio ∈ [ratio_low, ratio_high].
    #[serde(default = "d_ratio_low")]
    pub ratio_low: f64,
    #[serde(default = "d_ratio_high")]
    pub ratio_high: f64,
    /// verify-dlt: pass iff |diff| ≤ sigmas·stderr + tail bound + allowance.
    #[serde(default = "d_sigmas")]
    pub sigmas: f64,
    #[serde(default)]
    pub allowance: f64,
    /// karamata: pass iff |ratio − expected| ≤ tol, or ratio ≤ max when set.
    #[serde(default = "d_one")]
    pub karamata_expected: f64,
    #[serde(default = "d_karamata_tol")]
    pub karamata_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub karamata_max: Option<f64>,
    /// potter: pass iff holds == potter_expected.
    #[serde(default = "d_true")]
    pub potter_expected: bool,
}

fn d_ks() -> f64 {
    0.015
}
fn d_ratio_low() -> f64 {
    0.9
}
fn d_ratio_high() -> f64 {
    1.1
}
fn d_sigmas() -> f64 {
    3.0
}
fn d_one() -> f64 {
    1.0
}
fn d_karamata_tol() -> f64 {
    0.02
}
fn d_true() -> bool {
    true
}

impl Default for Thresholds {
    fn default() -> Self {
        serde_json::from_value(Value::Object(Default::default())).expect("all fields defaulted")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub spec: SubordinatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "d_ell")]
    pub ell: SlowVaryingFn,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_fn: Option<ContractionFn>,
    #[serde(default = "d_s_list")]
    pub s_list: Vec<f64>,
    #[serde(default = "d_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub policy: TruncationPolicy,
    #[serde(default = "d_range")]
    pub range: Range,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// verify-lde: passage level s·t, threshold x·c(s)·s.
    #[serde(default = "d_one")]
    pub t: f64,
    #[serde(default = "d_one")]
    pub x: f64,
    /// verify-dlt grid.
    #[serde(default = "d_transform_grid")]
    pub q_list: Vec<f64>,
    #[serde(default = "d_transform_grid")]
    pub lambda_list: Vec<f64>,
    #[serde(default = "d_t_step")]
    pub t_step: f64,
    /// karamata evaluation points.
    #[serde(default)]
    pub x_list: Vec<f64>,
    /// potter exponents.
    #[serde(default = "d_epsilon_list")]
    pub epsilon_list: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn d_ell() -> SlowVaryingFn {
    SlowVaryingFn::constant(1.0)
}
fn d_s_list() -> Vec<f64> {
    vec![1.0]
}
fn d_n() -> usize {
    100_000
}
fn d_range() -> Range {
    Range::Long
}
fn d_transform_grid() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn d_t_step() -> f64 {
    0.05
}
fn d_epsilon_list() -> Vec<f64> {
    vec![0.1]
}

fn unknown(what: &'static str, given: &str, options: &[&str]) -> Error {
    let suggestion = options
        .iter()
        .max_by(|a, b| strsim::jaro_winkler(given, a).total_cmp(&strsim::jaro_winkler(given, b)))
        .copied()
        .unwrap_or_default();
    Error::UnknownName {
        what,
        given: given.to_string(),
        suggestion: suggestion.to_string(),
    }
}

fn check_kind(v: Option<&Value>, what: &'static str, options: &[&str]) -> Result<()> {
    if let Some(Value::String(k)) = v.and_then(|o| o.get("kind")) {
        if !options.contains(&k.as_str()) {
            return Err(unknown(what, k, options));
        }
    }
    Ok(())
}

fn check_alpha_value(v: Option<&Value>, place: &str) -> Result<()> {
    if let Some(a) = v.and_then(Value::as_f64) {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Range(format!("{place} must lie in (0,1), got {a}")));
        }
    }
    Ok(())
}

/// Name and range checks that need the raw document.
fn prevalidate(doc: &Value) -> Result<()> {
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::Format("config must be a JSON object".into()))?;
    if let Some(Value::String(e)) = obj.get("experiment") {
        Experiment::parse(e)?;
    }
    let family = obj.get("spec").and_then(|s| s.get("family"));
    check_kind(family, "family", FAMILY_KINDS)?;
    check_kind(obj.get("ell"), "ell", ELL_KINDS)?;
    check_kind(obj.get("c_fn"), "c_fn", C_FN_KINDS)?;
    check_alpha_value(obj.get("alpha"), "alpha")?;
    check_alpha_value(family.and_then(|f| f.get("alpha")), "spec.family.alpha")?;
    if let Some(Value::String(r)) = obj.get("range") {
        if r != "long" && r != "short" {
            return Err(unknown("range", r, &["long", "short"]));
        }
    }
    Ok(())
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(parse_error)?;
        prevalidate(&doc)?;
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(parse_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Static checks, including every hypothesis gate that does not need
    /// simulation.
    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        self.ell.validate()?;
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Range(format!("alpha must lie in (0,1), got {a}")));
            }
        }
        if self.n == 0 {
            return Err(Error::Range("n must be at least 1".into()));
        }
        if self.s_list.is_empty() || self.s_list.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Range("s_list must be non-empty and positive".into()));
        }
        let needs_alpha = matches!(
            self.experiment,
            Experiment::VerifyDl | Experiment::VerifyLde | Experiment::Karamata
        );
        if needs_alpha && self.alpha.is_none() {
            return Err(Error::Spec(format!("{} needs alpha", self.experiment.as_str())));
        }
        match self.experiment {
            Experiment::VerifyLde => {
                let c_fn = self
                    .c_fn
                    .as_ref()
                    .ok_or_else(|| Error::Spec("verify-lde needs c_fn".into()))?;
                c_fn.validate_on(self.range, &self.s_list)?;
                if !(self.t > 0.0 && self.x > 0.0) {
                    return Err(Error::Range(format!("t and x must be positive, got t={}, x={}", self.t, self.x)));
                }
                if !(self.thresholds.ratio_low < self.thresholds.ratio_high) {
                    return Err(Error::Range("ratio_low must be below ratio_high".into()));
                }
            }
            Experiment::VerifyDlt => {
                let all = self.q_list.iter().chain(&self.lambda_list);
                if self.q_list.is_empty() || self.lambda_list.is_empty() || all.clone().any(|v| !(*v > 0.0)) {
                    return Err(Error::Range("q_list and lambda_list must be non-empty and positive".into()));
                }
                if !(self.t_step > 0.0) {
                    return Err(Error::Range(format!("t_step must be positive, got {}", self.t_step)));
                }
            }
            Experiment::Karamata => {
                if self.x_list.is_empty() || self.x_list.iter().any(|x| !(*x > 0.0)) {
                    return Err(Error::Range("karamata needs a non-empty positive x_list".into()));
                }
            }
            Experiment::Potter => {
                if self.epsilon_list.is_empty() || self.epsilon_list.iter().any(|e| !(*e > 0.0)) {
                    return Err(Error::Range("epsilon_list must be non-empty and positive".into()));
                }
            }
            Experiment::Simulate | Experiment::VerifyDl => {}
        }
        Ok(())
    }

    /// SHA-256 of the canonical form: the defaulted config without its
    /// output path, serialized with sorted keys.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output = None;
        let value = serde_json::to_value(&canon).expect("config serializes");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_json(&std::fs::read_to_string(path)?)
}
