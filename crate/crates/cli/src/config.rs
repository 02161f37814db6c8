//! Experiment configuration files.

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use stochassign::learn::{Averaging, LearnerConfig, StepSchedule, TruncationSchedule};
use stochassign::numerics::is_conjugate_closed;
use stochassign::{AssignmentSpec, GeneralSystem, Mode, NoiseDistribution, PlantParams};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Discrete,
    Continuous,
}

impl From<ModeName> for Mode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Discrete => Mode::Discrete,
            ModeName::Continuous => Mode::Continuous,
        }
    }
}

/// `(H, L, F)` with matrices as row-major nested lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub h: Vec<Vec<f64>>,
    pub l: Vec<Vec<f64>>,
    pub f: Vec<f64>,
}

/// `(A, B, Ā, B̄)` of a system with state- and control-dependent noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralBlock {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub abar: Vec<Vec<f64>>,
    pub bbar: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignmentBlock {
    pub alpha: f64,
    /// `[re, im]` pairs.
    pub lambdas: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionName {
    #[default]
    Gaussian,
    Rademacher,
}

impl From<DistributionName> for NoiseDistribution {
    fn from(d: DistributionName) -> Self {
        match d {
            DistributionName::Gaussian => NoiseDistribution::Gaussian,
            DistributionName::Rademacher => NoiseDistribution::Rademacher,
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    /// Variance of `w(k)`; discrete mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Observation window `δt`; continuous mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "one")]
    pub substeps: usize,
    #[serde(default)]
    pub distribution: DistributionName,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepBlock {
    pub scale: f64,
    pub offset: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationBlock {
    pub base: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AveragingName {
    #[default]
    Cumulative,
    PerRound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerBlock {
    pub epsilon: f64,
    pub step: StepBlock,
    pub truncation: TruncationBlock,
    pub averaging: AveragingName,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_init: Option<Vec<f64>>,
    pub index_cap: usize,
    pub p_max: usize,
    pub s_cap: usize,
    pub trace_tail: usize,
}

impl Default for LearnerBlock {
    fn default() -> Self {
        let d = LearnerConfig::default();
        Self {
            epsilon: d.epsilon,
            step: StepBlock {
                scale: d.step.scale,
                offset: d.step.offset,
                exponent: d.step.exponent,
            },
            truncation: TruncationBlock {
                base: d.bound.base,
                slope: d.bound.slope,
            },
            averaging: AveragingName::Cumulative,
            k_init: None,
            index_cap: d.index_cap,
            p_max: d.p_max,
            s_cap: d.s_cap,
            trace_tail: d.trace_tail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub mode: ModeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub general: Option<GeneralBlock>,
    pub assignment: AssignmentBlock,
    #[serde(default)]
    pub noise: NoiseBlock,
    #[serde(default)]
    pub learner: LearnerBlock,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "one")]
    pub repeats: usize,
    #[serde(default)]
    pub output: OutputBlock,
}

/// Either form of the plant, converted to matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Reduced(PlantParams),
    General(GeneralSystem),
}

fn to_matrix(name: &str, rows: &[Vec<f64>], errors: &mut Vec<String>) -> Option<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        errors.push(format!("{name}: matrix must be non-empty"));
        return None;
    }
    if rows.iter().any(|row| row.len() != c) {
        errors.push(format!("{name}: rows have different lengths"));
        return None;
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        errors.push(format!("{name}: entries must be finite"));
        return None;
    }
    Some(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl ExperimentConfig {
    pub fn mode(&self) -> Mode {
        self.mode.into()
    }

    pub fn lambdas(&self) -> Vec<Complex64> {
        self.assignment
            .lambdas
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect()
    }

    pub fn spec(&self) -> Result<AssignmentSpec, CliError> {
        Ok(AssignmentSpec::new(self.mode(), self.assignment.alpha, self.lambdas())?)
    }

    /// State dimension, if the system block is readable.
    pub fn dim(&self) -> Option<usize> {
        match (&self.system, &self.general) {
            (Some(s), None) => Some(s.h.len()),
            (None, Some(g)) => Some(g.a.len()),
            _ => None,
        }
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let mut errors = Vec::new();
        let model = self.build_model(&mut errors);
        match model {
            Some(m) if errors.is_empty() => Ok(m),
            _ => Err(CliError::Validation(errors)),
        }
    }

    fn build_model(&self, errors: &mut Vec<String>) -> Option<Model> {
        match (&self.system, &self.general) {
            (Some(_), Some(_)) => {
                errors.push("exactly one of `system` and `general` may be given, found both".into());
                None
            }
            (None, None) => {
                errors.push("one of `system` or `general` is required".into());
                None
            }
            (Some(s), None) => {
                let h = to_matrix("system.h", &s.h, errors);
                let l = to_matrix("system.l", &s.l, errors);
                if s.f.iter().any(|v| !v.is_finite()) {
                    errors.push("system.f: entries must be finite".into());
                }
                let f = DVector::from_vec(s.f.clone());
                match PlantParams::new(h?, l?, f) {
                    Ok(p) => Some(Model::Reduced(p)),
                    Err(e) => {
                        errors.push(format!("system: {e}"));
                        None
                    }
                }
            }
            (None, Some(g)) => {
                let a = to_matrix("general.a", &g.a, errors);
                let b = to_matrix("general.b", &g.b, errors);
                let abar = to_matrix("general.abar", &g.abar, errors);
                let bbar = to_matrix("general.bbar", &g.bbar, errors);
                match GeneralSystem::new(a?, b?, abar?, bbar?) {
                    Ok(sys) => {
                        if sys.inputs() != sys.dim() + 1 {
                            errors.push(format!(
                                "general: B and Bbar need n + 1 = {} columns, found {}",
                                sys.dim() + 1,
                                sys.inputs()
                            ));
                        }
                        Some(Model::General(sys))
                    }
                    Err(e) => {
                        errors.push(format!("general: {e}"));
                        None
                    }
                }
            }
        }
    }

    pub fn learner_config(&self) -> LearnerConfig {
        let l = &self.learner;
        LearnerConfig {
            epsilon: l.epsilon,
            step: StepSchedule {
                scale: l.step.scale,
                offset: l.step.offset,
                exponent: l.step.exponent,
            },
            bound: TruncationSchedule {
                base: l.truncation.base,
                slope: l.truncation.slope,
            },
            averaging: match l.averaging {
                AveragingName::Cumulative => Averaging::Cumulative,
                AveragingName::PerRound => Averaging::PerRound,
            },
            k_init: l.k_init.clone().map(RowDVector::from_vec),
            index_cap: l.index_cap,
            p_max: l.p_max,
            s_cap: l.s_cap,
            trace_tail: l.trace_tail,
        }
    }

    /// Every violated invariant, or `Ok` when the config is usable.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut errors = Vec::new();
        self.build_model(&mut errors);
        let n = self.dim();
        let mode = self.mode();
        let alpha = self.assignment.alpha;
        if !alpha.is_finite() {
            errors.push("assignment.alpha must be finite".into());
        }
        let lambdas = self.lambdas();
        if lambdas.iter().any(|l| !l.re.is_finite() || !l.im.is_finite()) {
            errors.push("assignment.lambdas must be finite".into());
        }
        if let Some(n) = n {
            if lambdas.len() != n {
                errors.push(format!(
                    "assignment.lambdas lists {} values, the system has n = {n}",
                    lambdas.len()
                ));
            }
        }
        match mode {
            Mode::Discrete => {
                if !is_conjugate_closed(&lambdas, 1e-9) {
                    errors.push("assignment.lambdas must be closed under conjugation".into());
                }
                match self.noise.delta {
                    Some(d) if d >= 0.0 && d.is_finite() => {}
                    Some(_) => errors.push("noise.delta must be finite and >= 0".into()),
                    None => errors.push("noise.delta is required in discrete mode".into()),
                }
                if self.noise.dt.is_some() {
                    errors.push("noise.dt only applies to continuous mode".into());
                }
            }
            Mode::Continuous => {
                if lambdas.iter().any(|l| l.im.abs() > 1e-12) {
                    errors.push("assignment.lambdas must be real in continuous mode".into());
                }
                match self.noise.dt {
                    Some(dt) if dt > 0.0 && dt.is_finite() => {}
                    Some(_) => errors.push("noise.dt must be finite and > 0".into()),
                    None => errors.push("noise.dt is required in continuous mode".into()),
                }
                if self.noise.delta.is_some() {
                    errors.push("noise.delta only applies to discrete mode".into());
                }
            }
        }
        if self.noise.substeps == 0 {
            errors.push("noise.substeps must be >= 1".into());
        }
        if let Err(e) = self.learner_config().validate() {
            errors.push(format!("learner: {e}"));
        }
        if let (Some(k), Some(n)) = (&self.learner.k_init, n) {
            if k.len() != n {
                errors.push(format!("learner.k_init must have {n} entries"));
            }
        }
        if self.repeats == 0 {
            errors.push("repeats must be >= 1".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(errors))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Parses and validates a JSON experiment config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Gain given on the command line: comma or whitespace separated numbers,
/// optionally wrapped in brackets.
pub fn parse_gain(text: &str) -> Result<Vec<f64>, CliError> {
    let body = text.trim();
    let body = body
        .strip_prefix('[')
        .and_then(|b| b.strip_suffix(']'))
        .unwrap_or(body);
    let values: Result<Vec<f64>, _> = body
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect();
    match values {
        Ok(v) if v.is_empty() => Err(CliError::Validation(vec!["gain is empty".into()])),
        Ok(v) if v.iter().any(|x| !x.is_finite()) => {
            Err(CliError::Validation(vec!["gain entries must be finite".into()]))
        }
        Ok(v) => Ok(v),
        Err(e) => Err(CliError::Validation(vec![format!("gain: {e}")])),
    }
}

pub const EXAMPLE1: &str = include_str!("../configs/example1.json");
pub const EXAMPLE2: &str = include_str!("../configs/example2.json");

/// Bundled config by name.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "example1" => Some(EXAMPLE1),
        "example2" => Some(EXAMPLE2),
        _ => None,
    }
}
