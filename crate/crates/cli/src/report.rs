//! Machine-readable run reports.

use num_complex::Complex64;
use serde::Serialize;
use stochassign::SpectrumSet;

use crate::config::ExperimentConfig;

/// Spectrum values as `[re, im]` pairs.
pub fn pairs(values: &[Complex64]) -> Vec<[f64; 2]> {
    values.iter().map(|z| [z.re, z.im]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub achieved: Vec<[f64; 2]>,
    pub target: Vec<[f64; 2]>,
    /// Distance of each achieved value to its matched target value.
    pub errors: Vec<f64>,
    pub max_error: f64,
}

impl SpectrumReport {
    pub fn new(achieved: &SpectrumSet, target: &SpectrumSet) -> Self {
        let errors = achieved
            .errors_against(target)
            .unwrap_or_else(|| vec![f64::INFINITY; achieved.len().max(target.len())]);
        let max_error = errors.iter().copied().fold(0.0, f64::max);
        Self {
            achieved: pairs(achieved.values()),
            target: pairs(target.values()),
            errors,
            max_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    /// Row gain `K_v` (or `T_v`) on the reduced plant.
    pub kv: Vec<f64>,
    /// Gain on the original input of a general system, row-major.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_gain: Option<Vec<Vec<f64>>>,
    pub controllability_rcond: f64,
    pub closed_loop_eigenvalues: Vec<[f64; 2]>,
    pub spectrum: SpectrumReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnRun {
    pub seed: u64,
    pub stream: u64,
    pub converged: bool,
    pub gain: Vec<f64>,
    pub p_final: usize,
    pub index_final: usize,
    pub observations: u64,
    pub truncations: usize,
    pub sa_steps: usize,
    pub last_delta: f64,
    /// `‖K_learned − K_design‖_∞` when the model-based gain is available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_vs_design: Option<f64>,
    pub spectrum: SpectrumReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WallClock {
    pub total_seconds: f64,
    pub per_run_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: ExperimentConfig,
    pub mode: String,
    pub n: usize,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<LearnRun>,
    /// Timing only; everything else is a function of config and seed.
    pub wall_clock: WallClock,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without its timing block, for reproducibility checks.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("wall_clock");
        }
        serde_json::to_string_pretty(&v).expect("value serializes")
    }
}
