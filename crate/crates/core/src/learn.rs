//! Model-free gain learning by stochastic approximation with expanding
//! truncations.
//!
//! The learner never sees `(H, L, F)`. It probes the plant with fixed gains,
//! differences the characteristic-polynomial coefficients of the observations
//! to estimate how the coefficients move with the gain, and then runs a
//! Robbins–Monro iteration that drives the observed coefficients towards the
//! target polynomial. Whenever a candidate iterate leaves the ball of radius
//! `M(p+1)` the inner loop is abandoned, `p` is incremented, and a fresh
//! difference estimate is gathered before restarting from `K_init`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, RowDVector};

use crate::assign::AssignmentSpec;
use crate::error::{Error, Result};
use crate::numerics::{char_poly, poly_from_roots};
use crate::plant::{Observation, Plant};

/// Probe gains `L₀ = 0, L₁, …, Lₙ` cycled during Jacobian estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeFamily {
    vectors: Vec<RowDVector<f64>>,
}

impl ProbeFamily {
    /// `Lᵢ` has ones in its first `i` entries and zeros elsewhere, so the
    /// consecutive differences are the standard basis.
    pub fn standard(n: usize) -> Self {
        let vectors = (0..=n)
            .map(|i| RowDVector::from_fn(n, |_, c| if c < i { 1.0 } else { 0.0 }))
            .collect();
        Self { vectors }
    }

    /// Custom family; `L₀` must be zero and there must be `n + 1` vectors of
    /// length `n`. Independence of the differences is not enforced.
    pub fn from_vectors(vectors: Vec<RowDVector<f64>>) -> Result<Self> {
        let n = vectors.len().saturating_sub(1);
        if n == 0 || vectors.iter().any(|v| v.len() != n) {
            return Err(Error::InvalidConfig(
                "probe family needs n + 1 vectors of length n".into(),
            ));
        }
        if vectors[0].iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidConfig("first probe vector must be zero".into()));
        }
        Ok(Self { vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.len() - 1
    }

    pub fn vectors(&self) -> &[RowDVector<f64>] {
        &self.vectors
    }

    pub fn has_independent_steps(&self) -> bool {
        let n = self.dim();
        let d = DMatrix::from_fn(n, n, |r, c| self.vectors[r + 1][c] - self.vectors[r][c]);
        d.determinant().abs() > 1e-12
    }
}

/// Step sizes `β(s) = scale / (s + offset)^exponent`, `s = 1, 2, …`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub scale: f64,
    pub offset: f64,
    pub exponent: f64,
}

impl Default for StepSchedule {
    /// `β(s) = 1/s`.
    fn default() -> Self {
        Self {
            scale: 1.0,
            offset: 0.0,
            exponent: 1.0,
        }
    }
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidConfig("step scale must be > 0".into()));
        }
        if !(self.offset >= 0.0 && self.offset.is_finite()) {
            return Err(Error::InvalidConfig("step offset must be >= 0".into()));
        }
        if !(self.exponent > 0.5 && self.exponent <= 1.0) {
            return Err(Error::InvalidConfig(
                "step exponent must lie in (1/2, 1] so that Σβ = ∞ and Σβ² < ∞".into(),
            ));
        }
        Ok(())
    }

    pub fn beta(&self, s: usize) -> f64 {
        self.scale / (s as f64 + self.offset).powf(self.exponent)
    }

    /// Whether `Σβ(s) = ∞` and `Σβ(s)^r < ∞` hold for the given `r`.
    pub fn satisfies(&self, r: f64) -> bool {
        self.exponent <= 1.0 && self.exponent * r > 1.0
    }
}

/// Truncation radii `M(p) = base + slope·p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSchedule {
    pub base: f64,
    pub slope: f64,
}

impl Default for TruncationSchedule {
    /// `M(p) = p`.
    fn default() -> Self {
        Self {
            base: 0.0,
            slope: 1.0,
        }
    }
}

impl TruncationSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.slope > 0.0 && self.slope.is_finite()) {
            return Err(Error::InvalidConfig("truncation slope must be > 0".into()));
        }
        if !(self.base >= 0.0 && self.base.is_finite()) {
            return Err(Error::InvalidConfig("truncation base must be >= 0".into()));
        }
        Ok(())
    }

    pub fn bound(&self, p: usize) -> f64 {
        self.base + self.slope * p as f64
    }
}

/// How the difference average `C` evolves across outer rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Averaging {
    /// One running mean over every probe round of the run.
    #[default]
    Cumulative,
    /// The mean restarts from zero whenever `p` increments.
    PerRound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    /// Stop once `‖K(s+1) − K(s)‖_∞ < epsilon`.
    pub epsilon: f64,
    pub step: StepSchedule,
    pub bound: TruncationSchedule,
    pub averaging: Averaging,
    /// Restart point of every inner loop; zero when `None`.
    pub k_init: Option<RowDVector<f64>>,
    /// Maximum probe rounds spent looking for a nonsingular average.
    pub index_cap: usize,
    /// Maximum number of outer rounds.
    pub p_max: usize,
    /// Maximum SA steps per inner loop.
    pub s_cap: usize,
    /// Number of trailing iterates kept in [`LearnReport::trace`].
    pub trace_tail: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            step: StepSchedule::default(),
            bound: TruncationSchedule::default(),
            averaging: Averaging::default(),
            k_init: None,
            index_cap: 10_000,
            p_max: 100_000,
            s_cap: 1_000_000,
            trace_tail: 1_000,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig("epsilon must be > 0".into()));
        }
        self.step.validate()?;
        self.bound.validate()?;
        if self.index_cap == 0 || self.p_max == 0 || self.s_cap == 0 {
            return Err(Error::InvalidConfig("iteration caps must be >= 1".into()));
        }
        Ok(())
    }
}

/// One accepted SA iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub p: usize,
    /// Index-function value `J(p+1)` the iterate was computed with.
    pub j: usize,
    pub s: usize,
    pub k: Vec<f64>,
    pub delta_norm: f64,
}

/// Receiver for per-step trace records.
pub trait TraceSink {
    fn record(&mut self, rec: &TraceRecord);
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, rec: &TraceRecord) {
        self.push(rec.clone());
    }
}

impl<F: FnMut(&TraceRecord)> TraceSink for F {
    fn record(&mut self, rec: &TraceRecord) {
        self(rec)
    }
}

/// Discards every record.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _: &TraceRecord) {}
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnReport {
    pub gain: RowDVector<f64>,
    pub p_final: usize,
    pub index_final: usize,
    pub observations: u64,
    pub truncations: usize,
    pub sa_steps: usize,
    pub converged: bool,
    pub last_delta: f64,
    /// The last `trace_tail` accepted iterates.
    pub trace: Vec<TraceRecord>,
}

/// Bookkeeping of a learning run.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    /// Outer (truncation) index.
    pub p: usize,
    /// Probe rounds performed so far.
    pub j: usize,
    /// Current SA step within the inner loop.
    pub s: usize,
    /// Index-function value `J(p)`.
    pub index: usize,
    /// Accepted difference average.
    pub c: DMatrix<f64>,
    pub k: RowDVector<f64>,
    pub k_init: RowDVector<f64>,
}

impl LearnerState {
    pub fn new(n: usize, k_init: Option<RowDVector<f64>>) -> Self {
        let k_init = k_init.unwrap_or_else(|| RowDVector::zeros(n));
        Self {
            p: 0,
            j: 0,
            s: 0,
            index: 0,
            c: DMatrix::zeros(n, n),
            k: k_init.clone(),
            k_init,
        }
    }
}

/// `[a₁, …, aₙ]` of `det(λI − Y)`.
pub fn coeffs_of_observation(obs: &Observation) -> RowDVector<f64> {
    RowDVector::from_vec(char_poly(&obs.y).coeffs)
}

/// One probe round: observe at `L₀..Lₙ` and stack the coefficient
/// differences `a(Lᵢ) − a(Lᵢ₋₁)` as rows.
pub fn probe_round<P: Plant + ?Sized>(
    plant: &mut P,
    alpha: f64,
    family: &ProbeFamily,
) -> DMatrix<f64> {
    let n = family.dim();
    let coeffs: Vec<RowDVector<f64>> = family
        .vectors()
        .iter()
        .map(|l| coeffs_of_observation(&plant.observe(alpha, l)))
        .collect();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a.set_row(i, &(&coeffs[i + 1] - &coeffs[i]));
    }
    a
}

/// Running mean after `count` previous samples: `count/(count+1)·C + A/(count+1)`.
pub fn update_average(c_prev: &DMatrix<f64>, a_new: &DMatrix<f64>, count: usize) -> DMatrix<f64> {
    let w = count as f64;
    c_prev * (w / (w + 1.0)) + a_new * (1.0 / (w + 1.0))
}

fn is_nonsingular(c: &DMatrix<f64>) -> bool {
    let n = c.nrows() as i32;
    let det = c.determinant();
    det.is_finite() && det.abs() > 1e-12 * (1.0 + c.norm().powi(n))
}

/// Runs probe rounds from `j = J(p)` until the running average is
/// nonsingular, then stores `J(p+1)` and the accepted average.
pub fn advance_index<P: Plant + ?Sized>(
    state: &mut LearnerState,
    plant: &mut P,
    alpha: f64,
    family: &ProbeFamily,
    averaging: Averaging,
    cap: usize,
) -> Result<()> {
    let n = family.dim();
    let start = state.index;
    let (mut c, offset) = match averaging {
        Averaging::Cumulative => (state.c.clone(), start),
        Averaging::PerRound => (DMatrix::zeros(n, n), 0),
    };
    for round in 0..cap {
        let a = probe_round(plant, alpha, family);
        c = update_average(&c, &a, offset + round);
        state.j = start + round + 1;
        if is_nonsingular(&c) {
            state.index = state.j;
            state.c = c;
            return Ok(());
        }
    }
    Err(Error::IndexSearchExhausted { rounds: cap })
}

/// `K − β·(a_obs − a_target)·C`.
pub fn sa_step(
    k: &RowDVector<f64>,
    beta: f64,
    a_obs: &RowDVector<f64>,
    a_target: &RowDVector<f64>,
    c: &DMatrix<f64>,
) -> RowDVector<f64> {
    k - (a_obs - a_target) * c * beta
}

fn inf_norm(v: &RowDVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Learns the row gain that assigns `spec` on `plant` without using its
/// matrices.
pub fn run_learning<P: Plant + ?Sized, S: TraceSink + ?Sized>(
    plant: &mut P,
    spec: &AssignmentSpec,
    cfg: &LearnerConfig,
    sink: &mut S,
) -> Result<LearnReport> {
    spec.validate()?;
    cfg.validate()?;
    let n = plant.dim();
    if spec.dim() != n {
        return Err(Error::ShapeMismatch(format!(
            "plant has dimension {n}, spec lists {} eigenvalues",
            spec.dim()
        )));
    }
    if let Some(k0) = &cfg.k_init {
        if k0.len() != n {
            return Err(Error::ShapeMismatch(format!("k_init must have {n} entries")));
        }
    }
    let target = RowDVector::from_vec(
        poly_from_roots(&spec.lambdas)
            .map_err(|_| Error::SpecInvalid("eigenvalues are not closed under conjugation".into()))?
            .a,
    );
    let family = ProbeFamily::standard(n);
    let alpha = spec.alpha;

    let mut state = LearnerState::new(n, cfg.k_init.clone());
    let mut tail: VecDeque<TraceRecord> = VecDeque::with_capacity(cfg.trace_tail.min(4096));
    let mut truncations = 0;
    let mut sa_steps = 0;
    let mut last_delta = f64::INFINITY;

    let report = |state: &LearnerState,
                  plant: &P,
                  tail: VecDeque<TraceRecord>,
                  truncations,
                  sa_steps,
                  converged,
                  last_delta| LearnReport {
        gain: state.k.clone(),
        p_final: state.p,
        index_final: state.index,
        observations: plant.observations(),
        truncations,
        sa_steps,
        converged,
        last_delta,
        trace: tail.into(),
    };

    'outer: while state.p < cfg.p_max {
        advance_index(&mut state, plant, alpha, &family, cfg.averaging, cfg.index_cap)?;
        let radius = cfg.bound.bound(state.p + 1);
        state.k = state.k_init.clone();
        for s in 1..=cfg.s_cap {
            state.s = s;
            let a_obs = coeffs_of_observation(&plant.observe(alpha, &state.k));
            let candidate = sa_step(&state.k, cfg.step.beta(s), &a_obs, &target, &state.c);
            sa_steps += 1;
            if candidate.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { p: state.p, s });
            }
            if candidate.norm() > radius {
                truncations += 1;
                state.p += 1;
                state.k = state.k_init.clone();
                continue 'outer;
            }
            let delta = inf_norm(&(&candidate - &state.k));
            state.k = candidate;
            last_delta = delta;
            let rec = TraceRecord {
                p: state.p,
                j: state.index,
                s,
                k: state.k.iter().copied().collect(),
                delta_norm: delta,
            };
            sink.record(&rec);
            if cfg.trace_tail > 0 {
                if tail.len() == cfg.trace_tail {
                    tail.pop_front();
                }
                tail.push_back(rec);
            }
            if delta < cfg.epsilon {
                return Ok(report(&state, plant, tail, truncations, sa_steps, true, last_delta));
            }
        }
        // inner loop hit its cap without converging or truncating
        return Ok(report(&state, plant, tail, truncations, sa_steps, false, last_delta));
    }
    Ok(report(&state, plant, tail, truncations, sa_steps, false, last_delta))
}
