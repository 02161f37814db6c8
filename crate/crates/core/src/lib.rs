//! Spectrum assignment for linear stochastic systems whose noise enters
//! multiplicatively through the control.
//!
//! The second-moment dynamics of `x(k+1) = (H + αL)x + F u + (αx + L u) w`
//! (and its Itô counterpart) are governed by a linear operator on symmetric
//! matrices. This crate builds that operator, places its spectrum with a
//! state-feedback gain computed from the plant matrices, and learns the same
//! gain from noisy observations alone.
//!
//! * [`symspace`]: `vech`, duplication matrices and the operator matrix.
//! * [`numerics`]: characteristic polynomials, eigenvalues and eigenvectors.
//! * [`assign`]: model-based design, multi-input reduction, eigenmatrix witnesses.
//! * [`plant`]: seeded simulators.
//! * [`learn`]: the stochastic-approximation learner.

pub mod assign;
pub mod error;
pub mod learn;
pub mod numerics;
pub mod plant;
pub mod symspace;
pub mod system;

pub use assign::{
    ackermann_gain, design, lift_gain, reduce_general, target_spectrum, witness_set,
    AssignmentSpec, GainPair, ReducedSystem, Witness, WitnessSet,
};
pub use error::{Error, Result};
pub use learn::{
    run_learning, Averaging, LearnReport, LearnerConfig, NullSink, StepSchedule, TraceRecord, TraceSink,
    TruncationSchedule,
};
pub use plant::{ContinuousPlant, DiscretePlant, NoiseDistribution, Observation, Plant};
pub use symspace::{operator_matrix, operator_matrix_general, spectrum, OperatorMatrix, SpectrumSet};
pub use system::{GeneralSystem, Mode, PlantParams};
