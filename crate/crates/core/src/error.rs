use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix is not symmetric (max deviation {deviation:e})")]
    NonSymmetric { deviation: f64 },

    #[error("eigenvalue iteration did not converge for a {dim}x{dim} matrix")]
    EigenFailure { dim: usize },

    #[error("root set is not closed under complex conjugation")]
    NotConjugateClosed,

    #[error("{value} is not an eigenvalue (residual {residual:e})")]
    NotAnEigenvalue { value: num_complex::Complex64, residual: f64 },

    #[error("pair (G, F) is not controllable (reciprocal condition number {rcond:e})")]
    NotControllable { rcond: f64 },

    #[error("invalid assignment spec: {0}")]
    SpecInvalid(String),

    #[error("matrix does not have full row rank (reciprocal condition number {rcond:e})")]
    RankDeficient { rcond: f64 },

    #[error("bad shape: {0}")]
    BadShape(String),

    #[error("closed loop has a defective eigenvalue {value}")]
    DefectiveEigenstructure { value: num_complex::Complex64 },

    #[error("no nonsingular difference average after {rounds} probe rounds")]
    IndexSearchExhausted { rounds: usize },

    #[error("learner produced a non-finite iterate at p={p}, s={s}")]
    NonFinite { p: usize, s: usize },

    #[error("invalid learner configuration: {0}")]
    InvalidConfig(String),
}
