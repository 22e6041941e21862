use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("factor index {index} out of range for a space with {len} factors")]
    FactorOutOfRange { index: usize, len: usize },

    #[error("operators live on different bases")]
    BasisMismatch,

    #[error("invalid level label {0:?}")]
    InvalidLevel(String),

    #[error("invalid excitation cutoff {0}: the truncated basis would be empty")]
    EmptyBasis(i64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("Hamiltonian is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("integration step underflow at t = {t} (step {step:e})")]
    StepUnderflow { t: f64, step: f64 },

    #[error("time grid must start at 0 and be strictly increasing")]
    InvalidTimeGrid,

    #[error("{0} is not available at dynamics level {1}")]
    UnsupportedLevel(&'static str, String),

    #[error("zero effective detuning without linewidth (n = {0})")]
    ZeroDetuning(u32),

    #[error("singular non-Hermitian block {0}")]
    SingularBlock(String),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("rate model outside validity: {0}")]
    RateModel(String),

    #[error("degenerate operating point: |dP1/dω| = {0:e}")]
    DegenerateOperatingPoint(f64),

    #[error("evaluation failed at κ_eng = {kappa_eng}, Ω = {omega}: {source}")]
    Evaluation {
        kappa_eng: f64,
        omega: f64,
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
