use thiserror::Error;

/// Errors raised by state construction, measurement building and the sequence engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("spectrum is not real and nonnegative (eigenvalue {re:e} {im:+e}i)")]
    NonRealSpectrum { re: f64, im: f64 },

    #[error("pure state is not normalized (norm squared {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("Bloch data does not describe a physical state: {0}")]
    NonPhysical(String),

    #[error("iteration did not converge: {0}")]
    ConvergenceFailure(&'static str),

    #[error("measurement axis must be a unit vector (norm {norm})")]
    BadAxis { norm: f64 },

    #[error("measurement strength {0} outside [-1, 1]")]
    BadEpsilon(f64),

    #[error("parameter {0} outside its admissible range")]
    EpsOutOfRange(f64),

    #[error("operators are not a pair of orthogonal projectors summing to the identity")]
    NotProjectors,

    #[error("measurement operators are not complete (residual {residual:e})")]
    Incomplete { residual: f64 },

    #[error("outcome {outcome} is singular and cannot be written as q(I + e)")]
    NonDecomposable { outcome: &'static str },

    #[error("branch probability {probability:e} is below the zero threshold")]
    ZeroProbability { probability: f64 },

    #[error("outcome normalization {eta:e} vanishes")]
    DegenerateNormalization { eta: f64 },

    #[error("correlation matrix is not diagonal (off-diagonal residual {residual:e})")]
    NotDiagonal { residual: f64 },

    #[error("input state is uncorrelated (product gap {gap:e})")]
    InputNotCorrelated { gap: f64 },

    #[error("schedule would produce {count} branches (limit {limit})")]
    TooManyBranches { count: u128, limit: usize },

    #[error("unrecognized preset `{0}`")]
    UnknownPreset(String),
}

pub type Result<T> = std::result::Result<T, Error>;
