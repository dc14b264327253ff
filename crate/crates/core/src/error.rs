use thiserror::Error;

/// Errors produced by the simulation and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length {0} is not a power of two")]
    NotQubitSpace(usize),

    #[error("non-finite amplitude or matrix entry")]
    NonFinite,

    #[error("state is not normalized (norm^2 = {0})")]
    Unnormalized(f64),

    #[error("operator is not Hermitian within {0:e}")]
    NotHermitian(f64),

    #[error("observable is degenerate (lambda_max = lambda_min = {0})")]
    DegenerateObservable(f64),

    #[error("target weak value must be nonzero")]
    ZeroTarget,

    #[error("pre- and post-selection states are orthogonal (|overlap| = {0:e})")]
    OrthogonalPostSelection(f64),

    #[error("post-selection probability vanishes ({0:e})")]
    ZeroProbability(f64),

    #[error("{requested} entangled qubits exceeds the limit of {limit}")]
    SizeLimit { requested: usize, limit: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    #[error("finite-difference QFI unstable: {coarse} at step h vs {fine} at h/2")]
    UnstableDerivative { coarse: f64, fine: f64 },

    #[error("no photons detected")]
    NoDetections,

    #[error("readout {observed} outside the invertible range [{low}, {high}]")]
    OutOfRange { observed: f64, low: f64, high: f64 },

    #[error("readout diverges: post-selection probability {0:e}")]
    DivergentReadout(f64),

    #[error("weakness condition violated at N = {n}: ratio_amp = {ratio_amp}, ratio_gamma = {ratio_gamma}")]
    WeaknessViolated {
        n: usize,
        ratio_amp: f64,
        ratio_gamma: f64,
    },
}

pub type Result<T> = core::result::Result<T, Error>;
