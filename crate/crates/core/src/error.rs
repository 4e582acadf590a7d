use thiserror::Error;

/// Errors raised by the numerical kernels, model loading and the drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: ‖M − M†‖_max = {deviation:.3e} exceeds {tolerance:.3e}")]
    NonHermitian { deviation: f64, tolerance: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("integration step too large: ‖L‖·Δt = {norm_step:.3e} > 1")]
    StepTooLarge { norm_step: f64 },

    #[error("Choi derivative is not traceless: Tr K = {trace:.3e}")]
    NonTraceless { trace: f64 },

    #[error("time grid is not sorted at index {index}")]
    UnsortedGrid { index: usize },

    #[error("generator is not Markovian at t = {t} (min Kossakowski eigenvalue {min_eigenvalue:.3e})")]
    NotMarkovian { t: f64, min_eigenvalue: f64 },

    #[error("RHP rate came out negative ({value:.3e}); this indicates an internal inconsistency")]
    NegativeRate { value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
