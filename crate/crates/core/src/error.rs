use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("bias of arm {arm} is {value}, outside [-1, 1]")]
    BiasOutOfRange { arm: usize, value: f64 },
    #[error("theta norm {norm} exceeds 1")]
    ThetaNormExceeded { norm: f64 },
    #[error("simple model requires theta = 0")]
    SimpleModelNonzeroTheta,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("context norm {norm} exceeds 1")]
    ContextNormExceeded { norm: f64 },
    #[error("round {round} is inside the warm-up phase (K = {arms})")]
    RoundBeforeWarmup { round: usize, arms: usize },
    #[error("kappa series has length {actual}, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("arm confidence width requires at least one pull")]
    ZeroPulls,
    #[error("round {round} exceeds the horizon {horizon}")]
    HorizonExceeded { round: usize, horizon: usize },
    #[error("observed arm {observed} but arm {selected:?} was selected")]
    ArmMismatch { selected: Option<usize>, observed: usize },
    #[error("slate is for round {slate}, expected round {expected}")]
    RoundMismatch { expected: usize, slate: usize },
    #[error("custom context distribution needs an explicit sampler")]
    MissingSampler,
    #[error("malformed instance file at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
