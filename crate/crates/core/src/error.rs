use thiserror::Error;

use crate::forms::FormKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("characteristic 2 is not supported; q must be odd")]
    EvenCharacteristic,
    #[error("order {size} exceeds the configured maximum {max}")]
    TooLarge { size: u64, max: u64 },
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("division by zero")]
    DivisionByZero,
    #[error("element index {index} is out of range for a field of order {q}")]
    InvalidElement { index: u64, q: u32 },
    #[error("{0} is not an odd prime power")]
    NotPrimePower(u64),

    #[error("{kind} is not defined in dimension {dim}")]
    ParityMismatch { kind: FormKind, dim: usize },
    #[error("dimension {dim} is too small (need at least {min})")]
    DimensionTooSmall { dim: usize, min: usize },
    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("epsilon must be a non-square")]
    NotANonsquare,
    #[error("objects live over different forms or fields")]
    FormMismatch,

    #[error("the two spheres are identical")]
    SameSphere,
    #[error("the two points are identical")]
    EqualPoints,
    #[error("duplicate element in a set")]
    Duplicate,
    #[error("spheres do not all share one radius")]
    MixedRadii,
    #[error("radius must be non-zero")]
    ZeroRadius,
    #[error("spheres do not all have the same size")]
    MixedSphereSizes,
    #[error("p = {p} is outside the admissible range")]
    PNotInRange { p: String },
    #[error("scalar must be non-zero")]
    ZeroScalar,
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("{0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
