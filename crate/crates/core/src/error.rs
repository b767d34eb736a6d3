use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Fock cutoff too small: need dim >= {required}, have {dim}")]
    CutoffTooSmall { required: usize, dim: usize },

    #[error("state is under-resolved: tail mass {tail_mass:.3e} exceeds {tol:.3e}")]
    UnderResolved { tail_mass: f64, tol: f64 },

    #[error("state is not normalized: norm^2 = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("squeeze parameter r = {0} outside the supported range |r| <= 1.5")]
    SqueezeOutOfRange(f64),

    #[error("symmetry index m = {sector} invalid for N = {heads} heads")]
    BadSymmetryIndex { heads: usize, sector: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("phase-space point ({x}, {p}) lies outside the resolved region")]
    OutOfResolvedRegion { x: f64, p: f64 },

    #[error("distribution is not normalized: sum = {0}")]
    UnnormalizedDistribution(f64),

    #[error("Gaussian benchmark unavailable: {0}")]
    BenchmarkUnavailable(String),

    #[error("optimizer did not converge after {evaluations} evaluations (best value {best})")]
    OptimizerDidNotConverge { best: f64, evaluations: usize },

    #[error("corrupt table file: {0}")]
    CorruptTableFile(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("displacement mismatch: {0}")]
    DisplacementMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::CutoffTooSmall { .. } => "CutoffTooSmall",
            Error::UnderResolved { .. } => "UnderResolved",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::InvalidDensity(_) => "InvalidDensity",
            Error::SqueezeOutOfRange(_) => "SqueezeOutOfRange",
            Error::BadSymmetryIndex { .. } => "BadSymmetryIndex",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::OutOfResolvedRegion { .. } => "OutOfResolvedRegion",
            Error::UnnormalizedDistribution(_) => "UnnormalizedDistribution",
            Error::BenchmarkUnavailable(_) => "BenchmarkUnavailable",
            Error::OptimizerDidNotConverge { .. } => "OptimizerDidNotConverge",
            Error::CorruptTableFile(_) => "CorruptTableFile",
            Error::GridMismatch(_) => "GridMismatch",
            Error::DisplacementMismatch(_) => "DisplacementMismatch",
            Error::Io(_) => "Io",
        }
    }
}
