use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// [`Error::name`] gives the stable machine-readable name used by the CLI
/// reports and the C ABI.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("capacity exceeded: 2^{bits} cells requested, budget is 2^{budget}")]
    CapacityExceeded { bits: u32, budget: u32 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("no Hamiltonian cycle exists for a {dim}-dimensional grid of side {side}")]
    NoCycle { dim: usize, side: usize },
    #[error("point {0:?} lies outside the unit cube")]
    DomainError(Vec<f64>),
    #[error("map has no closed-form cell overlaps on this grid")]
    NotExact,
    #[error("no perfect matching on the positive-overlap support ({matched} of {size} rows matched); raise the sampling density")]
    NoPerfectMatching { matched: usize, size: usize },
    #[error("permutation is not a single cycle ({cycles} cycles)")]
    NotCyclic { cycles: usize },
    #[error("cell count {0} is odd")]
    OddOrder(usize),
    #[error("heights {0} and {1} are not coprime")]
    NotCoprime(usize, usize),
    #[error("{k} is smaller than {bound}")]
    TooSmall { k: usize, bound: usize },
    #[error("cycle of length {len} is shorter than the required {required}")]
    CycleTooShort { len: usize, required: usize },
    #[error("equal-size two-column partition has no integer solution")]
    EqualSizeInfeasible,
    #[error("not a partition: {0}")]
    NotAPartition(String),
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("separation {eps} exceeds the minimal component gap {gap}")]
    GapTooSmall { eps: f64, gap: f64 },
    #[error("paths {0} and {1} intersect or are closer than the required margin")]
    PathsIntersect(usize, usize),
    #[error("point {0:?} is not in the open unit square")]
    PointsOnBoundary(Vec<f64>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    ConfigError(String),
    #[error("io error: {0}")]
    IoError(String),
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::CapacityExceeded { .. } => "CapacityExceeded",
            Error::GridMismatch(_) => "GridMismatch",
            Error::NoCycle { .. } => "NoCycle",
            Error::DomainError(_) => "DomainError",
            Error::NotExact => "NotExact",
            Error::NoPerfectMatching { .. } => "NoPerfectMatching",
            Error::NotCyclic { .. } => "NotCyclic",
            Error::OddOrder(_) => "OddOrder",
            Error::NotCoprime(..) => "NotCoprime",
            Error::TooSmall { .. } => "TooSmall",
            Error::CycleTooShort { .. } => "CycleTooShort",
            Error::EqualSizeInfeasible => "EqualSizeInfeasible",
            Error::NotAPartition(_) => "NotAPartition",
            Error::UnsupportedGeometry(_) => "UnsupportedGeometry",
            Error::GapTooSmall { .. } => "GapTooSmall",
            Error::PathsIntersect(..) => "PathsIntersect",
            Error::PointsOnBoundary(_) => "PointsOnBoundary",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::ConfigError(_) => "ConfigError",
            Error::IoError(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::IoError(e.to_string())
    }
}
