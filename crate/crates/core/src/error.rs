use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: parse failures, invariant violations, bad parameters.
    Validation,
    /// A certificate was requested outside its convergence radius.
    OutsideRadius,
    /// A configured size or cost cap was exceeded.
    Resource,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    MalformedSpec(String),
    #[error("term {index}: spectral norm {norm} is not 1 within 1e-9")]
    NormViolation { index: usize, norm: f64 },
    #[error("terms {first} and {second} share the support {support:?}")]
    DuplicateSupport {
        first: usize,
        second: usize,
        support: Vec<usize>,
    },
    #[error("term {index}: |coefficient| = {value} exceeds 1")]
    CoefficientOutOfRange { index: usize, value: f64 },
    #[error("term {index}: matrix is not Hermitian (max deviation {deviation:e})")]
    NonHermitianTerm { index: usize, deviation: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("graph has {vertices} vertices, cap is {cap}")]
    GraphTooLarge { vertices: usize, cap: usize },
    #[error("graph is not connected")]
    DisconnectedInput,
    #[error("cluster size must be at least 1")]
    SizeZero,
    #[error("size {size} exceeds the configured cap {cap}")]
    SizeCap { size: usize, cap: usize },
    #[error("cluster is not connected")]
    DisconnectedCluster,
    #[error("parts do not add up to the cluster")]
    NotAPartition,
    #[error("epsilon must be positive, got {0}")]
    EpsilonNonpositive(f64),
    #[error("continuation needs order {required}, cap is {cap}")]
    PlanInfeasible { required: f64, cap: usize },
    #[error("incompatible Hamiltonians: {0}")]
    IncompatibleHamiltonians(String),
    #[error("Hilbert space dimension {dim} exceeds cap {cap}")]
    SystemTooLarge { dim: f64, cap: usize },
    #[error("interpolation residual {residual:e} exceeds 1e-8")]
    IllConditionedFit { residual: f64 },
    #[error("|t|/threshold = {ratio} is not below 1")]
    OutsideRadius { ratio: f64 },
    #[error("delta {delta} outside (0, {max}]")]
    DeltaOutOfRange { delta: f64, max: f64 },
    #[error("|t| = {t} exceeds the allowed {max}")]
    TimeTooLarge { t: f64, max: f64 },
    #[error("a pure product state is required")]
    MixedStateUnsupported,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::OutsideRadius { .. } => ErrorKind::OutsideRadius,
            Error::GraphTooLarge { .. }
            | Error::SizeCap { .. }
            | Error::PlanInfeasible { .. }
            | Error::SystemTooLarge { .. } => ErrorKind::Resource,
            _ => ErrorKind::Validation,
        }
    }

    /// Stable identifier for machine-readable error reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedSpec(_) => "MalformedSpec",
            Error::NormViolation { .. } => "NormViolation",
            Error::DuplicateSupport { .. } => "DuplicateSupport",
            Error::CoefficientOutOfRange { .. } => "CoefficientOutOfRange",
            Error::NonHermitianTerm { .. } => "NonHermitianTerm",
            Error::InvalidState(_) => "InvalidState",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::GraphTooLarge { .. } => "GraphTooLarge",
            Error::DisconnectedInput => "DisconnectedInput",
            Error::SizeZero => "SizeZero",
            Error::SizeCap { .. } => "SizeCap",
            Error::DisconnectedCluster => "DisconnectedCluster",
            Error::NotAPartition => "NotAPartition",
            Error::EpsilonNonpositive(_) => "EpsilonNonpositive",
            Error::PlanInfeasible { .. } => "PlanInfeasible",
            Error::IncompatibleHamiltonians(_) => "IncompatibleHamiltonians",
            Error::SystemTooLarge { .. } => "SystemTooLarge",
            Error::IllConditionedFit { .. } => "IllConditionedFit",
            Error::OutsideRadius { .. } => "OutsideRadius",
            Error::DeltaOutOfRange { .. } => "DeltaOutOfRange",
            Error::TimeTooLarge { .. } => "TimeTooLarge",
            Error::MixedStateUnsupported => "MixedStateUnsupported",
        }
    }
}
