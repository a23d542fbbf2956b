use alloc::string::String;

/// Errors raised by the core kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A quaternion with (numerically) zero norm was inverted or normalized.
    #[error("quaternion has zero norm")]
    ZeroNorm,
    /// A rotation axis is not a unit vector.
    #[error("rotation axis is not unit length (|u| = {norm})")]
    BadAxis { norm: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("id out of range: {0}")]
    IdOutOfRange(String),
    #[error("cannot compute metrics from an empty rank list")]
    EmptyRanks,
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error("infeasible synthetic spec: {0}")]
    InfeasibleSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = core::result::Result<T, Error>;
