use thiserror::Error;

/// Errors produced by the library.
///
/// Numerical-failure variants (`StepRejected`, `StiffnessFailure`) are
/// distinguished from configuration and input errors so that callers can map
/// them to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} is not a power of two >= 8")]
    InvalidGrid(usize),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("grid mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),

    #[error("field has non-positive samples (min = {0})")]
    NonPositiveField(f64),

    #[error("point sets differ; operands must share the identical point list")]
    PointSetMismatch,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("stencil radius {0} not in 1..=3")]
    InvalidStencil(u32),

    #[error("skeleton order {0} is invalid (need i >= 1)")]
    InvalidOrder(u32),

    #[error("grid too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("grid size {n} is not divisible by lattice order {order}")]
    GridAlignment { n: usize, order: u32 },

    #[error("step rejected: {0}")]
    StepRejected(String),

    #[error("stiffness failure: {0}")]
    StiffnessFailure(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config syntax: {0}")]
    ConfigSyntax(String),

    #[error("config invalid: {0}")]
    ConfigInvalid(String),

    #[error("snapshot corrupt: {0}")]
    SnapshotCorrupt(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
