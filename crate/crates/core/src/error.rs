use alloc::string::String;

/// Errors raised by the numerical kernels and the physics layer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not Hermitian (relative deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPsd { eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("bad dimension {0}")]
    BadDimension(usize),
    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("partial transpose needs a proper non-empty subset of subsystems")]
    FullOrEmptySet,
    #[error("bipartition does not match the state's subsystems: {0}")]
    PartitionMismatch(String),
    #[error("states or operators are defined on different layouts")]
    LayoutMismatch,
    #[error("invalid density state: {0}")]
    InvalidState(String),
    #[error("stationary state: min(<M>, dM) = {denominator:.3e}, the speed limit is vacuous")]
    StationaryState { denominator: f64 },
    #[error("positivity lost at T = {time}: eigenvalue {eigenvalue:.3e}")]
    PositivityLost { time: f64, eigenvalue: f64 },
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;
