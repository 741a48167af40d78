use grating_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("line search failed after {backtracks} trial steps")]
    LineSearch { backtracks: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("plot error: {0}")]
    Plot(String),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

impl ExperimentError {
    /// Process exit code: 2 configuration, 3 anomaly, 4 line-search failure,
    /// 5 numerical failure, 1 for input/output problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Core(CoreError::Anomaly { .. }) => 3,
            ExperimentError::Core(CoreError::InvalidParameter(_) | CoreError::ShapeMismatch { .. }) => 2,
            ExperimentError::Core(CoreError::ModeNotPropagating(_)) => 2,
            ExperimentError::LineSearch { .. } | ExperimentError::Core(CoreError::LineSearchFailure { .. }) => 4,
            ExperimentError::Core(_) => 5,
            ExperimentError::Io(_) | ExperimentError::Csv(_) | ExperimentError::Plot(_) => 1,
        }
    }
}
