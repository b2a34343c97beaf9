use freeharm_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("infeasible problem: {0}")]
    Infeasible(CoreError),

    /// Outputs of the best iterate have been written.
    #[error("solver did not converge (residual {residual:.3e} after {iterations} iterations)")]
    NotConverged { residual: f64, iterations: usize },

    #[error(transparent)]
    Core(CoreError),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::NotConverged { .. } => 4,
            CliError::Core(_) | CliError::Io { .. } => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter(m) => CliError::Config(m),
            CoreError::InfeasibleInit(_)
            | CoreError::DegenerateDomain(_)
            | CoreError::UnclassifiedBoundaryNode { .. }
            | CoreError::NodeBudgetExceeded { .. }
            | CoreError::NonFlatBoundary
            | CoreError::ReflectionUndefined { .. }
            | CoreError::IncompatibleFixture(_) => CliError::Infeasible(e),
            e => CliError::Core(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
