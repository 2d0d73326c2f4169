use esqpt::analysis::AnalysisError;
use esqpt::eigen::EigenError;
use esqpt::models::ModelError;
use esqpt::semiclassics::SemiclassicsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Semiclassics(#[from] SemiclassicsError),
    #[error(transparent)]
    Analysis(AnalysisError),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{failed} selftest check(s) failed")]
    Selftest { failed: usize },
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Model(m) => CliError::Model(m),
            AnalysisError::Eigen(EigenError::Model(m)) => CliError::Model(m),
            AnalysisError::Eigen(x) => CliError::Eigen(x),
            AnalysisError::Semiclassics(s) => CliError::Semiclassics(s),
            other => CliError::Analysis(other),
        }
    }
}

impl CliError {
    /// Process exit status for each error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Model(_) => 3,
            CliError::Eigen(_) => 4,
            CliError::Semiclassics(_) => 5,
            CliError::Analysis(_) => 6,
            CliError::Io { .. } => 7,
            CliError::Selftest { .. } => 8,
        }
    }
}
