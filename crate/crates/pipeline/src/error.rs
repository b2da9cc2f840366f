use termsuggest_core::store::StoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("unknown repository '{0}'")]
    UnknownRepository(String),
    #[error("a job is already active for repository '{0}'")]
    JobAlreadyActive(String),
    #[error("unknown job '{0}'")]
    UnknownJob(String),
    #[error("timed out waiting for job '{0}'")]
    WaitTimeout(String),
    #[error(transparent)]
    Store(StoreError),
}

impl From<StoreError> for PipelineError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownRepository(id) => PipelineError::UnknownRepository(id),
            other => PipelineError::Store(other),
        }
    }
}
