//! Workflow orchestration: scheduled jobs harvest a repository, parse and
//! extract its records, build the co-occurrence index, persist it as a
//! snapshot, and publish it for serving. Each stage's failures are
//! isolated: a failed job marks the repository failed while the
//! previously published snapshot keeps serving.

mod runner;

pub mod error;
pub mod job;
pub mod scheduler;

pub use error::PipelineError;
pub use job::{Job, JobStage};
pub use scheduler::{PipelineOptions, Scheduler};
