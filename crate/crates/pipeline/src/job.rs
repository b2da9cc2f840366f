//! Job state: stages, progress counters, and timestamps. Jobs are
//! persisted as JSON blobs through the storage layer so their status is
//! readable after the scheduling process exits.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use termsuggest_core::repo::SnapshotId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStage {
    Queued,
    Harvesting,
    Processing,
    Persisting,
    Done,
    Failed,
}

impl JobStage {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobStage::Done | JobStage::Failed)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JobStage::Queued => "queued",
            JobStage::Harvesting => "harvesting",
            JobStage::Processing => "processing",
            JobStage::Persisting => "persisting",
            JobStage::Done => "done",
            JobStage::Failed => "failed",
        }
    }
}

impl std::fmt::Display for JobStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: String,
    pub repo_id: String,
    pub created_at: DateTime<Utc>,
    pub started_at: Option<DateTime<Utc>>,
    pub finished_at: Option<DateTime<Utc>>,
    pub stage: JobStage,
    pub records_harvested: u64,
    pub records_processed: u64,
    pub error: Option<String>,
    /// Non-fatal problems, e.g. unparsable records or ingest failures.
    #[serde(default)]
    pub warnings: Vec<String>,
    /// Set once the job's snapshot is published.
    pub snapshot: Option<SnapshotId>,
}

impl Job {
    pub fn new(job_id: impl Into<String>, repo_id: impl Into<String>) -> Self {
        Job {
            job_id: job_id.into(),
            repo_id: repo_id.into(),
            created_at: Utc::now(),
            started_at: None,
            finished_at: None,
            stage: JobStage::Queued,
            records_harvested: 0,
            records_processed: 0,
            error: None,
            warnings: Vec::new(),
            snapshot: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stages_know_their_terminal_states() {
        assert!(JobStage::Done.is_terminal());
        assert!(JobStage::Failed.is_terminal());
        assert!(!JobStage::Queued.is_terminal());
        assert!(!JobStage::Harvesting.is_terminal());
    }

    #[test]
    fn jobs_round_trip_through_json() {
        let mut job = Job::new("j-1", "r-1");
        job.stage = JobStage::Done;
        job.snapshot = Some(SnapshotId::new("r-1", 3));
        job.warnings.push("record x skipped".into());
        let json = serde_json::to_string(&job).unwrap();
        let back: Job = serde_json::from_str(&json).unwrap();
        assert_eq!(back, job);
    }
}
