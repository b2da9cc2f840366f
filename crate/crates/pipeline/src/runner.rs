//! Stage execution for one job: harvest, process, persist, publish.
//!
//! Failures mark the job and repository failed with a stage-prefixed
//! diagnostic and never touch the previously published snapshot.
//! Record-level problems (an unparsable record, a corrupt ingest file)
//! become warnings; the job continues.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use chrono::Utc;

use termsuggest_core::engine::CooccurrenceIndex;
use termsuggest_core::metadata::{parse_oai_dc, select_fields, RawRecord};
use termsuggest_core::repo::{RepoSource, RepoStatus, RepositoryRecord};
use termsuggest_core::store::{transition_repository, ServedSnapshot};

use termsuggest_harvest::{ingest_files, IngestEvent, OaiClient};

use crate::job::JobStage;
use crate::scheduler::{QueuedJob, SchedulerCore};

/// Persist progress counters at this interval so external status polls
/// see movement on long jobs.
const PROGRESS_FLUSH_EVERY: u64 = 500;

struct StageFailure {
    stage: &'static str,
    detail: String,
}

impl StageFailure {
    fn new(stage: &'static str, detail: impl ToString) -> Self {
        StageFailure {
            stage,
            detail: detail.to_string(),
        }
    }

    fn message(&self) -> String {
        format!("{}: {}", self.stage, self.detail)
    }
}

pub(crate) fn run_job(core: &SchedulerCore, queued: QueuedJob) {
    let QueuedJob {
        slot,
        source_override,
    } = queued;
    let job_id = slot.snapshot().job_id;
    let repo_id = slot.snapshot().repo_id;
    tracing::info!(job = %job_id, repo = %repo_id, "job started");

    let outcome = execute(core, &slot, source_override);

    match outcome {
        Ok(()) => {
            let job = slot.update(|job| {
                job.stage = JobStage::Done;
                job.finished_at = Some(Utc::now());
            });
            core.persist_job(&job);
            tracing::info!(job = %job_id, repo = %repo_id, "job done");
        }
        Err(failure) => {
            let job = slot.update(|job| {
                job.stage = JobStage::Failed;
                job.finished_at = Some(Utc::now());
                job.error = Some(failure.message());
            });
            core.persist_job(&job);
            mark_repository_failed(core, &repo_id, &failure.message());
            tracing::warn!(job = %job_id, repo = %repo_id, error = %failure.message(), "job failed");
        }
    }
    core.finish(&repo_id);
}

fn mark_repository_failed(core: &SchedulerCore, repo_id: &str, message: &str) {
    let result = core.storage.get_repository(repo_id).and_then(|mut record| {
        if record.status.can_transition_to(RepoStatus::Failed) {
            record.status = RepoStatus::Failed;
        }
        record.last_error = Some(message.to_string());
        core.storage.update_repository(&record)
    });
    if let Err(e) = result {
        tracing::warn!(repo = %repo_id, error = %e, "could not record repository failure");
    }
}

fn execute(
    core: &SchedulerCore,
    slot: &Arc<crate::scheduler::JobSlot>,
    source_override: Option<RepoSource>,
) -> Result<(), StageFailure> {
    let repo_id = slot.snapshot().repo_id;
    let deadline = core.options.job_timeout.map(|t| Instant::now() + t);

    let mut record = core
        .storage
        .get_repository(&repo_id)
        .map_err(|e| StageFailure::new("harvest", e))?;

    let job = slot.update(|job| {
        job.started_at = Some(Utc::now());
        job.stage = JobStage::Harvesting;
    });
    core.persist_job(&job);
    transition_repository(core.storage.as_ref(), &mut record, RepoStatus::Harvesting)
        .map_err(|e| StageFailure::new("harvest", e))?;

    // Harvest stage: pull every record from the endpoint or the files.
    let source = source_override.unwrap_or_else(|| record.source.clone());
    let records = harvest_stage(core, slot, &record, &source, deadline)?;

    // Processing stage: parse, extract, count.
    let job = slot.update(|job| job.stage = JobStage::Processing);
    core.persist_job(&job);
    transition_repository(core.storage.as_ref(), &mut record, RepoStatus::Processing)
        .map_err(|e| StageFailure::new("process", e))?;
    let index = process_stage(core, slot, &record, &records, deadline)?;

    // Persist and publish; the serving layer switches atomically.
    let job = slot.update(|job| job.stage = JobStage::Persisting);
    core.persist_job(&job);
    let snapshot_id = core
        .storage
        .persist_snapshot(&repo_id, &index)
        .map_err(|e| StageFailure::new("persist", e))?;
    core.storage
        .publish(&repo_id, &snapshot_id)
        .map_err(|e| StageFailure::new("persist", e))?;
    core.serving.install(Arc::new(ServedSnapshot {
        id: snapshot_id.clone(),
        index,
    }));
    slot.update(|job| job.snapshot = Some(snapshot_id));
    Ok(())
}

fn check_deadline(deadline: Option<Instant>, stage: &'static str) -> Result<(), StageFailure> {
    match deadline {
        Some(deadline) if Instant::now() > deadline => Err(StageFailure::new(
            stage,
            "job exceeded its configured time limit",
        )),
        _ => Ok(()),
    }
}

fn harvest_stage(
    core: &SchedulerCore,
    slot: &Arc<crate::scheduler::JobSlot>,
    record: &RepositoryRecord,
    source: &RepoSource,
    deadline: Option<Instant>,
) -> Result<Vec<RawRecord>, StageFailure> {
    let mut harvested: Vec<RawRecord> = Vec::new();
    // Keep the latest datestamp when a repository lists an identifier
    // twice across restarts or files.
    let mut by_identifier: HashMap<String, usize> = HashMap::new();
    let mut push = |record: RawRecord, harvested: &mut Vec<RawRecord>| {
        match by_identifier.get(&record.identifier) {
            Some(&i) => {
                if record.datestamp >= harvested[i].datestamp {
                    harvested[i] = record;
                }
            }
            None => {
                by_identifier.insert(record.identifier.clone(), harvested.len());
                harvested.push(record);
            }
        }
    };

    match source {
        RepoSource::Endpoint(config) => {
            let client =
                OaiClient::new(config.clone()).map_err(|e| StageFailure::new("harvest", e))?;
            for result in client.harvest_all() {
                check_deadline(deadline, "harvest")?;
                let item = result.map_err(|e| StageFailure::new("harvest", e))?;
                push(item, &mut harvested);
                let count = harvested.len() as u64;
                let job = slot.update(|job| job.records_harvested = count);
                if count.is_multiple_of(PROGRESS_FLUSH_EVERY) {
                    core.persist_job(&job);
                }
                core.notify_progress();
            }
            if record.retain_raw {
                let envelope = termsuggest_harvest::records_to_envelope(
                    config.base_url.as_str(),
                    &harvested,
                );
                if let Err(e) = core.storage.store_raw_records(&record.repo_id, &envelope) {
                    slot.update(|job| {
                        job.warnings.push(format!("raw record retention failed: {e}"))
                    });
                }
            }
        }
        RepoSource::Files { paths } => {
            for event in ingest_files(paths) {
                check_deadline(deadline, "harvest")?;
                match event {
                    IngestEvent::Record(item) => {
                        push(item, &mut harvested);
                        let count = harvested.len() as u64;
                        let job = slot.update(|job| job.records_harvested = count);
                        if count.is_multiple_of(PROGRESS_FLUSH_EVERY) {
                            core.persist_job(&job);
                        }
                        core.notify_progress();
                    }
                    IngestEvent::Failure(failure) => {
                        slot.update(|job| job.warnings.push(failure.to_string()));
                    }
                }
            }
        }
    }
    Ok(harvested)
}

fn process_stage(
    core: &SchedulerCore,
    slot: &Arc<crate::scheduler::JobSlot>,
    record: &RepositoryRecord,
    records: &[RawRecord],
    deadline: Option<Instant>,
) -> Result<CooccurrenceIndex, StageFailure> {
    let mut index = CooccurrenceIndex::new();
    for raw in records {
        check_deadline(deadline, "process")?;
        // Deleted records are acknowledged during harvest and excluded
        // from the corpus.
        if raw.deleted {
            continue;
        }
        let parsed = match parse_oai_dc(raw) {
            Ok(parsed) => parsed,
            Err(e) => {
                slot.update(|job| job.warnings.push(e.to_string()));
                continue;
            }
        };
        let extraction = select_fields(&parsed, &record.mapping);
        index.add_extraction(&extraction, &record.pipeline);
        let job = slot.update(|job| job.records_processed += 1);
        if job.records_processed.is_multiple_of(PROGRESS_FLUSH_EVERY) {
            core.persist_job(&job);
        }
        core.notify_progress();
    }
    Ok(index)
}
