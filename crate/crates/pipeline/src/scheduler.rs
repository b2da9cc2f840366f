//! Job scheduling: a bounded worker pool executing one job per
//! repository at a time, with linearizable lifecycle transitions and
//! status that survives the scheduling process.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crossbeam_channel::{Receiver, Sender};
use parking_lot::{Condvar, Mutex};

use termsuggest_core::repo::{RepoSource, RepoStatus};
use termsuggest_core::store::{Serving, Storage};

use crate::error::PipelineError;
use crate::job::Job;
use crate::runner;

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    /// Worker threads executing jobs; jobs for distinct repositories run
    /// concurrently, one job per repository.
    pub workers: usize,
    /// Optional hard wall-clock limit per job. No limit by default.
    pub job_timeout: Option<Duration>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            workers: 2,
            job_timeout: None,
        }
    }
}

pub(crate) struct JobSlot {
    job: Mutex<Job>,
}

impl JobSlot {
    fn new(job: Job) -> Self {
        JobSlot {
            job: Mutex::new(job),
        }
    }

    pub(crate) fn snapshot(&self) -> Job {
        self.job.lock().clone()
    }

    pub(crate) fn update<F: FnOnce(&mut Job)>(&self, apply: F) -> Job {
        let mut job = self.job.lock();
        apply(&mut job);
        job.clone()
    }
}

pub(crate) struct QueuedJob {
    pub slot: Arc<JobSlot>,
    pub source_override: Option<RepoSource>,
}

pub(crate) struct SchedulerCore {
    pub storage: Arc<dyn Storage>,
    pub serving: Arc<Serving>,
    pub options: PipelineOptions,
    state: Mutex<SchedulerState>,
    terminal: Condvar,
}

#[derive(Default)]
struct SchedulerState {
    jobs: HashMap<String, Arc<JobSlot>>,
    active_repos: HashSet<String>,
}

impl SchedulerCore {
    /// Persists a job snapshot; failures are logged, never fatal to the
    /// job itself.
    pub(crate) fn persist_job(&self, job: &Job) {
        let json = serde_json::to_string_pretty(job).expect("jobs serialize");
        if let Err(e) = self.storage.put_job_record(&job.job_id, &json) {
            tracing::warn!(job = %job.job_id, error = %e, "failed to persist job state");
        }
    }

    /// Marks a repository inactive and wakes status waiters.
    pub(crate) fn finish(&self, repo_id: &str) {
        {
            let mut state = self.state.lock();
            state.active_repos.remove(repo_id);
        }
        self.storage.release_job_lock(repo_id);
        self.terminal.notify_all();
    }

    pub(crate) fn notify_progress(&self) {
        self.terminal.notify_all();
    }
}

/// The job scheduler and its worker pool. Dropping the scheduler closes
/// the queue and joins the workers after their running jobs finish.
pub struct Scheduler {
    core: Arc<SchedulerCore>,
    sender: Mutex<Option<Sender<QueuedJob>>>,
    workers: Mutex<Vec<std::thread::JoinHandle<()>>>,
}

impl Scheduler {
    pub fn new(
        storage: Arc<dyn Storage>,
        serving: Arc<Serving>,
        options: PipelineOptions,
    ) -> Self {
        let (sender, receiver): (Sender<QueuedJob>, Receiver<QueuedJob>) =
            crossbeam_channel::unbounded();
        let core = Arc::new(SchedulerCore {
            storage,
            serving,
            options: options.clone(),
            state: Mutex::new(SchedulerState::default()),
            terminal: Condvar::new(),
        });
        let workers = (0..options.workers.max(1))
            .map(|i| {
                let receiver = receiver.clone();
                let core = core.clone();
                std::thread::Builder::new()
                    .name(format!("job-worker-{i}"))
                    .spawn(move || {
                        for queued in receiver.iter() {
                            runner::run_job(&core, queued);
                        }
                    })
                    .expect("spawn job worker")
            })
            .collect();
        Scheduler {
            core,
            sender: Mutex::new(Some(sender)),
            workers: Mutex::new(workers),
        }
    }

    pub fn storage(&self) -> &Arc<dyn Storage> {
        &self.core.storage
    }

    pub fn serving(&self) -> &Arc<Serving> {
        &self.core.serving
    }

    /// Queues a job for a registered repository. At most one job may be
    /// active per repository; the check spans processes via a lock file.
    pub fn schedule(&self, repo_id: &str) -> Result<Job, PipelineError> {
        self.schedule_with_source(repo_id, None)
    }

    /// Queues a job whose harvest stage reads from `source_override`
    /// instead of the repository's registered source (offline rebuilds).
    pub fn schedule_with_source(
        &self,
        repo_id: &str,
        source_override: Option<RepoSource>,
    ) -> Result<Job, PipelineError> {
        let mut record = self.core.storage.get_repository(repo_id)?;

        let slot = {
            let mut state = self.core.state.lock();
            if state.active_repos.contains(repo_id) {
                return Err(PipelineError::JobAlreadyActive(repo_id.to_string()));
            }
            if !self.core.storage.try_acquire_job_lock(repo_id)? {
                return Err(PipelineError::JobAlreadyActive(repo_id.to_string()));
            }

            // A repository stuck in an active status with no lock holder
            // is the residue of an interrupted job: fail it, then allow
            // the new schedule.
            if matches!(
                record.status,
                RepoStatus::Scheduled | RepoStatus::Harvesting | RepoStatus::Processing
            ) {
                record.status = RepoStatus::Failed;
                record.last_error = Some("recovered from an interrupted job".to_string());
            }
            record.status = RepoStatus::Scheduled;
            if let Err(e) = self.core.storage.update_repository(&record) {
                self.core.storage.release_job_lock(repo_id);
                return Err(e.into());
            }

            let job_id = format!("j-{}", &uuid::Uuid::new_v4().simple().to_string()[..12]);
            let slot = Arc::new(JobSlot::new(Job::new(job_id.clone(), repo_id)));
            state.jobs.insert(job_id, slot.clone());
            state.active_repos.insert(repo_id.to_string());
            slot
        };

        let job = slot.snapshot();
        self.core.persist_job(&job);
        let sender = self.sender.lock();
        sender
            .as_ref()
            .expect("scheduler not shut down")
            .send(QueuedJob {
                slot,
                source_override,
            })
            .expect("worker pool alive");
        Ok(job)
    }

    /// Current job state: live when this process runs the job, otherwise
    /// the last persisted snapshot.
    pub fn job_status(&self, job_id: &str) -> Result<Job, PipelineError> {
        if let Some(slot) = self.core.state.lock().jobs.get(job_id).cloned() {
            return Ok(slot.snapshot());
        }
        match self.core.storage.get_job_record(job_id)? {
            Some(json) => serde_json::from_str(&json).map_err(|e| {
                PipelineError::Store(termsuggest_core::store::StoreError::CorruptRecord {
                    path: std::path::PathBuf::from(format!("jobs/{job_id}.json")),
                    detail: e.to_string(),
                })
            }),
            None => Err(PipelineError::UnknownJob(job_id.to_string())),
        }
    }

    /// Blocks until the job reaches a terminal stage, or the timeout
    /// elapses.
    pub fn wait(&self, job_id: &str, timeout: Option<Duration>) -> Result<Job, PipelineError> {
        let deadline = timeout.map(|t| Instant::now() + t);
        loop {
            let job = self.job_status(job_id)?;
            if job.stage.is_terminal() {
                return Ok(job);
            }
            if let Some(deadline) = deadline {
                if Instant::now() >= deadline {
                    return Err(PipelineError::WaitTimeout(job_id.to_string()));
                }
            }
            let mut state = self.core.state.lock();
            self.core
                .terminal
                .wait_for(&mut state, Duration::from_millis(25));
        }
    }

    /// Convenience for synchronous runs: schedule, then wait.
    pub fn run_to_completion(
        &self,
        repo_id: &str,
        source_override: Option<RepoSource>,
        timeout: Option<Duration>,
    ) -> Result<Job, PipelineError> {
        let job = self.schedule_with_source(repo_id, source_override)?;
        self.wait(&job.job_id, timeout)
    }

    /// Whether a job is currently active for the repository in this
    /// process.
    pub fn is_active(&self, repo_id: &str) -> bool {
        self.core.state.lock().active_repos.contains(repo_id)
    }
}

impl Drop for Scheduler {
    fn drop(&mut self) {
        self.sender.lock().take();
        for handle in self.workers.lock().drain(..) {
            let _ = handle.join();
        }
    }
}
