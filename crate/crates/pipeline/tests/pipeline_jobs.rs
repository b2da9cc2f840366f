//! End-to-end job tests: harvest through publish against mock endpoints,
//! failure isolation, determinism, and concurrency.

use std::sync::Arc;
use std::time::Duration;

use termsuggest_core::engine::{resolve_metric, CooccurrenceIndex};
use termsuggest_core::metadata::FieldMapping;
use termsuggest_core::repo::{RepoSource, RepoStatus, RepositoryRecord};
use termsuggest_core::snapshot::table_digest;
use termsuggest_core::store::{FsStorage, Serving, Storage};
use termsuggest_core::text::PipelineConfig;
use termsuggest_harvest::mock::MockOaiServer;
use termsuggest_pipeline::{JobStage, PipelineError, PipelineOptions, Scheduler};
use termsuggest_testkit::fixture::fixture_raw_records;

struct Harness {
    _dir: tempfile::TempDir,
    storage: Arc<FsStorage>,
    scheduler: Scheduler,
}

fn harness() -> Harness {
    harness_with(PipelineOptions::default())
}

fn harness_with(options: PipelineOptions) -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let storage = Arc::new(FsStorage::open(dir.path().join("data")).unwrap());
    let scheduler = Scheduler::new(storage.clone(), Arc::new(Serving::new()), options);
    Harness {
        _dir: dir,
        storage,
        scheduler,
    }
}

fn register(storage: &FsStorage, repo_id: &str, source: RepoSource) -> RepositoryRecord {
    let record = RepositoryRecord::new(
        repo_id,
        repo_id,
        "local",
        source,
        FieldMapping::default(),
        PipelineConfig::default(),
    );
    storage.create_repository(&record).unwrap();
    record
}

fn endpoint_source(server: &MockOaiServer) -> RepoSource {
    RepoSource::Endpoint(server.endpoint_config())
}

fn published_index(storage: &FsStorage, repo_id: &str) -> CooccurrenceIndex {
    let id = storage.published_snapshot(repo_id).unwrap().unwrap();
    storage.load_snapshot(&id).unwrap()
}

#[test]
fn fixture_job_harvests_processes_and_publishes() {
    let h = harness();
    let server = MockOaiServer::serving(fixture_raw_records());
    register(&h.storage, "r-demo", endpoint_source(&server));

    let job = h
        .scheduler
        .run_to_completion("r-demo", None, Some(Duration::from_secs(20)))
        .unwrap();
    assert_eq!(job.stage, JobStage::Done, "error: {:?}", job.error);
    assert_eq!(job.records_harvested, 4);
    assert_eq!(job.records_processed, 4);
    assert!(job.snapshot.is_some());
    assert!(job.started_at.unwrap() >= job.created_at);
    assert!(job.finished_at.unwrap() >= job.started_at.unwrap());

    let record = h.storage.get_repository("r-demo").unwrap();
    assert_eq!(record.status, RepoStatus::Published);

    let index = published_index(&h.storage, "r-demo");
    let jaccard = resolve_metric("jaccard").unwrap();
    let result = index.recommend("youth", 10, jaccard, 1);
    let got: Vec<(&str, f64)> = result
        .recommendations
        .iter()
        .map(|r| (r.term.as_str(), r.score))
        .collect();
    assert_eq!(got[0].0, "adolescent");
    assert!((got[0].1 - 1.0).abs() < 1e-12);
    assert_eq!(got[1].0, "labor market");
    assert!((got[1].1 - 1.0 / 3.0).abs() < 1e-12);

    // The serving map saw the publish.
    let served = h.scheduler.serving().get("r-demo").unwrap();
    assert_eq!(Some(served.id.clone()), job.snapshot);
}

#[test]
fn schedule_rejects_unknown_repository_and_unknown_job() {
    let h = harness();
    assert!(matches!(
        h.scheduler.schedule("r-nope").unwrap_err(),
        PipelineError::UnknownRepository(_)
    ));
    assert!(matches!(
        h.scheduler.job_status("j-nope").unwrap_err(),
        PipelineError::UnknownJob(_)
    ));
}

#[test]
fn one_active_job_per_repository() {
    let h = harness();
    let server = MockOaiServer::builder()
        .records(fixture_raw_records())
        .page_size(1)
        .page_delay(Duration::from_millis(120))
        .build();
    register(&h.storage, "r-demo", endpoint_source(&server));

    let job = h.scheduler.schedule("r-demo").unwrap();
    let second = h.scheduler.schedule("r-demo");
    assert!(matches!(second, Err(PipelineError::JobAlreadyActive(_))));

    let done = h.scheduler.wait(&job.job_id, Some(Duration::from_secs(20))).unwrap();
    assert_eq!(done.stage, JobStage::Done);

    // After completion the repository is schedulable again.
    let again = h.scheduler.schedule("r-demo").unwrap();
    let done = h.scheduler.wait(&again.job_id, Some(Duration::from_secs(20))).unwrap();
    assert_eq!(done.stage, JobStage::Done);
}

#[test]
fn failing_endpoint_marks_job_and_repository_failed() {
    let h = harness();
    let server = MockOaiServer::builder()
        .records(fixture_raw_records())
        .failing()
        .build();
    register(&h.storage, "r-demo", endpoint_source(&server));

    let job = h
        .scheduler
        .run_to_completion("r-demo", None, Some(Duration::from_secs(20)))
        .unwrap();
    assert_eq!(job.stage, JobStage::Failed);
    let error = job.error.unwrap();
    assert!(error.starts_with("harvest:"), "diagnostic was {error}");

    let record = h.storage.get_repository("r-demo").unwrap();
    assert_eq!(record.status, RepoStatus::Failed);
    assert!(record.last_error.is_some());
    assert_eq!(h.storage.published_snapshot("r-demo").unwrap(), None);

    // A failed repository accepts a fresh schedule.
    server.set_failing(false);
    let retry = h
        .scheduler
        .run_to_completion("r-demo", None, Some(Duration::from_secs(20)))
        .unwrap();
    assert_eq!(retry.stage, JobStage::Done);
    assert_eq!(retry.snapshot.as_ref().unwrap().sequence(), 1);
}

#[test]
fn failed_job_never_touches_the_published_snapshot() {
    let h = harness();
    let server = MockOaiServer::serving(fixture_raw_records());
    register(&h.storage, "r-demo", endpoint_source(&server));

    let first = h
        .scheduler
        .run_to_completion("r-demo", None, Some(Duration::from_secs(20)))
        .unwrap();
    assert_eq!(first.stage, JobStage::Done);
    let published = first.snapshot.clone().unwrap();
    let before = published_index(&h.storage, "r-demo");

    // Suggestions keep serving identical answers before, during, and
    // after an injected failure.
    server.set_failing(true);
    let job = h.scheduler.schedule("r-demo").unwrap();
    let during = published_index(&h.storage, "r-demo");
    assert_eq!(during, before);
    let failed = h.scheduler.wait(&job.job_id, Some(Duration::from_secs(20))).unwrap();
    assert_eq!(failed.stage, JobStage::Failed);

    assert_eq!(
        h.storage.published_snapshot("r-demo").unwrap(),
        Some(published)
    );
    let after = published_index(&h.storage, "r-demo");
    assert_eq!(after, before);
    // The serving map still answers from the old snapshot.
    assert_eq!(h.scheduler.serving().get("r-demo").unwrap().index, before);
}

#[test]
fn rerun_after_fix_increments_snapshot_sequence() {
    let h = harness();
    let server = MockOaiServer::serving(fixture_raw_records());
    register(&h.storage, "r-demo", endpoint_source(&server));

    let first = h
        .scheduler
        .run_to_completion("r-demo", None, Some(Duration::from_secs(20)))
        .unwrap();
    let second = h
        .scheduler
        .run_to_completion("r-demo", None, Some(Duration::from_secs(20)))
        .unwrap();
    assert_eq!(first.snapshot.as_ref().unwrap().sequence(), 1);
    assert_eq!(second.snapshot.as_ref().unwrap().sequence(), 2);
    assert_eq!(second.stage, JobStage::Done);
}

#[test]
fn identical_inputs_build_identical_tables() {
    let h = harness();
    let server = MockOaiServer::serving(fixture_raw_records());
    register(&h.storage, "r-demo", endpoint_source(&server));

    let a = h
        .scheduler
        .run_to_completion("r-demo", None, Some(Duration::from_secs(20)))
        .unwrap();
    let b = h
        .scheduler
        .run_to_completion("r-demo", None, Some(Duration::from_secs(20)))
        .unwrap();
    let index_a = h.storage.load_snapshot(&a.snapshot.unwrap()).unwrap();
    let index_b = h.storage.load_snapshot(&b.snapshot.unwrap()).unwrap();
    assert_eq!(table_digest(&index_a), table_digest(&index_b));
}

#[test]
fn jobs_for_distinct_repositories_run_concurrently_and_independently() {
    let h = harness_with(PipelineOptions {
        workers: 2,
        job_timeout: None,
    });
    let server_a = MockOaiServer::builder()
        .records(fixture_raw_records())
        .page_size(1)
        .page_delay(Duration::from_millis(60))
        .build();
    let mut other_records = fixture_raw_records();
    other_records.truncate(2);
    let server_b = MockOaiServer::builder()
        .records(other_records)
        .page_size(1)
        .page_delay(Duration::from_millis(60))
        .build();
    register(&h.storage, "r-a", endpoint_source(&server_a));
    register(&h.storage, "r-b", endpoint_source(&server_b));

    let job_a = h.scheduler.schedule("r-a").unwrap();
    let job_b = h.scheduler.schedule("r-b").unwrap();
    let done_a = h.scheduler.wait(&job_a.job_id, Some(Duration::from_secs(30))).unwrap();
    let done_b = h.scheduler.wait(&job_b.job_id, Some(Duration::from_secs(30))).unwrap();
    assert_eq!(done_a.stage, JobStage::Done);
    assert_eq!(done_b.stage, JobStage::Done);
    assert_eq!(done_a.records_processed, 4);
    assert_eq!(done_b.records_processed, 2);
    assert_eq!(published_index(&h.storage, "r-a").n_docs(), 4);
    assert_eq!(published_index(&h.storage, "r-b").n_docs(), 2);
}

#[test]
fn progress_counters_are_monotone_across_polls() {
    let h = harness();
    let server = MockOaiServer::builder()
        .records(fixture_raw_records())
        .page_size(1)
        .page_delay(Duration::from_millis(50))
        .build();
    register(&h.storage, "r-demo", endpoint_source(&server));

    let job = h.scheduler.schedule("r-demo").unwrap();
    let mut last = (0u64, 0u64);
    loop {
        let status = h.scheduler.job_status(&job.job_id).unwrap();
        let now = (status.records_harvested, status.records_processed);
        assert!(now.0 >= last.0, "harvest counter went backwards");
        assert!(now.1 >= last.1, "process counter went backwards");
        assert!(now.0 <= 4 && now.1 <= 4);
        last = now;
        if status.stage.is_terminal() {
            assert_eq!(status.stage, JobStage::Done);
            assert!(status.finished_at.is_some());
            break;
        }
        std::thread::sleep(Duration::from_millis(10));
    }
    assert_eq!(last, (4, 4));
}

#[test]
fn file_source_jobs_isolate_corrupt_files_as_warnings() {
    let h = harness();
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.xml");
    std::fs::write(
        &good,
        termsuggest_harvest::records_to_envelope("file://local", &fixture_raw_records()),
    )
    .unwrap();
    let bad = dir.path().join("bad.xml");
    std::fs::write(&bad, "<records><record><header>").unwrap();

    register(
        &h.storage,
        "r-files",
        RepoSource::Files {
            paths: vec![bad, good],
        },
    );
    let job = h
        .scheduler
        .run_to_completion("r-files", None, Some(Duration::from_secs(20)))
        .unwrap();
    assert_eq!(job.stage, JobStage::Done, "error: {:?}", job.error);
    assert_eq!(job.records_processed, 4);
    assert_eq!(job.warnings.len(), 1);
    assert!(job.warnings[0].contains("bad.xml"));
}

#[test]
fn job_status_survives_scheduler_restart() {
    let dir = tempfile::tempdir().unwrap();
    let storage = Arc::new(FsStorage::open(dir.path().join("data")).unwrap());
    let server = MockOaiServer::serving(fixture_raw_records());
    register(&storage, "r-demo", endpoint_source(&server));

    let job_id = {
        let scheduler = Scheduler::new(
            storage.clone(),
            Arc::new(Serving::new()),
            PipelineOptions::default(),
        );
        let job = scheduler
            .run_to_completion("r-demo", None, Some(Duration::from_secs(20)))
            .unwrap();
        assert_eq!(job.stage, JobStage::Done);
        job.job_id
    };

    let fresh = Scheduler::new(
        storage.clone(),
        Arc::new(Serving::new()),
        PipelineOptions::default(),
    );
    let recalled = fresh.job_status(&job_id).unwrap();
    assert_eq!(recalled.stage, JobStage::Done);
    assert_eq!(recalled.records_processed, 4);
}

#[test]
fn job_timeout_fails_slow_jobs() {
    let h = harness_with(PipelineOptions {
        workers: 1,
        job_timeout: Some(Duration::from_millis(80)),
    });
    let server = MockOaiServer::builder()
        .records(fixture_raw_records())
        .page_size(1)
        .page_delay(Duration::from_millis(100))
        .build();
    register(&h.storage, "r-slow", endpoint_source(&server));
    let job = h
        .scheduler
        .run_to_completion("r-slow", None, Some(Duration::from_secs(30)))
        .unwrap();
    assert_eq!(job.stage, JobStage::Failed);
    assert!(job.error.unwrap().contains("time limit"));
}

#[test]
fn deleted_records_are_excluded_from_the_corpus() {
    let h = harness();
    let mut records = fixture_raw_records();
    records[3].deleted = true;
    records[3].metadata_xml = None;
    let server = MockOaiServer::serving(records);
    register(&h.storage, "r-demo", endpoint_source(&server));

    let job = h
        .scheduler
        .run_to_completion("r-demo", None, Some(Duration::from_secs(20)))
        .unwrap();
    assert_eq!(job.stage, JobStage::Done);
    assert_eq!(job.records_harvested, 4);
    assert_eq!(job.records_processed, 3);
    assert_eq!(published_index(&h.storage, "r-demo").n_docs(), 3);
}

#[test]
fn raw_records_are_retained_for_reprocessing() {
    let h = harness();
    let server = MockOaiServer::serving(fixture_raw_records());
    register(&h.storage, "r-demo", endpoint_source(&server));
    h.scheduler
        .run_to_completion("r-demo", None, Some(Duration::from_secs(20)))
        .unwrap();

    let retained = h
        .storage
        .root()
        .join("repos/r-demo/raw/records.xml");
    assert!(retained.exists());
    // The retained file rebuilds the same index offline.
    let outcome = termsuggest_harvest::ingest_files_collect(&[retained]);
    assert!(outcome.failures.is_empty());
    assert_eq!(outcome.records.len(), 4);
}
