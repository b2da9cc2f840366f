//! Persistence of repository registrations and immutable index
//! snapshots, plus the in-memory serving map that swaps published
//! snapshots atomically under concurrent readers.
//!
//! Persistence sits behind the [`Storage`] trait; [`FsStorage`] is the
//! bundled file-based implementation. All writes go through a
//! write-temp-then-rename sequence so a crash never leaves a partially
//! visible file, and the previously published snapshot keeps serving
//! until the new pointer is durable.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::RwLock;
use thiserror::Error;

use crate::engine::CooccurrenceIndex;
use crate::repo::{RepoStatus, RepositoryRecord, SnapshotId};
use crate::snapshot::{self, SnapshotError};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage I/O failed on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("unknown repository '{0}'")]
    UnknownRepository(String),
    #[error("repository named '{name}' already exists for owner '{owner}'")]
    DuplicateName { owner: String, name: String },
    #[error("repository id '{0}' already exists")]
    DuplicateId(String),
    #[error("unknown snapshot '{0}'")]
    UnknownSnapshot(SnapshotId),
    #[error("snapshot '{snapshot}' does not belong to repository '{repo_id}'")]
    SnapshotMismatch { repo_id: String, snapshot: SnapshotId },
    #[error("invalid status transition {from} -> {to}")]
    InvalidTransition { from: RepoStatus, to: RepoStatus },
    #[error("snapshot {0}")]
    Snapshot(#[from] SnapshotError),
    #[error("corrupt record at {path}: {detail}")]
    CorruptRecord { path: PathBuf, detail: String },
}

/// Persistence operations required by the pipeline, service, and CLI.
pub trait Storage: Send + Sync {
    fn create_repository(&self, record: &RepositoryRecord) -> Result<(), StoreError>;
    fn update_repository(&self, record: &RepositoryRecord) -> Result<(), StoreError>;
    fn get_repository(&self, repo_id: &str) -> Result<RepositoryRecord, StoreError>;
    fn find_repository(&self, owner: &str, name: &str)
        -> Result<Option<RepositoryRecord>, StoreError>;
    fn list_repositories(&self) -> Result<Vec<RepositoryRecord>, StoreError>;

    /// Writes a new immutable snapshot and returns its id; sequence
    /// numbers strictly increase per repository.
    fn persist_snapshot(
        &self,
        repo_id: &str,
        index: &CooccurrenceIndex,
    ) -> Result<SnapshotId, StoreError>;
    fn load_snapshot(&self, id: &SnapshotId) -> Result<CooccurrenceIndex, StoreError>;
    fn list_snapshots(&self, repo_id: &str) -> Result<Vec<SnapshotId>, StoreError>;

    /// Durably switches the repository's published snapshot and marks it
    /// published. All-or-nothing: a crash before completion leaves the
    /// previous snapshot in place.
    fn publish(&self, repo_id: &str, id: &SnapshotId) -> Result<(), StoreError>;
    fn published_snapshot(&self, repo_id: &str) -> Result<Option<SnapshotId>, StoreError>;

    /// Retains the harvested record set for later reprocessing; returns
    /// the stored location.
    fn store_raw_records(&self, repo_id: &str, xml: &str) -> Result<PathBuf, StoreError>;

    /// Cross-process guard for the one-active-job-per-repository rule.
    /// Returns false when another job holds the lock.
    fn try_acquire_job_lock(&self, repo_id: &str) -> Result<bool, StoreError>;
    fn release_job_lock(&self, repo_id: &str);
    /// Removes a lock left behind by a crashed process.
    fn force_release_job_lock(&self, repo_id: &str) -> Result<bool, StoreError>;

    /// Opaque job-state blobs so job status survives the scheduling
    /// process.
    fn put_job_record(&self, job_id: &str, json: &str) -> Result<(), StoreError>;
    fn get_job_record(&self, job_id: &str) -> Result<Option<String>, StoreError>;
}

/// Validates a lifecycle transition and persists the repository with its
/// new status.
pub fn transition_repository(
    storage: &dyn Storage,
    record: &mut RepositoryRecord,
    next: RepoStatus,
) -> Result<(), StoreError> {
    if !record.status.can_transition_to(next) {
        return Err(StoreError::InvalidTransition {
            from: record.status,
            to: next,
        });
    }
    record.status = next;
    storage.update_repository(record)
}

/// File-backed [`Storage`]: one directory per repository holding its
/// record, snapshots, published pointer, and retained raw records.
pub struct FsStorage {
    root: PathBuf,
    temp_counter: AtomicU64,
}

impl FsStorage {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        let storage = FsStorage {
            temp_counter: AtomicU64::new(0),
            root,
        };
        storage.mkdirs(&storage.repos_dir())?;
        storage.mkdirs(&storage.jobs_dir())?;
        Ok(storage)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn repos_dir(&self) -> PathBuf {
        self.root.join("repos")
    }

    fn jobs_dir(&self) -> PathBuf {
        self.root.join("jobs")
    }

    fn repo_dir(&self, repo_id: &str) -> PathBuf {
        self.repos_dir().join(repo_id)
    }

    fn repo_file(&self, repo_id: &str) -> PathBuf {
        self.repo_dir(repo_id).join("repo.json")
    }

    fn snapshots_dir(&self, repo_id: &str) -> PathBuf {
        self.repo_dir(repo_id).join("snapshots")
    }

    fn snapshot_file(&self, id: &SnapshotId) -> PathBuf {
        self.snapshots_dir(id.repo_id())
            .join(format!("{}.tsnap", id.sequence()))
    }

    fn published_file(&self, repo_id: &str) -> PathBuf {
        self.repo_dir(repo_id).join("published")
    }

    fn lock_file(&self, repo_id: &str) -> PathBuf {
        self.repo_dir(repo_id).join("job.lock")
    }

    fn mkdirs(&self, path: &Path) -> Result<(), StoreError> {
        fs::create_dir_all(path).map_err(|source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Writes a file atomically: temp file in the same directory, fsync,
    /// rename over the destination, fsync the directory.
    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
        let dir = path.parent().expect("storage paths have parents");
        let tmp = dir.join(format!(
            ".tmp-{}-{}",
            std::process::id(),
            self.temp_counter.fetch_add(1, Ordering::Relaxed)
        ));
        let io_err = |p: &Path| {
            let p = p.to_path_buf();
            move |source| StoreError::Io { path: p, source }
        };
        let mut file = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        file.write_all(bytes).map_err(io_err(&tmp))?;
        file.sync_all().map_err(io_err(&tmp))?;
        drop(file);
        fs::rename(&tmp, path).map_err(io_err(path))?;
        if let Ok(dir_handle) = fs::File::open(dir) {
            let _ = dir_handle.sync_all();
        }
        Ok(())
    }

    fn read_repo(&self, path: &Path) -> Result<RepositoryRecord, StoreError> {
        let bytes = fs::read(path).map_err(|source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_slice(&bytes).map_err(|e| StoreError::CorruptRecord {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })
    }
}

impl Storage for FsStorage {
    fn create_repository(&self, record: &RepositoryRecord) -> Result<(), StoreError> {
        if self.repo_file(&record.repo_id).exists() {
            return Err(StoreError::DuplicateId(record.repo_id.clone()));
        }
        if self.find_repository(&record.owner, &record.name)?.is_some() {
            return Err(StoreError::DuplicateName {
                owner: record.owner.clone(),
                name: record.name.clone(),
            });
        }
        self.mkdirs(&self.snapshots_dir(&record.repo_id))?;
        self.write_atomic(
            &self.repo_file(&record.repo_id),
            &serde_json::to_vec_pretty(record).expect("repository records serialize"),
        )
    }

    fn update_repository(&self, record: &RepositoryRecord) -> Result<(), StoreError> {
        if !self.repo_file(&record.repo_id).exists() {
            return Err(StoreError::UnknownRepository(record.repo_id.clone()));
        }
        self.write_atomic(
            &self.repo_file(&record.repo_id),
            &serde_json::to_vec_pretty(record).expect("repository records serialize"),
        )
    }

    fn get_repository(&self, repo_id: &str) -> Result<RepositoryRecord, StoreError> {
        let path = self.repo_file(repo_id);
        if !path.exists() {
            return Err(StoreError::UnknownRepository(repo_id.to_string()));
        }
        self.read_repo(&path)
    }

    fn find_repository(
        &self,
        owner: &str,
        name: &str,
    ) -> Result<Option<RepositoryRecord>, StoreError> {
        Ok(self
            .list_repositories()?
            .into_iter()
            .find(|r| r.owner == owner && r.name == name))
    }

    fn list_repositories(&self) -> Result<Vec<RepositoryRecord>, StoreError> {
        let dir = self.repos_dir();
        let entries = fs::read_dir(&dir).map_err(|source| StoreError::Io {
            path: dir.clone(),
            source,
        })?;
        let mut repos = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|source| StoreError::Io {
                path: dir.clone(),
                source,
            })?;
            let repo_file = entry.path().join("repo.json");
            if repo_file.exists() {
                repos.push(self.read_repo(&repo_file)?);
            }
        }
        repos.sort_by(|a, b| a.repo_id.cmp(&b.repo_id));
        Ok(repos)
    }

    fn persist_snapshot(
        &self,
        repo_id: &str,
        index: &CooccurrenceIndex,
    ) -> Result<SnapshotId, StoreError> {
        if !self.repo_file(repo_id).exists() {
            return Err(StoreError::UnknownRepository(repo_id.to_string()));
        }
        self.mkdirs(&self.snapshots_dir(repo_id))?;
        let next = self
            .list_snapshots(repo_id)?
            .last()
            .map(|id| id.sequence() + 1)
            .unwrap_or(1);
        let id = SnapshotId::new(repo_id, next);
        self.write_atomic(
            &self.snapshot_file(&id),
            &snapshot::snapshot_to_bytes(repo_id, index),
        )?;
        Ok(id)
    }

    fn load_snapshot(&self, id: &SnapshotId) -> Result<CooccurrenceIndex, StoreError> {
        let path = self.snapshot_file(id);
        let bytes = match fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::UnknownSnapshot(id.clone()))
            }
            Err(source) => return Err(StoreError::Io { path, source }),
        };
        let (embedded_repo, index) = snapshot::snapshot_from_bytes(&bytes)?;
        if embedded_repo != id.repo_id() {
            return Err(StoreError::SnapshotMismatch {
                repo_id: id.repo_id().to_string(),
                snapshot: id.clone(),
            });
        }
        Ok(index)
    }

    fn list_snapshots(&self, repo_id: &str) -> Result<Vec<SnapshotId>, StoreError> {
        let dir = self.snapshots_dir(repo_id);
        if !dir.exists() {
            return Ok(Vec::new());
        }
        let entries = fs::read_dir(&dir).map_err(|source| StoreError::Io {
            path: dir.clone(),
            source,
        })?;
        let mut sequences: Vec<u64> = entries
            .filter_map(|entry| entry.ok())
            .filter_map(|entry| {
                let name = entry.file_name();
                let name = name.to_str()?;
                name.strip_suffix(".tsnap")?.parse().ok()
            })
            .collect();
        sequences.sort_unstable();
        Ok(sequences
            .into_iter()
            .map(|seq| SnapshotId::new(repo_id, seq))
            .collect())
    }

    fn publish(&self, repo_id: &str, id: &SnapshotId) -> Result<(), StoreError> {
        if id.repo_id() != repo_id {
            return Err(StoreError::SnapshotMismatch {
                repo_id: repo_id.to_string(),
                snapshot: id.clone(),
            });
        }
        let mut record = self.get_repository(repo_id)?;
        if !self.snapshot_file(id).exists() {
            return Err(StoreError::UnknownSnapshot(id.clone()));
        }
        // The pointer write is the commit point; the record update mirrors
        // it for API consumers.
        self.write_atomic(
            &self.published_file(repo_id),
            id.sequence().to_string().as_bytes(),
        )?;
        record.published_snapshot = Some(id.clone());
        record.status = RepoStatus::Published;
        record.last_error = None;
        self.update_repository(&record)
    }

    fn published_snapshot(&self, repo_id: &str) -> Result<Option<SnapshotId>, StoreError> {
        if !self.repo_file(repo_id).exists() {
            return Err(StoreError::UnknownRepository(repo_id.to_string()));
        }
        let path = self.published_file(repo_id);
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(StoreError::Io { path, source }),
        };
        let sequence = text
            .trim()
            .parse()
            .map_err(|_| StoreError::CorruptRecord {
                path,
                detail: format!("bad published pointer '{}'", text.trim()),
            })?;
        Ok(Some(SnapshotId::new(repo_id, sequence)))
    }

    fn store_raw_records(&self, repo_id: &str, xml: &str) -> Result<PathBuf, StoreError> {
        let dir = self.repo_dir(repo_id).join("raw");
        self.mkdirs(&dir)?;
        let path = dir.join("records.xml");
        self.write_atomic(&path, xml.as_bytes())?;
        Ok(path)
    }

    fn try_acquire_job_lock(&self, repo_id: &str) -> Result<bool, StoreError> {
        let path = self.lock_file(repo_id);
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut file) => {
                let _ = writeln!(file, "{}", std::process::id());
                Ok(true)
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Ok(false),
            Err(source) => Err(StoreError::Io { path, source }),
        }
    }

    fn release_job_lock(&self, repo_id: &str) {
        let _ = fs::remove_file(self.lock_file(repo_id));
    }

    fn force_release_job_lock(&self, repo_id: &str) -> Result<bool, StoreError> {
        match fs::remove_file(self.lock_file(repo_id)) {
            Ok(()) => Ok(true),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(false),
            Err(source) => Err(StoreError::Io {
                path: self.lock_file(repo_id),
                source,
            }),
        }
    }

    fn put_job_record(&self, job_id: &str, json: &str) -> Result<(), StoreError> {
        self.write_atomic(
            &self.jobs_dir().join(format!("{job_id}.json")),
            json.as_bytes(),
        )
    }

    fn get_job_record(&self, job_id: &str) -> Result<Option<String>, StoreError> {
        let path = self.jobs_dir().join(format!("{job_id}.json"));
        match fs::read_to_string(&path) {
            Ok(text) => Ok(Some(text)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(StoreError::Io { path, source }),
        }
    }
}

/// One snapshot as served to suggestion queries.
#[derive(Debug)]
pub struct ServedSnapshot {
    pub id: SnapshotId,
    pub index: CooccurrenceIndex,
}

/// In-memory map from repository id to its served snapshot.
///
/// Readers clone an `Arc` once and answer entirely from it, so a
/// concurrent publish can never produce a response mixing two snapshots.
#[derive(Default)]
pub struct Serving {
    inner: RwLock<HashMap<String, Arc<ServedSnapshot>>>,
}

impl Serving {
    pub fn new() -> Self {
        Self::default()
    }

    /// The currently installed snapshot, if any.
    pub fn get(&self, repo_id: &str) -> Option<Arc<ServedSnapshot>> {
        self.inner.read().get(repo_id).cloned()
    }

    /// Atomically replaces the served snapshot for its repository.
    pub fn install(&self, snapshot: Arc<ServedSnapshot>) {
        self.inner
            .write()
            .insert(snapshot.id.repo_id().to_string(), snapshot);
    }

    pub fn remove(&self, repo_id: &str) {
        self.inner.write().remove(repo_id);
    }

    /// Returns the snapshot named by `published`, loading and installing
    /// it when the cached one is missing or different.
    pub fn get_current(
        &self,
        published: &SnapshotId,
        storage: &dyn Storage,
    ) -> Result<Arc<ServedSnapshot>, StoreError> {
        if let Some(cached) = self.get(published.repo_id()) {
            if cached.id == *published {
                return Ok(cached);
            }
        }
        let index = storage.load_snapshot(published)?;
        let loaded = Arc::new(ServedSnapshot {
            id: published.clone(),
            index,
        });
        let mut map = self.inner.write();
        match map.get(published.repo_id()) {
            Some(existing) if existing.id == *published => Ok(existing.clone()),
            _ => {
                map.insert(published.repo_id().to_string(), loaded.clone());
                Ok(loaded)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metadata::FieldMapping;
    use crate::repo::RepoSource;
    use crate::text::PipelineConfig;

    fn sample_record(repo_id: &str, name: &str) -> RepositoryRecord {
        RepositoryRecord::new(
            repo_id,
            name,
            "local",
            RepoSource::Files { paths: vec![] },
            FieldMapping::default(),
            PipelineConfig::default(),
        )
    }

    fn sample_index() -> CooccurrenceIndex {
        let mut index = CooccurrenceIndex::new();
        index.add_document(["youth"], ["adolescent"]);
        index.add_document(["youth", "work"], ["labor market"]);
        index
    }

    fn open_storage() -> (tempfile::TempDir, FsStorage) {
        let dir = tempfile::tempdir().unwrap();
        let storage = FsStorage::open(dir.path().join("data")).unwrap();
        (dir, storage)
    }

    #[test]
    fn repository_crud_and_duplicate_names() {
        let (_guard, storage) = open_storage();
        let record = sample_record("r-1", "demo");
        storage.create_repository(&record).unwrap();
        assert_eq!(storage.get_repository("r-1").unwrap(), record);

        let same_name = sample_record("r-2", "demo");
        assert!(matches!(
            storage.create_repository(&same_name).unwrap_err(),
            StoreError::DuplicateName { .. }
        ));
        let other_owner = RepositoryRecord {
            owner: "bob".into(),
            ..sample_record("r-3", "demo")
        };
        storage.create_repository(&other_owner).unwrap();
        assert_eq!(storage.list_repositories().unwrap().len(), 2);
        assert!(matches!(
            storage.get_repository("r-404").unwrap_err(),
            StoreError::UnknownRepository(_)
        ));
    }

    #[test]
    fn snapshot_persist_load_round_trip() {
        let (_guard, storage) = open_storage();
        storage.create_repository(&sample_record("r-1", "demo")).unwrap();
        let index = sample_index();
        let id = storage.persist_snapshot("r-1", &index).unwrap();
        assert_eq!(id.sequence(), 1);
        assert_eq!(storage.load_snapshot(&id).unwrap(), index);
    }

    #[test]
    fn snapshot_sequences_strictly_increase() {
        let (_guard, storage) = open_storage();
        storage.create_repository(&sample_record("r-1", "demo")).unwrap();
        let a = storage.persist_snapshot("r-1", &sample_index()).unwrap();
        let b = storage.persist_snapshot("r-1", &sample_index()).unwrap();
        assert!(b.sequence() > a.sequence());
        assert_eq!(
            storage.list_snapshots("r-1").unwrap(),
            vec![a.clone(), b.clone()]
        );
    }

    #[test]
    fn empty_index_persists() {
        let (_guard, storage) = open_storage();
        storage.create_repository(&sample_record("r-1", "demo")).unwrap();
        let id = storage
            .persist_snapshot("r-1", &CooccurrenceIndex::new())
            .unwrap();
        assert_eq!(storage.load_snapshot(&id).unwrap().n_docs(), 0);
    }

    #[test]
    fn load_unknown_snapshot_fails() {
        let (_guard, storage) = open_storage();
        storage.create_repository(&sample_record("r-1", "demo")).unwrap();
        let err = storage
            .load_snapshot(&SnapshotId::new("r-1", 9))
            .unwrap_err();
        assert!(matches!(err, StoreError::UnknownSnapshot(_)));
    }

    #[test]
    fn truncated_snapshot_is_reported_corrupt() {
        let (_guard, storage) = open_storage();
        storage.create_repository(&sample_record("r-1", "demo")).unwrap();
        let id = storage.persist_snapshot("r-1", &sample_index()).unwrap();
        let path = storage.snapshot_file(&id);
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        assert!(matches!(
            storage.load_snapshot(&id).unwrap_err(),
            StoreError::Snapshot(_)
        ));
    }

    #[test]
    fn publish_switches_pointer_and_validates_ownership() {
        let (_guard, storage) = open_storage();
        storage.create_repository(&sample_record("r-1", "demo")).unwrap();
        storage.create_repository(&sample_record("r-2", "other")).unwrap();
        assert_eq!(storage.published_snapshot("r-1").unwrap(), None);

        let id = storage.persist_snapshot("r-1", &sample_index()).unwrap();
        storage.publish("r-1", &id).unwrap();
        assert_eq!(storage.published_snapshot("r-1").unwrap(), Some(id.clone()));
        let record = storage.get_repository("r-1").unwrap();
        assert_eq!(record.status, RepoStatus::Published);
        assert_eq!(record.published_snapshot, Some(id.clone()));

        // Snapshot of another repository is rejected.
        assert!(matches!(
            storage.publish("r-2", &id).unwrap_err(),
            StoreError::SnapshotMismatch { .. }
        ));
        // Unknown sequence is rejected.
        assert!(matches!(
            storage.publish("r-1", &SnapshotId::new("r-1", 99)).unwrap_err(),
            StoreError::UnknownSnapshot(_)
        ));
    }

    #[test]
    fn unpublished_persist_leaves_pointer_untouched() {
        let (_guard, storage) = open_storage();
        storage.create_repository(&sample_record("r-1", "demo")).unwrap();
        let first = storage.persist_snapshot("r-1", &sample_index()).unwrap();
        storage.publish("r-1", &first).unwrap();
        // A later persist without publish must not change what serves.
        let _second = storage.persist_snapshot("r-1", &CooccurrenceIndex::new()).unwrap();
        let reopened = FsStorage::open(storage.root().to_path_buf()).unwrap();
        assert_eq!(reopened.published_snapshot("r-1").unwrap(), Some(first));
    }

    #[test]
    fn job_lock_is_exclusive() {
        let (_guard, storage) = open_storage();
        storage.create_repository(&sample_record("r-1", "demo")).unwrap();
        assert!(storage.try_acquire_job_lock("r-1").unwrap());
        assert!(!storage.try_acquire_job_lock("r-1").unwrap());
        storage.release_job_lock("r-1");
        assert!(storage.try_acquire_job_lock("r-1").unwrap());
        assert!(storage.force_release_job_lock("r-1").unwrap());
        assert!(!storage.force_release_job_lock("r-1").unwrap());
    }

    #[test]
    fn serving_map_swaps_to_published_snapshot() {
        let (_guard, storage) = open_storage();
        storage.create_repository(&sample_record("r-1", "demo")).unwrap();
        let first = storage.persist_snapshot("r-1", &sample_index()).unwrap();
        storage.publish("r-1", &first).unwrap();

        let serving = Serving::new();
        let served = serving.get_current(&first, &storage).unwrap();
        assert_eq!(served.id, first);
        assert_eq!(served.index.n_docs(), 2);

        let second = storage
            .persist_snapshot("r-1", &CooccurrenceIndex::new())
            .unwrap();
        storage.publish("r-1", &second).unwrap();
        let served = serving.get_current(&second, &storage).unwrap();
        assert_eq!(served.id, second);
        assert_eq!(served.index.n_docs(), 0);
    }

    #[test]
    fn transition_validation_rejects_illegal_moves() {
        let (_guard, storage) = open_storage();
        let mut record = sample_record("r-1", "demo");
        storage.create_repository(&record).unwrap();
        transition_repository(&storage, &mut record, RepoStatus::Scheduled).unwrap();
        assert!(matches!(
            transition_repository(&storage, &mut record, RepoStatus::Published).unwrap_err(),
            StoreError::InvalidTransition { .. }
        ));
        assert_eq!(
            storage.get_repository("r-1").unwrap().status,
            RepoStatus::Scheduled
        );
    }
}
