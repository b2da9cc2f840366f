//! Repository registrations: data source configuration, lifecycle status,
//! and snapshot identifiers.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::metadata::FieldMapping;
use crate::text::PipelineConfig;

/// Connection settings for one OAI-PMH endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: Url,
    /// Metadata format requested from the endpoint; only `oai_dc` is
    /// supported.
    pub metadata_prefix: String,
    pub set_spec: Option<String>,
    pub from: Option<DateTime<Utc>>,
    pub until: Option<DateTime<Utc>>,
    /// Retries per request after the initial attempt.
    pub max_retries: u32,
    /// Base delay for exponential backoff between retries.
    #[serde(with = "duration_ms", rename = "backoff_base_ms")]
    pub backoff_base: Duration,
}

mod duration_ms {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        (d.as_millis() as u64).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

pub const DEFAULT_MAX_RETRIES: u32 = 3;
pub const DEFAULT_BACKOFF_BASE: Duration = Duration::from_millis(250);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EndpointConfigError {
    #[error("base URL must use http or https, got '{0}'")]
    UnsupportedScheme(String),
    #[error("unsupported metadata prefix '{0}': only oai_dc is supported")]
    UnsupportedMetadataPrefix(String),
    #[error("'from' datestamp is after 'until'")]
    InvertedRange,
}

impl EndpointConfig {
    pub fn new(base_url: Url) -> Self {
        EndpointConfig {
            base_url,
            metadata_prefix: "oai_dc".to_string(),
            set_spec: None,
            from: None,
            until: None,
            max_retries: DEFAULT_MAX_RETRIES,
            backoff_base: DEFAULT_BACKOFF_BASE,
        }
    }

    pub fn validate(&self) -> Result<(), EndpointConfigError> {
        match self.base_url.scheme() {
            "http" | "https" => {}
            other => return Err(EndpointConfigError::UnsupportedScheme(other.to_string())),
        }
        if self.metadata_prefix != "oai_dc" {
            return Err(EndpointConfigError::UnsupportedMetadataPrefix(
                self.metadata_prefix.clone(),
            ));
        }
        if let (Some(from), Some(until)) = (self.from, self.until) {
            if from > until {
                return Err(EndpointConfigError::InvertedRange);
            }
        }
        Ok(())
    }
}

/// Where a repository's records come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RepoSource {
    Endpoint(EndpointConfig),
    Files { paths: Vec<PathBuf> },
}

/// Repository lifecycle states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepoStatus {
    Registered,
    Scheduled,
    Harvesting,
    Processing,
    Published,
    Failed,
}

impl RepoStatus {
    /// Lifecycle transitions: jobs move scheduled -> harvesting ->
    /// processing -> published; failed is reachable from any active
    /// state; scheduled is reachable from registered, published, and
    /// failed.
    pub fn can_transition_to(self, next: RepoStatus) -> bool {
        use RepoStatus::*;
        matches!(
            (self, next),
            (Registered, Scheduled)
                | (Published, Scheduled)
                | (Failed, Scheduled)
                | (Scheduled, Harvesting)
                | (Harvesting, Processing)
                | (Processing, Published)
                | (Scheduled, Failed)
                | (Harvesting, Failed)
                | (Processing, Failed)
        )
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RepoStatus::Registered => "registered",
            RepoStatus::Scheduled => "scheduled",
            RepoStatus::Harvesting => "harvesting",
            RepoStatus::Processing => "processing",
            RepoStatus::Published => "published",
            RepoStatus::Failed => "failed",
        }
    }
}

impl fmt::Display for RepoStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Handle to one immutable snapshot: the owning repository plus a
/// sequence number that strictly increases per repository.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SnapshotId {
    repo_id: String,
    sequence: u64,
}

impl SnapshotId {
    pub fn new(repo_id: impl Into<String>, sequence: u64) -> Self {
        SnapshotId {
            repo_id: repo_id.into(),
            sequence,
        }
    }

    pub fn repo_id(&self) -> &str {
        &self.repo_id
    }

    pub fn sequence(&self) -> u64 {
        self.sequence
    }
}

impl fmt::Display for SnapshotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.repo_id, self.sequence)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid snapshot id '{0}': expected '<repo>:<sequence>'")]
pub struct SnapshotIdParseError(pub String);

impl FromStr for SnapshotId {
    type Err = SnapshotIdParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (repo, seq) = s
            .rsplit_once(':')
            .ok_or_else(|| SnapshotIdParseError(s.to_string()))?;
        if repo.is_empty() {
            return Err(SnapshotIdParseError(s.to_string()));
        }
        let sequence: u64 = seq
            .parse()
            .map_err(|_| SnapshotIdParseError(s.to_string()))?;
        Ok(SnapshotId::new(repo, sequence))
    }
}

impl Serialize for SnapshotId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SnapshotId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// A registered data source with its processing configuration and
/// lifecycle state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepositoryRecord {
    pub repo_id: String,
    pub name: String,
    pub owner: String,
    pub source: RepoSource,
    pub mapping: FieldMapping,
    pub pipeline: PipelineConfig,
    pub status: RepoStatus,
    pub published_snapshot: Option<SnapshotId>,
    pub last_error: Option<String>,
    /// Anonymous (keyless) access to the suggest endpoint; off by default.
    #[serde(default)]
    pub allow_anonymous_suggest: bool,
    /// Keep harvested records on disk so the index can be rebuilt with a
    /// changed pipeline configuration without re-harvesting.
    #[serde(default = "default_retain_raw")]
    pub retain_raw: bool,
    pub created_at: DateTime<Utc>,
}

fn default_retain_raw() -> bool {
    true
}

impl RepositoryRecord {
    pub fn new(
        repo_id: impl Into<String>,
        name: impl Into<String>,
        owner: impl Into<String>,
        source: RepoSource,
        mapping: FieldMapping,
        pipeline: PipelineConfig,
    ) -> Self {
        RepositoryRecord {
            repo_id: repo_id.into(),
            name: name.into(),
            owner: owner.into(),
            source,
            mapping,
            pipeline,
            status: RepoStatus::Registered,
            published_snapshot: None,
            last_error: None,
            allow_anonymous_suggest: false,
            retain_raw: true,
            created_at: Utc::now(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_config_validation() {
        let mut config = EndpointConfig::new(Url::parse("https://example.org/oai").unwrap());
        assert!(config.validate().is_ok());

        config.base_url = Url::parse("ftp://example.org/oai").unwrap();
        assert_eq!(
            config.validate().unwrap_err(),
            EndpointConfigError::UnsupportedScheme("ftp".into())
        );

        config.base_url = Url::parse("http://example.org/oai").unwrap();
        config.metadata_prefix = "marc21".into();
        assert!(matches!(
            config.validate().unwrap_err(),
            EndpointConfigError::UnsupportedMetadataPrefix(_)
        ));

        config.metadata_prefix = "oai_dc".into();
        config.from = Some(chrono::Utc::now());
        config.until = Some(chrono::Utc::now() - chrono::Duration::days(1));
        assert_eq!(
            config.validate().unwrap_err(),
            EndpointConfigError::InvertedRange
        );
    }

    #[test]
    fn status_transitions_follow_lifecycle() {
        use RepoStatus::*;
        assert!(Registered.can_transition_to(Scheduled));
        assert!(Scheduled.can_transition_to(Harvesting));
        assert!(Harvesting.can_transition_to(Processing));
        assert!(Processing.can_transition_to(Published));
        assert!(Published.can_transition_to(Scheduled));
        assert!(Failed.can_transition_to(Scheduled));
        assert!(Harvesting.can_transition_to(Failed));
        assert!(!Registered.can_transition_to(Published));
        assert!(!Published.can_transition_to(Failed));
        assert!(!Failed.can_transition_to(Published));
    }

    #[test]
    fn snapshot_id_round_trips_through_string_form() {
        let id = SnapshotId::new("r-abc123", 42);
        assert_eq!(id.to_string(), "r-abc123:42");
        let parsed: SnapshotId = "r-abc123:42".parse().unwrap();
        assert_eq!(parsed, id);
        assert!("no-sequence".parse::<SnapshotId>().is_err());
        assert!(":7".parse::<SnapshotId>().is_err());
        assert!("x:notanumber".parse::<SnapshotId>().is_err());
    }

    #[test]
    fn repository_record_serde_round_trip() {
        let record = RepositoryRecord::new(
            "r-1",
            "demo",
            "alice",
            RepoSource::Files {
                paths: vec!["a.xml".into()],
            },
            FieldMapping::default(),
            PipelineConfig::default(),
        );
        let json = serde_json::to_string(&record).unwrap();
        let back: RepositoryRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, record);
    }
}
