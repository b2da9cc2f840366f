//! The versioned wire schema. Responses are JSON with the media type
//! `application/vnd.termsuggest+json; version=1`; errors carry a
//! machine-readable code plus a human message.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use termsuggest_core::engine::{CooccurrenceIndex, Recommendation, SimilarityMetric};
use termsuggest_core::metadata::{DcElement, FieldMapping};
use termsuggest_core::repo::{
    EndpointConfig, RepoSource, RepositoryRecord, SnapshotId,
};
use termsuggest_core::text::{PipelineConfig, StopwordList};

/// Media type stamped on every response.
pub const CONTENT_TYPE: &str = "application/vnd.termsuggest+json; version=1";

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct RegisterRequest {
    pub name: String,
    #[serde(default)]
    pub endpoint: Option<EndpointSpec>,
    #[serde(default)]
    pub files: Option<Vec<String>>,
    #[serde(default)]
    pub mapping: Option<MappingSpec>,
    #[serde(default)]
    pub pipeline: Option<PipelineSpec>,
    #[serde(default)]
    pub allow_anonymous_suggest: Option<bool>,
    #[serde(default)]
    pub retain_raw: Option<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EndpointSpec {
    pub url: String,
    #[serde(default)]
    pub metadata_prefix: Option<String>,
    #[serde(default)]
    pub set: Option<String>,
    #[serde(default)]
    pub from: Option<DateTime<Utc>>,
    #[serde(default)]
    pub until: Option<DateTime<Utc>>,
    #[serde(default)]
    pub max_retries: Option<u32>,
    #[serde(default)]
    pub backoff_ms: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MappingSpec {
    pub source_elements: Vec<String>,
    pub target_element: String,
    #[serde(default)]
    pub language_filter: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct PipelineSpec {
    #[serde(default)]
    pub lowercase: Option<bool>,
    #[serde(default)]
    pub min_token_length: Option<usize>,
    #[serde(default)]
    pub strip_punctuation: Option<bool>,
    /// Replaces the bundled stopword list when present.
    #[serde(default)]
    pub stopwords: Option<Vec<String>>,
}

impl EndpointSpec {
    pub fn into_config(self) -> Result<EndpointConfig, String> {
        let url = url::Url::parse(&self.url).map_err(|e| format!("invalid endpoint URL: {e}"))?;
        let mut config = EndpointConfig::new(url);
        if let Some(prefix) = self.metadata_prefix {
            config.metadata_prefix = prefix;
        }
        config.set_spec = self.set;
        config.from = self.from;
        config.until = self.until;
        if let Some(retries) = self.max_retries {
            config.max_retries = retries;
        }
        if let Some(ms) = self.backoff_ms {
            config.backoff_base = Duration::from_millis(ms);
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

impl MappingSpec {
    pub fn into_mapping(self) -> Result<FieldMapping, String> {
        let source_elements = self
            .source_elements
            .iter()
            .map(|name| DcElement::from_str(name).map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        let target_element =
            DcElement::from_str(&self.target_element).map_err(|e| e.to_string())?;
        FieldMapping::new(source_elements, target_element, self.language_filter)
            .map_err(|e| e.to_string())
    }
}

impl PipelineSpec {
    pub fn into_config(self) -> Result<PipelineConfig, String> {
        let mut config = PipelineConfig::default();
        if let Some(lowercase) = self.lowercase {
            config.lowercase = lowercase;
        }
        if let Some(min) = self.min_token_length {
            config.min_token_length = min;
        }
        if let Some(strip) = self.strip_punctuation {
            config.strip_punctuation = strip;
        }
        if let Some(words) = self.stopwords {
            config.stopwords = StopwordList::from_words(words);
        }
        config.validate()?;
        Ok(config)
    }
}

/// Public view of a repository registration.
#[derive(Debug, Serialize, Deserialize)]
pub struct RepositoryView {
    pub repo_id: String,
    pub name: String,
    pub owner: String,
    pub status: String,
    pub source: SourceView,
    pub published_snapshot: Option<SnapshotId>,
    pub last_error: Option<String>,
    pub allow_anonymous_suggest: bool,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SourceView {
    Endpoint { url: String },
    Files { paths: Vec<PathBuf> },
}

impl RepositoryView {
    pub fn from_record(record: &RepositoryRecord) -> Self {
        RepositoryView {
            repo_id: record.repo_id.clone(),
            name: record.name.clone(),
            owner: record.owner.clone(),
            status: record.status.to_string(),
            source: match &record.source {
                RepoSource::Endpoint(config) => SourceView::Endpoint {
                    url: config.base_url.to_string(),
                },
                RepoSource::Files { paths } => SourceView::Files {
                    paths: paths.clone(),
                },
            },
            published_snapshot: record.published_snapshot.clone(),
            last_error: record.last_error.clone(),
            allow_anonymous_suggest: record.allow_anonymous_suggest,
            created_at: record.created_at,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScheduleResponse {
    pub job_id: String,
    pub repo_id: String,
    /// Poll here for progress.
    pub status_url: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SuggestionItem {
    pub term: String,
    pub score: f64,
    pub df_term: u64,
    pub df_joint: u64,
}

impl From<&Recommendation> for SuggestionItem {
    fn from(r: &Recommendation) -> Self {
        SuggestionItem {
            term: r.term.clone(),
            score: r.score,
            df_term: r.df_term,
            df_joint: r.df_joint,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SuggestResponse {
    /// The normalized query as ranked (tokens joined by single spaces).
    pub query: String,
    pub repo_id: String,
    pub metric: String,
    pub snapshot: SnapshotId,
    pub corpus_size: u64,
    /// False when no query token occurs in the corpus.
    pub term_found: bool,
    pub suggestions: Vec<SuggestionItem>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExportRow {
    pub source: String,
    pub target: String,
    pub score: f64,
    pub df_source: u64,
    pub df_target: u64,
    pub df_joint: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExportResponse {
    pub repo_id: String,
    pub snapshot: SnapshotId,
    pub metric: String,
    pub corpus_size: u64,
    pub rows: Vec<ExportRow>,
}

/// Builds the full recommendation table of a snapshot: every source term
/// in order with its ranked targets.
pub fn export_rows(index: &CooccurrenceIndex, metric: &dyn SimilarityMetric) -> Vec<ExportRow> {
    let mut sources: Vec<(&str, u64)> = index.source_terms().collect();
    sources.sort_unstable_by_key(|(term, _)| *term);
    let mut rows = Vec::new();
    for (source, df_source) in sources {
        let ranked = index.recommend(source, usize::MAX, metric, 1);
        for item in &ranked.recommendations {
            rows.push(ExportRow {
                source: source.to_string(),
                target: item.term.clone(),
                score: item.score,
                df_source,
                df_target: item.df_term,
                df_joint: item.df_joint,
            });
        }
    }
    rows
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub version: String,
}
