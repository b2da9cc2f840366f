//! Error types for harvesting and file ingest.

use std::path::PathBuf;

use termsuggest_core::repo::EndpointConfigError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarvestError {
    #[error("invalid endpoint configuration: {0}")]
    InvalidConfig(#[from] EndpointConfigError),

    #[error("request to {url} failed: {source}")]
    Network {
        url: String,
        #[source]
        source: reqwest::Error,
    },

    #[error("{url} answered HTTP {status}")]
    HttpStatus { status: u16, url: String },

    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted {
        attempts: u32,
        #[source]
        last: Box<HarvestError>,
    },

    #[error("malformed OAI-PMH response: {detail}")]
    MalformedResponse { detail: String },

    /// The endpoint rejected our resumption token; the harvest must
    /// restart from the beginning.
    #[error("resumption token rejected: {message}")]
    BadResumptionToken { message: String },

    #[error("endpoint cannot deliver the requested metadata format: {message}")]
    CannotDisseminateFormat { message: String },

    /// Any other OAI error code, surfaced verbatim.
    #[error("OAI error {code}: {message}")]
    Oai { code: String, message: String },

    /// A second token rejection within one harvest.
    #[error("harvest restarted once and hit another rejected token")]
    RestartLoop,
}

/// One file-level ingest problem. Other files keep processing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestFailure {
    pub file: PathBuf,
    pub detail: String,
    /// Byte offset of the problem within the file, when known.
    pub byte_offset: Option<usize>,
}

impl std::fmt::Display for IngestFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.byte_offset {
            Some(offset) => write!(
                f,
                "{}: {} (byte offset {offset})",
                self.file.display(),
                self.detail
            ),
            None => write!(f, "{}: {}", self.file.display(), self.detail),
        }
    }
}
