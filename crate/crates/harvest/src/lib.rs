//! OAI-PMH harvesting: a blocking protocol client with resumption-token
//! paging, retry, and restart recovery, plus local-file ingest of the
//! same `oai_dc` XML vocabulary. The [`mock`] module hosts an in-process
//! endpoint for tests.

pub mod client;
pub mod error;
pub mod files;
pub mod mock;
pub mod stream;
pub mod xml;

pub use client::{backoff_delay, OaiClient, RETRY_AFTER_CAP};
pub use error::{HarvestError, IngestFailure};
pub use files::{ingest_files, ingest_files_collect, IngestEvent, IngestOutcome};
pub use stream::HarvestStream;
pub use xml::{records_to_envelope, HarvestPage, RepositoryDescription};

pub use termsuggest_core::repo::EndpointConfig;
