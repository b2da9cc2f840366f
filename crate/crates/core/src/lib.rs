//! Core of the term suggestion platform: the Dublin Core metadata model,
//! text pipeline, co-occurrence engine, and snapshot store.
//!
//! A repository's records flow through this crate in four steps:
//!
//! 1. [`metadata::parse_oai_dc`] turns raw `oai_dc` XML into
//!    [`metadata::DublinCoreRecord`]s.
//! 2. [`metadata::select_fields`] extracts free-text source fields and
//!    controlled target terms per the repository's
//!    [`metadata::FieldMapping`].
//! 3. [`engine::build_index`] tokenizes, normalizes, and counts
//!    document-level co-occurrence into an
//!    [`engine::CooccurrenceIndex`], which ranks related target terms
//!    for a query under a pluggable [`engine::SimilarityMetric`].
//! 4. [`store::Storage`] persists the index as an immutable snapshot and
//!    publishes it atomically for serving.

pub mod engine;
pub mod metadata;
pub mod repo;
pub mod snapshot;
pub mod store;
pub mod text;
