//! Local-file ingest: the offline counterpart of harvesting.
//!
//! Each file may hold a full OAI-PMH response envelope, a list of
//! `<record>` elements under any root, a single `<record>`, or bare
//! `oai_dc:dc` fragments. Unreadable or unparsable files are reported and
//! skipped; the remaining files still yield their records.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{TimeZone, Utc};
use roxmltree::Document;

use termsuggest_core::metadata::RawRecord;

use crate::error::IngestFailure;
use crate::xml::{byte_offset_of, parse_record, serialize_subtree};

/// One unit of ingest output: a record, or a file-level problem.
#[derive(Debug)]
pub enum IngestEvent {
    Record(RawRecord),
    Failure(IngestFailure),
}

/// Collected ingest result.
#[derive(Debug, Default)]
pub struct IngestOutcome {
    pub records: Vec<RawRecord>,
    pub failures: Vec<IngestFailure>,
}

/// Streams records (and failures) from the given files in order.
pub fn ingest_files(paths: &[PathBuf]) -> impl Iterator<Item = IngestEvent> {
    let files: Vec<PathBuf> = paths.to_vec();
    files.into_iter().flat_map(|path| parse_file(&path))
}

/// Convenience wrapper collecting the stream into records plus failures.
pub fn ingest_files_collect(paths: &[PathBuf]) -> IngestOutcome {
    let mut outcome = IngestOutcome::default();
    for event in ingest_files(paths) {
        match event {
            IngestEvent::Record(record) => outcome.records.push(record),
            IngestEvent::Failure(failure) => outcome.failures.push(failure),
        }
    }
    outcome
}

fn failure(path: &Path, detail: impl Into<String>, byte_offset: Option<usize>) -> Vec<IngestEvent> {
    vec![IngestEvent::Failure(IngestFailure {
        file: path.to_path_buf(),
        detail: detail.into(),
        byte_offset,
    })]
}

fn parse_file(path: &Path) -> Vec<IngestEvent> {
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => return failure(path, format!("unreadable file: {e}"), None),
    };
    let doc = match Document::parse(&text) {
        Ok(doc) => doc,
        Err(e) => {
            let offset = byte_offset_of(&text, e.pos());
            return failure(path, format!("XML parse failure: {e}"), Some(offset));
        }
    };

    let record_nodes: Vec<_> = doc
        .descendants()
        .filter(|n| {
            n.is_element()
                && n.tag_name().name() == "record"
                && n.children()
                    .any(|c| c.is_element() && c.tag_name().name() == "header")
        })
        .collect();

    if !record_nodes.is_empty() {
        return record_nodes
            .into_iter()
            .map(|node| match parse_record(node) {
                Ok(record) => IngestEvent::Record(record),
                Err(e) => IngestEvent::Failure(IngestFailure {
                    file: path.to_path_buf(),
                    detail: e.to_string(),
                    byte_offset: Some(node.range().start),
                }),
            })
            .collect();
    }

    // No <record> elements: accept bare oai_dc fragments with synthesized
    // identifiers derived from the file name.
    let dc_nodes: Vec<_> = doc
        .descendants()
        .filter(|n| n.is_element() && n.tag_name().name() == "dc")
        .collect();
    if !dc_nodes.is_empty() {
        let stem = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "file".to_string());
        return dc_nodes
            .into_iter()
            .enumerate()
            .map(|(i, node)| {
                IngestEvent::Record(RawRecord {
                    identifier: format!("file:{stem}#{i}"),
                    datestamp: Utc.timestamp_opt(0, 0).unwrap(),
                    deleted: false,
                    metadata_xml: Some(serialize_subtree(node)),
                })
            })
            .collect();
    }

    // An OAI-PMH envelope with no records (for example a noRecordsMatch
    // error response) is an empty but valid input.
    if doc.root_element().tag_name().name() == "OAI-PMH" {
        return Vec::new();
    }
    failure(path, "no oai_dc records found in file", None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &tempfile::TempDir, name: &str, content: &str) -> PathBuf {
        let path = dir.path().join(name);
        let mut file = fs::File::create(&path).unwrap();
        file.write_all(content.as_bytes()).unwrap();
        path
    }

    const DC: &str = "xmlns:oai_dc=\"http://www.openarchives.org/OAI/2.0/oai_dc/\" \
                      xmlns:dc=\"http://purl.org/dc/elements/1.1/\"";

    fn record(id: &str, title: &str) -> String {
        format!(
            "<record><header><identifier>{id}</identifier>\
             <datestamp>2012-01-01</datestamp></header>\
             <metadata><oai_dc:dc {DC}><dc:title>{title}</dc:title></oai_dc:dc></metadata>\
             </record>"
        )
    }

    #[test]
    fn record_list_file_yields_each_record() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!(
            "<records>{}{}{}{}</records>",
            record("a", "One"),
            record("b", "Two"),
            record("c", "Three"),
            record("d", "Four"),
        );
        let path = write_file(&dir, "list.xml", &body);
        let outcome = ingest_files_collect(&[path]);
        assert_eq!(outcome.records.len(), 4);
        assert!(outcome.failures.is_empty());
        assert_eq!(outcome.records[0].identifier, "a");
    }

    #[test]
    fn envelope_and_single_record_files_parse() {
        let dir = tempfile::tempdir().unwrap();
        let envelope = format!(
            "<OAI-PMH xmlns=\"http://www.openarchives.org/OAI/2.0/\">\
             <ListRecords>{}</ListRecords></OAI-PMH>",
            record("a", "One")
        );
        let single = record("b", "Two");
        let paths = vec![
            write_file(&dir, "envelope.xml", &envelope),
            write_file(&dir, "single.xml", &single),
        ];
        let outcome = ingest_files_collect(&paths);
        assert_eq!(outcome.records.len(), 2);
        assert!(outcome.failures.is_empty());
    }

    #[test]
    fn bare_dc_fragment_gets_synthesized_identifier() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("<oai_dc:dc {DC}><dc:title>Standalone</dc:title></oai_dc:dc>");
        let path = write_file(&dir, "bare.xml", &body);
        let outcome = ingest_files_collect(&[path]);
        assert_eq!(outcome.records.len(), 1);
        assert_eq!(outcome.records[0].identifier, "file:bare.xml#0");
    }

    #[test]
    fn corrupt_file_is_reported_and_rest_continue() {
        let dir = tempfile::tempdir().unwrap();
        let good = write_file(&dir, "good.xml", &record("a", "One"));
        let bad = write_file(&dir, "bad.xml", "<records><record><header>");
        let outcome = ingest_files_collect(&[bad.clone(), good]);
        assert_eq!(outcome.records.len(), 1);
        assert_eq!(outcome.failures.len(), 1);
        let failure = &outcome.failures[0];
        assert_eq!(failure.file, bad);
        assert!(failure.byte_offset.is_some());
        assert!(failure.detail.contains("XML parse failure"));
    }

    #[test]
    fn unreadable_file_is_reported() {
        let outcome = ingest_files_collect(&[PathBuf::from("/nonexistent/nope.xml")]);
        assert!(outcome.records.is_empty());
        assert_eq!(outcome.failures.len(), 1);
        assert!(outcome.failures[0].detail.contains("unreadable file"));
    }

    #[test]
    fn empty_path_list_yields_nothing() {
        let outcome = ingest_files_collect(&[]);
        assert!(outcome.records.is_empty());
        assert!(outcome.failures.is_empty());
    }

    #[test]
    fn non_record_xml_is_a_failure() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "other.xml", "<html><body>hi</body></html>");
        let outcome = ingest_files_collect(&[path]);
        assert_eq!(outcome.failures.len(), 1);
        assert!(outcome.failures[0].detail.contains("no oai_dc records"));
    }
}
