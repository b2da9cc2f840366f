//! The four-document worked example used by unit, integration, and
//! acceptance tests:
//!
//! | doc | source tokens        | target terms             |
//! |-----|----------------------|--------------------------|
//! | d1  | youth, unemployment  | labor market, adolescent |
//! | d2  | youth, education     | adolescent               |
//! | d3  | unemployment         | labor market             |
//! | d4  | education            | school                   |

use chrono::{TimeZone, Utc};

use termsuggest_core::metadata::{
    to_oai_dc_xml, DcElement, DublinCoreRecord, RawRecord,
};

use crate::oracle::OracleDoc;

/// The fixture as oracle documents.
pub fn fixture_docs() -> Vec<OracleDoc> {
    vec![
        OracleDoc::new(
            ["youth", "unemployment"],
            ["labor market", "adolescent"],
        ),
        OracleDoc::new(["youth", "education"], ["adolescent"]),
        OracleDoc::new(["unemployment"], ["labor market"]),
        OracleDoc::new(["education"], ["school"]),
    ]
}

/// The fixture as parsed Dublin Core records whose titles tokenize to the
/// source sets above under the default pipeline configuration.
pub fn fixture_records() -> Vec<DublinCoreRecord> {
    let specs: [(&str, &str, &[&str]); 4] = [
        ("oai:fixture:d1", "Youth unemployment", &["Labor market", "Adolescent"]),
        ("oai:fixture:d2", "Youth education", &["Adolescent"]),
        ("oai:fixture:d3", "Unemployment", &["Labor market"]),
        ("oai:fixture:d4", "Education", &["School"]),
    ];
    specs
        .iter()
        .enumerate()
        .map(|(i, (id, title, subjects))| {
            let datestamp = Utc
                .with_ymd_and_hms(2012, 1, 1 + i as u32, 0, 0, 0)
                .unwrap();
            let mut record = DublinCoreRecord::new(*id, datestamp);
            record.push_value(DcElement::Title, title, None);
            for subject in *subjects {
                record.push_value(DcElement::Subject, subject, None);
            }
            record
        })
        .collect()
}

/// The fixture as raw harvest records carrying `oai_dc` payloads, ready
/// to serve from a mock endpoint or write into ingest files.
pub fn fixture_raw_records() -> Vec<RawRecord> {
    fixture_records()
        .into_iter()
        .map(|record| RawRecord {
            identifier: record.identifier.clone(),
            datestamp: record.datestamp,
            deleted: false,
            metadata_xml: Some(to_oai_dc_xml(&record)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use termsuggest_core::engine::build_index;
    use termsuggest_core::metadata::{parse_oai_dc, select_fields, FieldMapping};
    use termsuggest_core::text::PipelineConfig;

    #[test]
    fn raw_records_reproduce_the_oracle_sets() {
        let config = PipelineConfig::default();
        let mapping = FieldMapping::default();
        let extractions: Vec<_> = fixture_raw_records()
            .iter()
            .map(|raw| select_fields(&parse_oai_dc(raw).unwrap(), &mapping))
            .collect();
        let index = build_index(extractions, &config);
        assert_eq!(index.n_docs(), 4);
        assert_eq!(index.source_df("youth"), 2);
        assert_eq!(index.source_df("unemployment"), 2);
        assert_eq!(index.source_df("education"), 2);
        assert_eq!(index.target_df("labor market"), 2);
        assert_eq!(index.target_df("adolescent"), 2);
        assert_eq!(index.target_df("school"), 1);
        assert_eq!(index.pair_df("youth", "adolescent"), 2);
        assert_eq!(index.pair_df("youth", "labor market"), 1);
    }
}
