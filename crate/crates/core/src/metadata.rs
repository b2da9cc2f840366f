//! Dublin Core metadata model: parsing `oai_dc` XML payloads into
//! structured records and extracting (source free-text, target
//! controlled-term) value pairs according to a configurable field mapping.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The Dublin Core element set namespace used by `oai_dc` payloads.
pub const DC_NAMESPACE: &str = "http://purl.org/dc/elements/1.1/";
/// Namespace of the `oai_dc:dc` container element.
pub const OAI_DC_NAMESPACE: &str = "http://www.openarchives.org/OAI/2.0/oai_dc/";

/// One of the 15 unqualified Dublin Core elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DcElement {
    Title,
    Creator,
    Subject,
    Description,
    Publisher,
    Contributor,
    Date,
    Type,
    Format,
    Identifier,
    Source,
    Language,
    Relation,
    Coverage,
    Rights,
}

impl DcElement {
    pub const ALL: [DcElement; 15] = [
        DcElement::Title,
        DcElement::Creator,
        DcElement::Subject,
        DcElement::Description,
        DcElement::Publisher,
        DcElement::Contributor,
        DcElement::Date,
        DcElement::Type,
        DcElement::Format,
        DcElement::Identifier,
        DcElement::Source,
        DcElement::Language,
        DcElement::Relation,
        DcElement::Coverage,
        DcElement::Rights,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DcElement::Title => "title",
            DcElement::Creator => "creator",
            DcElement::Subject => "subject",
            DcElement::Description => "description",
            DcElement::Publisher => "publisher",
            DcElement::Contributor => "contributor",
            DcElement::Date => "date",
            DcElement::Type => "type",
            DcElement::Format => "format",
            DcElement::Identifier => "identifier",
            DcElement::Source => "source",
            DcElement::Language => "language",
            DcElement::Relation => "relation",
            DcElement::Coverage => "coverage",
            DcElement::Rights => "rights",
        }
    }
}

impl fmt::Display for DcElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
#[error("unknown Dublin Core element '{0}'")]
pub struct UnknownElement(pub String);

impl FromStr for DcElement {
    type Err = UnknownElement;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DcElement::ALL
            .iter()
            .copied()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| UnknownElement(s.to_string()))
    }
}

/// A single element value with its optional `xml:lang` tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DcValue {
    pub value: String,
    pub language: Option<String>,
}

impl DcValue {
    pub fn new(value: impl Into<String>) -> Self {
        DcValue {
            value: value.into(),
            language: None,
        }
    }

    pub fn with_language(value: impl Into<String>, lang: impl Into<String>) -> Self {
        DcValue {
            value: value.into(),
            language: Some(lang.into()),
        }
    }
}

/// A harvested record before metadata parsing: the OAI header fields plus
/// the raw `oai_dc` XML fragment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub identifier: String,
    pub datestamp: DateTime<Utc>,
    pub deleted: bool,
    pub metadata_xml: Option<String>,
}

/// One parsed metadata record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DublinCoreRecord {
    pub identifier: String,
    pub datestamp: DateTime<Utc>,
    pub deleted: bool,
    elements: BTreeMap<DcElement, Vec<DcValue>>,
    /// Number of non-DC child elements skipped during parsing.
    pub unknown_elements: u32,
}

impl DublinCoreRecord {
    pub fn new(identifier: impl Into<String>, datestamp: DateTime<Utc>) -> Self {
        DublinCoreRecord {
            identifier: identifier.into(),
            datestamp,
            deleted: false,
            elements: BTreeMap::new(),
            unknown_elements: 0,
        }
    }

    pub fn deleted(identifier: impl Into<String>, datestamp: DateTime<Utc>) -> Self {
        DublinCoreRecord {
            deleted: true,
            ..Self::new(identifier, datestamp)
        }
    }

    /// Appends a value, trimming surrounding whitespace. Values that are
    /// empty after trimming are dropped.
    pub fn push_value(&mut self, element: DcElement, value: &str, language: Option<&str>) {
        let trimmed = value.trim();
        if trimmed.is_empty() {
            return;
        }
        self.elements.entry(element).or_default().push(DcValue {
            value: trimmed.to_string(),
            language: language.map(str::to_string),
        });
    }

    /// Values of one element in document order; empty slice when absent.
    pub fn values(&self, element: DcElement) -> &[DcValue] {
        self.elements.get(&element).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn elements(&self) -> impl Iterator<Item = (DcElement, &[DcValue])> {
        self.elements.iter().map(|(e, v)| (*e, v.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Which fields feed the source (free text) and target (controlled term)
/// sides of the co-occurrence index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldMapping {
    pub source_elements: Vec<DcElement>,
    pub target_element: DcElement,
    /// When set, values carrying a different explicit language tag are
    /// dropped; untagged values always pass.
    pub language_filter: Option<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MappingError {
    #[error("source element list must not be empty")]
    EmptySources,
    #[error("target element '{0}' must not appear among source elements")]
    TargetInSources(DcElement),
}

impl FieldMapping {
    pub fn new(
        source_elements: Vec<DcElement>,
        target_element: DcElement,
        language_filter: Option<String>,
    ) -> Result<Self, MappingError> {
        let mapping = FieldMapping {
            source_elements,
            target_element,
            language_filter,
        };
        mapping.validate()?;
        Ok(mapping)
    }

    pub fn validate(&self) -> Result<(), MappingError> {
        if self.source_elements.is_empty() {
            return Err(MappingError::EmptySources);
        }
        if self.source_elements.contains(&self.target_element) {
            return Err(MappingError::TargetInSources(self.target_element));
        }
        Ok(())
    }
}

impl Default for FieldMapping {
    /// Title and description matched against subject descriptors.
    fn default() -> Self {
        FieldMapping {
            source_elements: vec![DcElement::Title, DcElement::Description],
            target_element: DcElement::Subject,
            language_filter: None,
        }
    }
}

/// The per-document value pairs produced by [`select_fields`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FieldExtraction {
    pub doc_id: String,
    /// Free-text values, one entry per element value (not joined).
    pub source_texts: Vec<String>,
    /// Controlled terms kept verbatim as whole phrases.
    pub target_values: Vec<String>,
}

#[derive(Debug, Error)]
pub enum MetadataParseError {
    #[error("record '{identifier}' has no metadata payload")]
    MissingMetadata { identifier: String },
    #[error("malformed metadata XML in record '{identifier}': {source}")]
    MalformedXml {
        identifier: String,
        #[source]
        source: roxmltree::Error,
    },
    #[error("record '{identifier}' has no oai_dc container element")]
    MissingContainer { identifier: String },
}

/// Parses a raw record's `oai_dc` payload into a [`DublinCoreRecord`].
///
/// All DC child elements are captured in document order together with
/// their `xml:lang` attributes; non-DC children only bump the
/// `unknown_elements` counter. Deleted records parse to an empty record
/// with `deleted` set.
pub fn parse_oai_dc(raw: &RawRecord) -> Result<DublinCoreRecord, MetadataParseError> {
    if raw.deleted {
        return Ok(DublinCoreRecord::deleted(&raw.identifier, raw.datestamp));
    }
    let xml = raw
        .metadata_xml
        .as_deref()
        .ok_or_else(|| MetadataParseError::MissingMetadata {
            identifier: raw.identifier.clone(),
        })?;
    let doc = roxmltree::Document::parse(xml).map_err(|source| MetadataParseError::MalformedXml {
        identifier: raw.identifier.clone(),
        source,
    })?;
    let container = doc
        .descendants()
        .find(|n| n.is_element() && n.tag_name().name() == "dc")
        .ok_or_else(|| MetadataParseError::MissingContainer {
            identifier: raw.identifier.clone(),
        })?;

    let mut record = DublinCoreRecord::new(&raw.identifier, raw.datestamp);
    for child in container.children().filter(|n| n.is_element()) {
        match DcElement::from_str(child.tag_name().name()) {
            Ok(element) => {
                let text = text_content(child);
                let lang = child
                    .attribute(("http://www.w3.org/XML/1998/namespace", "lang"))
                    .or_else(|| child.attribute("lang"));
                record.push_value(element, &text, lang);
            }
            Err(_) => record.unknown_elements += 1,
        }
    }
    Ok(record)
}

fn text_content(node: roxmltree::Node<'_, '_>) -> String {
    let mut out = String::new();
    for descendant in node.descendants() {
        if let Some(text) = descendant.text() {
            if descendant.is_text() {
                out.push_str(text);
            }
        }
    }
    out
}

/// Applies a [`FieldMapping`] to a record, yielding the source texts and
/// target values for the co-occurrence engine. Deleted records yield an
/// empty extraction.
pub fn select_fields(record: &DublinCoreRecord, mapping: &FieldMapping) -> FieldExtraction {
    if record.deleted {
        return FieldExtraction {
            doc_id: record.identifier.clone(),
            ..FieldExtraction::default()
        };
    }
    let passes = |value: &DcValue| match (&mapping.language_filter, &value.language) {
        (Some(filter), Some(tag)) => language_matches(filter, tag),
        _ => true,
    };
    let source_texts = mapping
        .source_elements
        .iter()
        .flat_map(|e| record.values(*e))
        .filter(|v| passes(v))
        .map(|v| v.value.clone())
        .collect();
    let target_values = record
        .values(mapping.target_element)
        .iter()
        .filter(|v| passes(v))
        .map(|v| v.value.clone())
        .collect();
    FieldExtraction {
        doc_id: record.identifier.clone(),
        source_texts,
        target_values,
    }
}

/// Case-insensitive language matching on the filter's primary subtag:
/// filter `en` accepts `en` and `en-US`; filter `en-US` accepts only
/// `en-US`.
fn language_matches(filter: &str, tag: &str) -> bool {
    let filter = filter.to_ascii_lowercase();
    let tag = tag.to_ascii_lowercase();
    tag == filter || tag.starts_with(&format!("{filter}-"))
}

/// Serializes a record back into a standalone `oai_dc:dc` XML fragment.
/// Elements are written in the canonical DC order, values in stored order.
pub fn to_oai_dc_xml(record: &DublinCoreRecord) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "<oai_dc:dc xmlns:oai_dc=\"{OAI_DC_NAMESPACE}\" xmlns:dc=\"{DC_NAMESPACE}\">"
    ));
    for element in DcElement::ALL {
        for value in record.values(element) {
            match &value.language {
                Some(lang) => out.push_str(&format!(
                    "<dc:{name} xml:lang=\"{lang}\">{text}</dc:{name}>",
                    name = element.as_str(),
                    lang = escape_xml(lang),
                    text = escape_xml(&value.value),
                )),
                None => out.push_str(&format!(
                    "<dc:{name}>{text}</dc:{name}>",
                    name = element.as_str(),
                    text = escape_xml(&value.value),
                )),
            }
        }
    }
    out.push_str("</oai_dc:dc>");
    out
}

/// Escapes text for inclusion in XML content or attribute values.
pub fn escape_xml(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(ch),
        }
    }
    out
}

#[derive(Debug, Error)]
#[error("invalid OAI datestamp '{0}'")]
pub struct DatestampError(pub String);

/// Parses an OAI-PMH datestamp in either day (`YYYY-MM-DD`) or seconds
/// (`YYYY-MM-DDThh:mm:ssZ`) granularity into a UTC timestamp.
pub fn parse_datestamp(text: &str) -> Result<DateTime<Utc>, DatestampError> {
    let text = text.trim();
    if let Ok(date) = NaiveDate::parse_from_str(text, "%Y-%m-%d") {
        let midnight = date.and_hms_opt(0, 0, 0).expect("midnight is valid");
        return Ok(DateTime::from_naive_utc_and_offset(midnight, Utc));
    }
    if let Ok(dt) = NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M:%SZ") {
        return Ok(DateTime::from_naive_utc_and_offset(dt, Utc));
    }
    DateTime::parse_from_rfc3339(text)
        .map(|dt| dt.with_timezone(&Utc))
        .map_err(|_| DatestampError(text.to_string()))
}

/// Formats a UTC timestamp in the seconds granularity used on the wire.
pub fn format_datestamp(dt: &DateTime<Utc>) -> String {
    dt.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}
