//! OAI-PMH response envelope parsing.
//!
//! Element matching is lenient about namespaces (local names decide) so
//! that slightly off-spec repositories and hand-saved files still parse.
//! Metadata payloads are re-serialized as standalone fragments with their
//! in-scope namespace declarations, so a fragment parses on its own even
//! though the envelope declared the prefixes.

use chrono::{DateTime, Utc};
use roxmltree::{Document, Node};

use termsuggest_core::metadata::{escape_xml, parse_datestamp, RawRecord};

use crate::error::HarvestError;

/// One parsed `ListRecords` page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarvestPage {
    pub records: Vec<RawRecord>,
    /// Absent on the final page.
    pub resumption_token: Option<String>,
    pub complete_list_size: Option<u64>,
}

/// The `Identify` verb's answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepositoryDescription {
    pub name: String,
    pub protocol_version: String,
    pub earliest_datestamp: Option<DateTime<Utc>>,
}

/// An `<error>` element from the envelope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OaiErrorBody {
    pub code: String,
    pub message: String,
}

fn malformed(detail: impl Into<String>) -> HarvestError {
    HarvestError::MalformedResponse {
        detail: detail.into(),
    }
}

fn find_child<'a>(node: Node<'a, 'a>, name: &str) -> Option<Node<'a, 'a>> {
    node.children()
        .find(|c| c.is_element() && c.tag_name().name() == name)
}

fn child_text(node: Node<'_, '_>, name: &str) -> Option<String> {
    find_child(node, name).map(|c| text_of(c).trim().to_string())
}

fn text_of(node: Node<'_, '_>) -> String {
    node.descendants()
        .filter(|n| n.is_text())
        .filter_map(|n| n.text())
        .collect()
}

/// Parses the envelope and returns the OAI-PMH root element, or the first
/// `<error>` element's body.
fn parse_envelope<'a>(doc: &'a Document<'a>) -> Result<Node<'a, 'a>, HarvestError> {
    let root = doc.root_element();
    if root.tag_name().name() != "OAI-PMH" {
        return Err(malformed(format!(
            "expected OAI-PMH root element, found '{}'",
            root.tag_name().name()
        )));
    }
    Ok(root)
}

fn envelope_error(root: Node<'_, '_>) -> Option<OaiErrorBody> {
    root.children()
        .find(|c| c.is_element() && c.tag_name().name() == "error")
        .map(|error| OaiErrorBody {
            code: error.attribute("code").unwrap_or("unknown").to_string(),
            message: text_of(error).trim().to_string(),
        })
}

/// Parses an `Identify` response.
pub fn parse_identify(xml: &str) -> Result<RepositoryDescription, HarvestError> {
    let doc = Document::parse(xml).map_err(|e| malformed(e.to_string()))?;
    let root = parse_envelope(&doc)?;
    if let Some(error) = envelope_error(root) {
        return Err(HarvestError::Oai {
            code: error.code,
            message: error.message,
        });
    }
    let identify = find_child(root, "Identify")
        .ok_or_else(|| malformed("response has no Identify element"))?;
    Ok(RepositoryDescription {
        name: child_text(identify, "repositoryName")
            .ok_or_else(|| malformed("Identify lacks repositoryName"))?,
        protocol_version: child_text(identify, "protocolVersion")
            .ok_or_else(|| malformed("Identify lacks protocolVersion"))?,
        earliest_datestamp: child_text(identify, "earliestDatestamp")
            .and_then(|text| parse_datestamp(&text).ok()),
    })
}

/// Parses a `ListRecords` response into records and the next token. OAI
/// errors are dispatched onto dedicated variants; `noRecordsMatch` maps
/// to an empty final page because it signals an empty selection, not a
/// failure.
pub fn parse_list_records(xml: &str) -> Result<HarvestPage, HarvestError> {
    let doc = Document::parse(xml).map_err(|e| malformed(e.to_string()))?;
    let root = parse_envelope(&doc)?;
    if let Some(error) = envelope_error(root) {
        return match error.code.as_str() {
            "noRecordsMatch" => Ok(HarvestPage {
                records: Vec::new(),
                resumption_token: None,
                complete_list_size: Some(0),
            }),
            "badResumptionToken" => Err(HarvestError::BadResumptionToken {
                message: error.message,
            }),
            "cannotDisseminateFormat" => Err(HarvestError::CannotDisseminateFormat {
                message: error.message,
            }),
            _ => Err(HarvestError::Oai {
                code: error.code,
                message: error.message,
            }),
        };
    }
    let list = find_child(root, "ListRecords")
        .ok_or_else(|| malformed("response has no ListRecords element"))?;

    let mut records = Vec::new();
    for node in list.children().filter(|c| c.is_element()) {
        if node.tag_name().name() == "record" {
            records.push(parse_record(node)?);
        }
    }

    let token_node = find_child(list, "resumptionToken");
    let resumption_token = token_node.and_then(|node| {
        let token = text_of(node).trim().to_string();
        // An empty token element marks the final page.
        (!token.is_empty()).then_some(token)
    });
    let complete_list_size =
        token_node.and_then(|node| node.attribute("completeListSize")?.parse().ok());

    if records.is_empty() && resumption_token.is_some() {
        return Err(malformed("empty page carries a resumption token"));
    }
    Ok(HarvestPage {
        records,
        resumption_token,
        complete_list_size,
    })
}

/// Parses one `<record>` element (header plus optional metadata payload).
pub fn parse_record(node: Node<'_, '_>) -> Result<RawRecord, HarvestError> {
    let header = find_child(node, "header").ok_or_else(|| malformed("record lacks header"))?;
    let identifier = child_text(header, "identifier")
        .filter(|id| !id.is_empty())
        .ok_or_else(|| malformed("record header lacks identifier"))?;
    let datestamp_text = child_text(header, "datestamp")
        .ok_or_else(|| malformed(format!("record '{identifier}' lacks datestamp")))?;
    let datestamp = parse_datestamp(&datestamp_text).map_err(|e| malformed(e.to_string()))?;
    let deleted = header.attribute("status") == Some("deleted");
    let metadata_xml = find_child(node, "metadata")
        .and_then(|metadata| metadata.children().find(|c| c.is_element()))
        .map(serialize_subtree);
    if !deleted && metadata_xml.is_none() {
        return Err(malformed(format!(
            "record '{identifier}' is not deleted but has no metadata"
        )));
    }
    Ok(RawRecord {
        identifier,
        datestamp,
        deleted,
        metadata_xml,
    })
}

const XML_NAMESPACE: &str = "http://www.w3.org/XML/1998/namespace";

/// Serializes an element subtree into standalone XML: the subtree root
/// carries every in-scope namespace declaration (sorted by prefix for a
/// deterministic result), so the fragment parses outside its envelope.
/// Comments and processing instructions are dropped; text is re-escaped.
pub fn serialize_subtree(node: Node<'_, '_>) -> String {
    let mut out = String::new();
    write_node(node, &mut out, true);
    out
}

fn qualified_name(node: &Node<'_, '_>) -> String {
    let name = node.tag_name().name();
    match node.tag_name().namespace() {
        Some(ns) => match node.lookup_prefix(ns) {
            Some(prefix) if !prefix.is_empty() => format!("{prefix}:{name}"),
            _ => name.to_string(),
        },
        None => name.to_string(),
    }
}

fn write_node(node: Node<'_, '_>, out: &mut String, is_root: bool) {
    if node.is_text() {
        if let Some(text) = node.text() {
            out.push_str(&escape_xml(text));
        }
        return;
    }
    if !node.is_element() {
        return;
    }
    let name = qualified_name(&node);
    out.push('<');
    out.push_str(&name);
    if is_root {
        let mut declarations: Vec<(Option<&str>, &str)> = node
            .namespaces()
            .filter(|ns| ns.uri() != XML_NAMESPACE)
            .map(|ns| (ns.name(), ns.uri()))
            .collect();
        declarations.sort_unstable();
        for (prefix, uri) in declarations {
            match prefix {
                Some(prefix) => {
                    out.push_str(&format!(" xmlns:{prefix}=\"{}\"", escape_xml(uri)))
                }
                None => out.push_str(&format!(" xmlns=\"{}\"", escape_xml(uri))),
            }
        }
    }
    for attr in node.attributes() {
        let attr_name = match attr.namespace() {
            Some(XML_NAMESPACE) => format!("xml:{}", attr.name()),
            Some(ns) => match node.lookup_prefix(ns) {
                Some(prefix) if !prefix.is_empty() => format!("{prefix}:{}", attr.name()),
                _ => attr.name().to_string(),
            },
            None => attr.name().to_string(),
        };
        out.push_str(&format!(" {attr_name}=\"{}\"", escape_xml(attr.value())));
    }
    if node.children().next().is_none() {
        out.push_str("/>");
        return;
    }
    out.push('>');
    for child in node.children() {
        write_node(child, out, false);
    }
    out.push_str(&format!("</{name}>"));
}

/// Converts a parser position (1-based row and column) into a byte offset.
pub fn byte_offset_of(text: &str, pos: roxmltree::TextPos) -> usize {
    let mut remaining_rows = pos.row.saturating_sub(1);
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if remaining_rows == 0 {
            break;
        }
        offset += line.len();
        remaining_rows -= 1;
    }
    offset + pos.col.saturating_sub(1) as usize
}

/// Renders records as a minimal `ListRecords` envelope, the same shape
/// [`parse_list_records`] and file ingest read back.
pub fn records_to_envelope(base_url: &str, records: &[RawRecord]) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<OAI-PMH xmlns=\"http://www.openarchives.org/OAI/2.0/\">\n");
    out.push_str(&format!(
        "  <responseDate>{}</responseDate>\n",
        termsuggest_core::metadata::format_datestamp(&Utc::now())
    ));
    out.push_str(&format!(
        "  <request verb=\"ListRecords\" metadataPrefix=\"oai_dc\">{}</request>\n",
        escape_xml(base_url)
    ));
    out.push_str("  <ListRecords>\n");
    for record in records {
        out.push_str(&record_xml(record));
    }
    out.push_str("  </ListRecords>\n</OAI-PMH>\n");
    out
}

/// Renders one `<record>` element in envelope form.
pub fn record_xml(record: &RawRecord) -> String {
    let mut out = String::new();
    out.push_str("    <record>\n");
    if record.deleted {
        out.push_str("      <header status=\"deleted\">\n");
    } else {
        out.push_str("      <header>\n");
    }
    out.push_str(&format!(
        "        <identifier>{}</identifier>\n",
        escape_xml(&record.identifier)
    ));
    out.push_str(&format!(
        "        <datestamp>{}</datestamp>\n",
        termsuggest_core::metadata::format_datestamp(&record.datestamp)
    ));
    out.push_str("      </header>\n");
    if let Some(metadata) = &record.metadata_xml {
        out.push_str("      <metadata>");
        out.push_str(metadata);
        out.push_str("</metadata>\n");
    }
    out.push_str("    </record>\n");
    out
}
