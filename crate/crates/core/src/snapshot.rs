//! Versioned binary layout for index snapshots.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset 0   magic          8 bytes, b"TSNAPIX1"
//!        8   version        u32 (currently 1)
//!       12   checksum       32 bytes, SHA-256 over every byte after
//!                           this field
//!       44   repo_id        u32 length + UTF-8 bytes
//!        ..  n_docs         u64
//!        ..  source_count   u64
//!        ..  target_count   u64
//!        ..  pair_count     u64
//!        ..  source_offset  u64 \
//!        ..  target_offset  u64  > relative to the tables region
//!        ..  pair_offset    u64 /
//!        ..  tables region
//! ```
//!
//! Term tables are sorted by term bytes; each entry is `u32` length +
//! UTF-8 term + `u64` document frequency. The pair table is sorted by
//! (source, target) position and each entry is `u32` source index +
//! `u32` target index + `u64` joint document frequency, indices referring
//! to the sorted term tables. The encoding is canonical: one count table
//! has exactly one byte representation, so equal indices produce equal
//! files.

use std::io::{self, Read, Write};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::CooccurrenceIndex;

pub const SNAPSHOT_MAGIC: [u8; 8] = *b"TSNAPIX1";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot I/O failed: {0}")]
    Io(#[from] io::Error),
    #[error("not a snapshot file (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u32),
    #[error("snapshot corrupt: checksum mismatch")]
    ChecksumMismatch,
    #[error("snapshot corrupt: {0}")]
    Malformed(String),
}

/// Serializes an index into the snapshot layout.
pub fn write_snapshot<W: Write>(
    writer: &mut W,
    repo_id: &str,
    index: &CooccurrenceIndex,
) -> io::Result<()> {
    let body = encode_body(repo_id, index);
    let checksum = Sha256::digest(&body);
    writer.write_all(&SNAPSHOT_MAGIC)?;
    writer.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    writer.write_all(&checksum)?;
    writer.write_all(&body)?;
    Ok(())
}

/// Serializes an index into an owned buffer.
pub fn snapshot_to_bytes(repo_id: &str, index: &CooccurrenceIndex) -> Vec<u8> {
    let mut buf = Vec::new();
    write_snapshot(&mut buf, repo_id, index).expect("writing to Vec cannot fail");
    buf
}

/// Deserializes and validates a snapshot, returning the embedded
/// repository id and the rebuilt index. Truncated or altered files are
/// rejected via the checksum before any table is interpreted.
pub fn read_snapshot<R: Read>(reader: &mut R) -> Result<(String, CooccurrenceIndex), SnapshotError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    snapshot_from_bytes(&bytes)
}

pub fn snapshot_from_bytes(bytes: &[u8]) -> Result<(String, CooccurrenceIndex), SnapshotError> {
    if bytes.len() < 44 {
        return Err(SnapshotError::Malformed("file shorter than header".into()));
    }
    if bytes[0..8] != SNAPSHOT_MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != SNAPSHOT_VERSION {
        return Err(SnapshotError::UnsupportedVersion(version));
    }
    let stored_checksum = &bytes[12..44];
    let body = &bytes[44..];
    let computed = Sha256::digest(body);
    if computed.as_slice() != stored_checksum {
        return Err(SnapshotError::ChecksumMismatch);
    }
    decode_body(body)
}

/// Digest of the count tables alone (corpus size plus the canonical
/// tables region). Two indices with equal tables have equal digests no
/// matter how they were built.
pub fn table_digest(index: &CooccurrenceIndex) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(index.n_docs().to_le_bytes());
    hasher.update(encode_tables(index).0);
    hasher.finalize().into()
}

struct TableLayout {
    source_count: u64,
    target_count: u64,
    pair_count: u64,
    source_offset: u64,
    target_offset: u64,
    pair_offset: u64,
}

fn encode_tables(index: &CooccurrenceIndex) -> (Vec<u8>, TableLayout) {
    let mut source: Vec<(&str, u64)> = index.source_terms().collect();
    source.sort_unstable_by_key(|(term, _)| *term);
    let mut target: Vec<(&str, u64)> = index.target_terms().collect();
    target.sort_unstable_by_key(|(term, _)| *term);

    let position = |table: &[(&str, u64)], term: &str| -> u32 {
        table
            .binary_search_by_key(&term, |(t, _)| t)
            .expect("term present in its own table") as u32
    };
    let mut pairs: Vec<(u32, u32, u64)> = index
        .pairs()
        .map(|(s, t, df)| (position(&source, s), position(&target, t), df))
        .collect();
    pairs.sort_unstable();

    let mut buf = Vec::new();
    let source_offset = buf.len() as u64;
    for (term, df) in &source {
        write_term_entry(&mut buf, term, *df);
    }
    let target_offset = buf.len() as u64;
    for (term, df) in &target {
        write_term_entry(&mut buf, term, *df);
    }
    let pair_offset = buf.len() as u64;
    for (s, t, df) in &pairs {
        buf.extend_from_slice(&s.to_le_bytes());
        buf.extend_from_slice(&t.to_le_bytes());
        buf.extend_from_slice(&df.to_le_bytes());
    }
    let layout = TableLayout {
        source_count: source.len() as u64,
        target_count: target.len() as u64,
        pair_count: pairs.len() as u64,
        source_offset,
        target_offset,
        pair_offset,
    };
    (buf, layout)
}

fn write_term_entry(buf: &mut Vec<u8>, term: &str, df: u64) {
    buf.extend_from_slice(&(term.len() as u32).to_le_bytes());
    buf.extend_from_slice(term.as_bytes());
    buf.extend_from_slice(&df.to_le_bytes());
}

fn encode_body(repo_id: &str, index: &CooccurrenceIndex) -> Vec<u8> {
    let (tables, layout) = encode_tables(index);
    let mut body = Vec::with_capacity(tables.len() + repo_id.len() + 64);
    body.extend_from_slice(&(repo_id.len() as u32).to_le_bytes());
    body.extend_from_slice(repo_id.as_bytes());
    body.extend_from_slice(&index.n_docs().to_le_bytes());
    body.extend_from_slice(&layout.source_count.to_le_bytes());
    body.extend_from_slice(&layout.target_count.to_le_bytes());
    body.extend_from_slice(&layout.pair_count.to_le_bytes());
    body.extend_from_slice(&layout.source_offset.to_le_bytes());
    body.extend_from_slice(&layout.target_offset.to_le_bytes());
    body.extend_from_slice(&layout.pair_offset.to_le_bytes());
    body.extend_from_slice(&tables);
    body
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Cursor { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| SnapshotError::Malformed("unexpected end of data".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, SnapshotError> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| SnapshotError::Malformed("term is not valid UTF-8".into()))
    }
}

fn decode_body(body: &[u8]) -> Result<(String, CooccurrenceIndex), SnapshotError> {
    let mut cursor = Cursor::new(body);
    let repo_id = cursor.string()?;
    let n_docs = cursor.u64()?;
    let source_count = cursor.u64()?;
    let target_count = cursor.u64()?;
    let pair_count = cursor.u64()?;
    let _source_offset = cursor.u64()?;
    let _target_offset = cursor.u64()?;
    let _pair_offset = cursor.u64()?;

    let read_table = |cursor: &mut Cursor<'_>, count: u64| {
        let mut table = Vec::with_capacity(count as usize);
        let mut previous: Option<String> = None;
        for _ in 0..count {
            let term = cursor.string()?;
            let df = cursor.u64()?;
            if df == 0 || df > n_docs {
                return Err(SnapshotError::Malformed(format!(
                    "term '{term}' has document frequency {df} outside 1..={n_docs}"
                )));
            }
            if let Some(prev) = &previous {
                if prev.as_str() >= term.as_str() {
                    return Err(SnapshotError::Malformed(
                        "term table is not strictly sorted".into(),
                    ));
                }
            }
            previous = Some(term.clone());
            table.push((term, df));
        }
        Ok(table)
    };

    let source = read_table(&mut cursor, source_count)?;
    let target = read_table(&mut cursor, target_count)?;

    let mut pairs = Vec::with_capacity(pair_count as usize);
    for _ in 0..pair_count {
        let s = cursor.u32()?;
        let t = cursor.u32()?;
        let df = cursor.u64()?;
        let df_x = source
            .get(s as usize)
            .map(|(_, df)| *df)
            .ok_or_else(|| SnapshotError::Malformed("pair source index out of range".into()))?;
        let df_y = target
            .get(t as usize)
            .map(|(_, df)| *df)
            .ok_or_else(|| SnapshotError::Malformed("pair target index out of range".into()))?;
        if df == 0 || df > df_x.min(df_y) {
            return Err(SnapshotError::Malformed(format!(
                "pair frequency {df} outside 1..=min({df_x}, {df_y})"
            )));
        }
        pairs.push((s, t, df));
    }
    if cursor.pos != body.len() {
        return Err(SnapshotError::Malformed("trailing bytes after tables".into()));
    }
    Ok((
        repo_id,
        CooccurrenceIndex::from_parts(n_docs, source, target, pairs),
    ))
}
