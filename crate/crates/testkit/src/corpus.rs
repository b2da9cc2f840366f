//! Seeded random corpora for oracle-equivalence and scale tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use termsuggest_core::metadata::FieldExtraction;

use crate::oracle::OracleDoc;

/// A random corpus drawn from bounded term pools: up to `max_docs`
/// documents, each holding up to `max_source_terms` source terms from a
/// 20-term pool and up to `max_target_terms` target terms from a 10-term
/// pool. Some documents come out with an empty side on purpose.
pub fn random_corpus(
    seed: u64,
    max_docs: usize,
    max_source_terms: usize,
    max_target_terms: usize,
) -> Vec<OracleDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_docs = rng.random_range(1..=max_docs);
    (0..n_docs)
        .map(|_| {
            let n_sources = rng.random_range(0..=max_source_terms);
            let n_targets = rng.random_range(0..=max_target_terms);
            let sources = (0..n_sources)
                .map(|_| format!("s{:02}", rng.random_range(0..20)))
                .collect::<Vec<_>>();
            let targets = (0..n_targets)
                .map(|_| format!("t{}", rng.random_range(0..10)))
                .collect::<Vec<_>>();
            OracleDoc::new(sources, targets)
        })
        .collect()
}

/// Every distinct source term of a corpus, for exhaustive query sweeps.
pub fn source_vocabulary(docs: &[OracleDoc]) -> Vec<String> {
    let mut terms: Vec<String> = docs
        .iter()
        .flat_map(|d| d.sources.iter().cloned())
        .collect();
    terms.sort_unstable();
    terms.dedup();
    terms
}

/// Converts oracle documents into engine extractions. Terms are already
/// normalized single tokens, so the default pipeline maps them onto the
/// same sets the oracle sees.
pub fn to_extractions(docs: &[OracleDoc]) -> Vec<FieldExtraction> {
    docs.iter()
        .enumerate()
        .map(|(i, doc)| FieldExtraction {
            doc_id: format!("doc-{i}"),
            source_texts: doc.sources.iter().cloned().collect(),
            target_values: doc.targets.iter().cloned().collect(),
        })
        .collect()
}

/// A seeded permutation of a slice, for order-independence checks.
pub fn shuffled<T: Clone>(items: &[T], seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<T> = items.to_vec();
    for i in (1..out.len()).rev() {
        out.swap(i, rng.random_range(0..=i));
    }
    out
}

/// Synthetic corpus at a chosen scale: `n_docs` documents with
/// `source_tokens_per_doc` tokens drawn from a `source_vocab`-sized
/// vocabulary (written as one free-text line per document) and
/// `targets_per_doc` controlled terms from a `target_vocab`-sized pool.
pub fn synthetic_extractions(
    seed: u64,
    n_docs: usize,
    source_tokens_per_doc: usize,
    targets_per_doc: usize,
    source_vocab: usize,
    target_vocab: usize,
) -> Vec<FieldExtraction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_docs)
        .map(|i| {
            let text = (0..source_tokens_per_doc)
                .map(|_| format!("term{:05}", rng.random_range(0..source_vocab)))
                .collect::<Vec<_>>()
                .join(" ");
            let targets = (0..targets_per_doc)
                .map(|_| format!("subject {:04}", rng.random_range(0..target_vocab)))
                .collect();
            FieldExtraction {
                doc_id: format!("doc-{i}"),
                source_texts: vec![text],
                target_values: targets,
            }
        })
        .collect()
}
