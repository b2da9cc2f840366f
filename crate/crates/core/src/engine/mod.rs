//! Document-frequency co-occurrence index between source terms (free-text
//! tokens) and target terms (controlled vocabulary phrases), plus the
//! ranking of target terms by relatedness to a query.
//!
//! Counting uses document-set semantics: each term counts once per
//! document, and a pair (x, y) counts once per document containing both.
//! Terms are interned to keep the pair table compact; pairs that never
//! co-occur are never materialized.

mod metric;

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

pub use metric::{
    all_metrics, default_metric, resolve_metric, similarity, CountsError, Dice, Jaccard, Nwd,
    PairCounts, ScoreOrder, SimilarityMetric,
};

use crate::metadata::FieldExtraction;
use crate::text::{normalize_term, tokenize_free_text, PipelineConfig};

/// Interned term table for one side of the index.
#[derive(Debug, Clone, Default)]
struct TermTable {
    ids: HashMap<String, u32>,
    terms: Vec<String>,
    df: Vec<u64>,
}

impl TermTable {
    fn intern(&mut self, term: &str) -> u32 {
        if let Some(&id) = self.ids.get(term) {
            return id;
        }
        let id = self.terms.len() as u32;
        self.ids.insert(term.to_string(), id);
        self.terms.push(term.to_string());
        self.df.push(0);
        id
    }

    fn id(&self, term: &str) -> Option<u32> {
        self.ids.get(term).copied()
    }

    fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    fn df(&self, id: u32) -> u64 {
        self.df[id as usize]
    }

    fn len(&self) -> usize {
        self.terms.len()
    }

    fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.terms
            .iter()
            .zip(self.df.iter())
            .map(|(t, df)| (t.as_str(), *df))
    }
}

/// The co-occurrence index: corpus size, per-term document frequencies for
/// both sides, and joint document frequencies for every co-occurring pair.
#[derive(Debug, Clone, Default)]
pub struct CooccurrenceIndex {
    n_docs: u64,
    source: TermTable,
    target: TermTable,
    /// source id -> target id -> joint document frequency (>= 1).
    pairs: HashMap<u32, HashMap<u32, u64>>,
    pair_count: u64,
}

/// One ranked target term.
#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub term: String,
    pub score: f64,
    /// Document frequency of the target term.
    pub df_term: u64,
    /// Joint document frequency with the query; for multi-token queries
    /// the per-token joint frequencies summed.
    pub df_joint: u64,
}

/// Ranking output. An unknown query is signalled through
/// `query_in_corpus`, not an error: callers answer "no such term" rather
/// than failing.
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendResult {
    pub recommendations: Vec<Recommendation>,
    pub query_in_corpus: bool,
}

impl RecommendResult {
    fn empty() -> Self {
        RecommendResult {
            recommendations: Vec::new(),
            query_in_corpus: false,
        }
    }
}

impl CooccurrenceIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn source_term_count(&self) -> usize {
        self.source.len()
    }

    pub fn target_term_count(&self) -> usize {
        self.target.len()
    }

    pub fn pair_count(&self) -> u64 {
        self.pair_count
    }

    /// Document frequency of a source term (0 when absent).
    pub fn source_df(&self, term: &str) -> u64 {
        self.source.id(term).map(|id| self.source.df(id)).unwrap_or(0)
    }

    /// Document frequency of a target term (0 when absent).
    pub fn target_df(&self, term: &str) -> u64 {
        self.target.id(term).map(|id| self.target.df(id)).unwrap_or(0)
    }

    /// Joint document frequency of a pair (0 when absent).
    pub fn pair_df(&self, source: &str, target: &str) -> u64 {
        let (Some(s), Some(t)) = (self.source.id(source), self.target.id(target)) else {
            return 0;
        };
        self.pairs
            .get(&s)
            .and_then(|row| row.get(&t))
            .copied()
            .unwrap_or(0)
    }

    pub fn source_terms(&self) -> impl Iterator<Item = (&str, u64)> {
        self.source.iter()
    }

    pub fn target_terms(&self) -> impl Iterator<Item = (&str, u64)> {
        self.target.iter()
    }

    /// Every stored pair as (source, target, joint df).
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.pairs.iter().flat_map(move |(s, row)| {
            row.iter()
                .map(move |(t, df)| (self.source.term(*s), self.target.term(*t), *df))
        })
    }

    /// Counts one document given its deduplicated source and target term
    /// sets. Duplicate terms within one call are counted once.
    pub fn add_document<'a, S, T>(&mut self, source_terms: S, target_terms: T)
    where
        S: IntoIterator<Item = &'a str>,
        T: IntoIterator<Item = &'a str>,
    {
        self.n_docs += 1;
        let mut source_ids: Vec<u32> = source_terms
            .into_iter()
            .map(|t| self.source.intern(t))
            .collect();
        source_ids.sort_unstable();
        source_ids.dedup();
        let mut target_ids: Vec<u32> = target_terms
            .into_iter()
            .map(|t| self.target.intern(t))
            .collect();
        target_ids.sort_unstable();
        target_ids.dedup();

        for &s in &source_ids {
            self.source.df[s as usize] += 1;
        }
        for &t in &target_ids {
            self.target.df[t as usize] += 1;
        }
        if target_ids.is_empty() {
            return;
        }
        for &s in &source_ids {
            let row = self.pairs.entry(s).or_default();
            for &t in &target_ids {
                let slot = row.entry(t).or_insert(0);
                if *slot == 0 {
                    self.pair_count += 1;
                }
                *slot += 1;
            }
        }
    }

    /// Tokenizes and normalizes one extraction, deduplicates both sides
    /// within the document, and counts it. Documents with an empty side
    /// still advance `n_docs`.
    pub fn add_extraction(&mut self, extraction: &FieldExtraction, config: &PipelineConfig) {
        let source_set: BTreeSet<String> = extraction
            .source_texts
            .iter()
            .flat_map(|text| tokenize_free_text(text, config))
            .collect();
        let target_set: BTreeSet<String> = extraction
            .target_values
            .iter()
            .filter_map(|value| normalize_term(value, config))
            .collect();
        self.add_document(
            source_set.iter().map(String::as_str),
            target_set.iter().map(String::as_str),
        );
    }

    /// Ranks target terms for a single already-normalized query term.
    ///
    /// Only pairs with a joint document frequency of at least 1 are
    /// considered; targets with `df < min_target_df` are filtered out.
    /// Ordering is best-first for the metric, ties broken by descending
    /// joint frequency and then ascending term order.
    pub fn recommend(
        &self,
        query: &str,
        k: usize,
        metric: &dyn SimilarityMetric,
        min_target_df: u64,
    ) -> RecommendResult {
        let Some(query_id) = self.source.id(query) else {
            return RecommendResult::empty();
        };
        let df_x = self.source.df(query_id);
        let mut recommendations: Vec<Recommendation> = self
            .pairs
            .get(&query_id)
            .map(|row| {
                row.iter()
                    .filter_map(|(&t, &df_xy)| {
                        let df_y = self.target.df(t);
                        if df_y < min_target_df {
                            return None;
                        }
                        let counts = PairCounts {
                            df_x,
                            df_y,
                            df_xy,
                            n_docs: self.n_docs,
                        };
                        Some(Recommendation {
                            term: self.target.term(t).to_string(),
                            score: metric.score(&counts),
                            df_term: df_y,
                            df_joint: df_xy,
                        })
                    })
                    .collect()
            })
            .unwrap_or_default();
        sort_recommendations(&mut recommendations, metric.order());
        recommendations.truncate(k);
        RecommendResult {
            recommendations,
            query_in_corpus: true,
        }
    }

    /// Ranks target terms for a multi-token query by summing each target's
    /// per-token scores; tokens without a pair contribute 0. Reported
    /// joint frequencies are summed the same way. Unknown tokens are
    /// ignored; the query counts as in-corpus when at least one token is
    /// known.
    pub fn recommend_multi<S: AsRef<str>>(
        &self,
        query_tokens: &[S],
        k: usize,
        metric: &dyn SimilarityMetric,
        min_target_df: u64,
    ) -> RecommendResult {
        let mut any_known = false;
        let mut merged: HashMap<u32, (f64, u64)> = HashMap::new();
        for token in query_tokens {
            let Some(token_id) = self.source.id(token.as_ref()) else {
                continue;
            };
            any_known = true;
            let df_x = self.source.df(token_id);
            let Some(row) = self.pairs.get(&token_id) else {
                continue;
            };
            for (&t, &df_xy) in row {
                let df_y = self.target.df(t);
                if df_y < min_target_df {
                    continue;
                }
                let counts = PairCounts {
                    df_x,
                    df_y,
                    df_xy,
                    n_docs: self.n_docs,
                };
                let entry = merged.entry(t).or_insert((0.0, 0));
                entry.0 += metric.score(&counts);
                entry.1 += df_xy;
            }
        }
        if !any_known {
            return RecommendResult::empty();
        }
        let mut recommendations: Vec<Recommendation> = merged
            .into_iter()
            .map(|(t, (score, df_joint))| Recommendation {
                term: self.target.term(t).to_string(),
                score,
                df_term: self.target.df(t),
                df_joint,
            })
            .collect();
        sort_recommendations(&mut recommendations, metric.order());
        recommendations.truncate(k);
        RecommendResult {
            recommendations,
            query_in_corpus: true,
        }
    }

    /// Rebuilds an index from its serialized tables. Pair entries refer to
    /// positions within the given term vectors.
    pub(crate) fn from_parts(
        n_docs: u64,
        source: Vec<(String, u64)>,
        target: Vec<(String, u64)>,
        pairs: Vec<(u32, u32, u64)>,
    ) -> Self {
        let mut index = CooccurrenceIndex {
            n_docs,
            ..Default::default()
        };
        for (term, df) in source {
            let id = index.source.intern(&term);
            index.source.df[id as usize] = df;
        }
        for (term, df) in target {
            let id = index.target.intern(&term);
            index.target.df[id as usize] = df;
        }
        for (s, t, df) in pairs {
            index.pairs.entry(s).or_default().insert(t, df);
            index.pair_count += 1;
        }
        index
    }
}

/// Logical equality on the count tables, independent of interning order.
impl PartialEq for CooccurrenceIndex {
    fn eq(&self, other: &Self) -> bool {
        if self.n_docs != other.n_docs
            || self.source.len() != other.source.len()
            || self.target.len() != other.target.len()
            || self.pair_count != other.pair_count
        {
            return false;
        }
        self.source
            .iter()
            .all(|(term, df)| other.source_df(term) == df)
            && self
                .target
                .iter()
                .all(|(term, df)| other.target_df(term) == df)
            && self.pairs().all(|(s, t, df)| other.pair_df(s, t) == df)
    }
}

impl Eq for CooccurrenceIndex {}

/// Builds an index from a stream of extractions. Final counts do not
/// depend on the stream order.
pub fn build_index<I>(extractions: I, config: &PipelineConfig) -> CooccurrenceIndex
where
    I: IntoIterator<Item = FieldExtraction>,
{
    let mut index = CooccurrenceIndex::new();
    for extraction in extractions {
        index.add_extraction(&extraction, config);
    }
    index
}

fn sort_recommendations(recommendations: &mut [Recommendation], order: ScoreOrder) {
    recommendations.sort_unstable_by(|a, b| rank_cmp(a, b, order));
}

fn rank_cmp(a: &Recommendation, b: &Recommendation, order: ScoreOrder) -> Ordering {
    debug_assert!(!a.score.is_nan() && !b.score.is_nan());
    let by_score = match order {
        ScoreOrder::HigherIsBetter => b.score.partial_cmp(&a.score),
        ScoreOrder::LowerIsBetter => a.score.partial_cmp(&b.score),
    }
    .unwrap_or(Ordering::Equal);
    by_score
        .then_with(|| b.df_joint.cmp(&a.df_joint))
        .then_with(|| a.term.cmp(&b.term))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The four-document worked example used across the crate:
    /// d1 {youth, unemployment} x {labor market, adolescent},
    /// d2 {youth, education} x {adolescent},
    /// d3 {unemployment} x {labor market},
    /// d4 {education} x {school}.
    fn fixture_index() -> CooccurrenceIndex {
        let mut index = CooccurrenceIndex::new();
        index.add_document(
            ["youth", "unemployment"],
            ["labor market", "adolescent"],
        );
        index.add_document(["youth", "education"], ["adolescent"]);
        index.add_document(["unemployment"], ["labor market"]);
        index.add_document(["education"], ["school"]);
        index
    }

    #[test]
    fn add_document_counts_one_doc() {
        let mut index = CooccurrenceIndex::new();
        index.add_document(["youth"], ["adolescent"]);
        assert_eq!(index.n_docs(), 1);
        assert_eq!(index.source_df("youth"), 1);
        assert_eq!(index.target_df("adolescent"), 1);
        assert_eq!(index.pair_df("youth", "adolescent"), 1);
    }

    #[test]
    fn add_document_with_empty_target_advances_counts() {
        let mut index = CooccurrenceIndex::new();
        index.add_document(["youth"], []);
        assert_eq!(index.n_docs(), 1);
        assert_eq!(index.source_df("youth"), 1);
        assert_eq!(index.pair_count(), 0);
    }

    #[test]
    fn fixture_counts_match_hand_tally() {
        let index = fixture_index();
        assert_eq!(index.n_docs(), 4);
        assert_eq!(index.source_df("youth"), 2);
        assert_eq!(index.target_df("labor market"), 2);
        assert_eq!(index.pair_df("youth", "labor market"), 1);
        assert_eq!(index.pair_df("youth", "adolescent"), 2);
        assert_eq!(index.pair_df("unemployment", "labor market"), 2);
        assert_eq!(index.pair_df("unemployment", "adolescent"), 1);
        assert_eq!(index.pair_df("education", "school"), 1);
        assert_eq!(index.pair_count(), 6);
    }

    #[test]
    fn duplicate_terms_within_one_document_count_once() {
        let mut index = CooccurrenceIndex::new();
        index.add_document(["youth", "youth"], ["adolescent", "adolescent"]);
        assert_eq!(index.source_df("youth"), 1);
        assert_eq!(index.target_df("adolescent"), 1);
        assert_eq!(index.pair_df("youth", "adolescent"), 1);
    }

    #[test]
    fn recommend_ranks_fixture_for_youth() {
        let index = fixture_index();
        let result = index.recommend("youth", 10, &Jaccard, 1);
        assert!(result.query_in_corpus);
        let got: Vec<(&str, f64)> = result
            .recommendations
            .iter()
            .map(|r| (r.term.as_str(), r.score))
            .collect();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].0, "adolescent");
        assert!((got[0].1 - 1.0).abs() < 1e-12);
        assert_eq!(got[1].0, "labor market");
        assert!((got[1].1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn recommend_ranks_fixture_for_education() {
        // Hand check: J(education, school) = 1/(2+1-1) = 1/2 beats
        // J(education, adolescent) = 1/(2+2-1) = 1/3.
        let index = fixture_index();
        let result = index.recommend("education", 10, &Jaccard, 1);
        let got: Vec<(&str, f64)> = result
            .recommendations
            .iter()
            .map(|r| (r.term.as_str(), r.score))
            .collect();
        assert_eq!(got[0].0, "school");
        assert!((got[0].1 - 0.5).abs() < 1e-12);
        assert_eq!(got[1].0, "adolescent");
        assert!((got[1].1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn recommend_unknown_query_signals_not_in_corpus() {
        let index = fixture_index();
        let result = index.recommend("zzz-unknown", 10, &Jaccard, 1);
        assert!(!result.query_in_corpus);
        assert!(result.recommendations.is_empty());
    }

    #[test]
    fn recommend_breaks_score_and_joint_ties_lexicographically() {
        let mut index = CooccurrenceIndex::new();
        index.add_document(["query"], ["zeta", "alpha"]);
        index.add_document([], ["zeta", "alpha"]);
        let result = index.recommend("query", 10, &Jaccard, 1);
        let terms: Vec<&str> = result
            .recommendations
            .iter()
            .map(|r| r.term.as_str())
            .collect();
        // Both score 1/2 with df_joint 1; alphabetical order wins.
        assert_eq!(terms, ["alpha", "zeta"]);
    }

    #[test]
    fn recommend_breaks_score_ties_by_joint_frequency_first() {
        let mut index = CooccurrenceIndex::new();
        // zz: df=2, joint=2 -> J = 2/(3+2-2) = 2/3
        // aa: df=1, joint=1 -> J = 1/(3+1-1) = 1/3
        // bb: df=3, joint=2 -> J = 2/(3+3-2) = 1/2
        index.add_document(["q"], ["zz", "bb"]);
        index.add_document(["q"], ["zz", "aa", "bb"]);
        index.add_document(["q"], []);
        index.add_document([], ["bb"]);
        let result = index.recommend("q", 10, &Jaccard, 1);
        let got: Vec<(&str, u64)> = result
            .recommendations
            .iter()
            .map(|r| (r.term.as_str(), r.df_joint))
            .collect();
        assert_eq!(got, [("zz", 2), ("bb", 2), ("aa", 1)]);
    }

    #[test]
    fn recommend_respects_k_and_min_df() {
        let index = fixture_index();
        let top1 = index.recommend("youth", 1, &Jaccard, 1);
        assert_eq!(top1.recommendations.len(), 1);
        assert_eq!(top1.recommendations[0].term, "adolescent");
        // min_target_df 2 drops "school" (df 1) for education.
        let filtered = index.recommend("education", 10, &Jaccard, 2);
        let terms: Vec<&str> = filtered
            .recommendations
            .iter()
            .map(|r| r.term.as_str())
            .collect();
        assert_eq!(terms, ["adolescent"]);
    }

    #[test]
    fn recommend_multi_sums_per_token_scores() {
        // youth:        adolescent 1.0, labor market 1/3
        // unemployment: labor market 1.0, adolescent 1/3
        // Sums tie at 4/3 with joint sums tied at 3; the ascending term
        // tie-break puts "adolescent" first.
        let index = fixture_index();
        let result = index.recommend_multi(&["youth", "unemployment"], 10, &Jaccard, 1);
        assert!(result.query_in_corpus);
        let got: Vec<(&str, f64, u64)> = result
            .recommendations
            .iter()
            .map(|r| (r.term.as_str(), r.score, r.df_joint))
            .collect();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].0, "adolescent");
        assert!((got[0].1 - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(got[0].2, 3);
        assert_eq!(got[1].0, "labor market");
        assert!((got[1].1 - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(got[1].2, 3);
    }

    #[test]
    fn recommend_multi_with_single_token_equals_recommend() {
        let index = fixture_index();
        let single = index.recommend("youth", 10, &Jaccard, 1);
        let multi = index.recommend_multi(&["youth"], 10, &Jaccard, 1);
        assert_eq!(single, multi);
    }

    #[test]
    fn recommend_multi_ignores_unknown_tokens() {
        let index = fixture_index();
        let with_unknown = index.recommend_multi(&["youth", "zzz-unknown"], 10, &Jaccard, 1);
        let without = index.recommend_multi(&["youth"], 10, &Jaccard, 1);
        assert_eq!(with_unknown, without);
        let all_unknown = index.recommend_multi(&["zzz", "yyy"], 10, &Jaccard, 1);
        assert!(!all_unknown.query_in_corpus);
        assert!(all_unknown.recommendations.is_empty());
    }

    #[test]
    fn build_index_matches_hand_built_fixture() {
        use crate::metadata::FieldExtraction;
        let config = PipelineConfig::default();
        let docs = vec![
            FieldExtraction {
                doc_id: "d1".into(),
                source_texts: vec!["Youth unemployment".into()],
                target_values: vec!["Labor Market".into(), "Adolescent".into()],
            },
            FieldExtraction {
                doc_id: "d2".into(),
                source_texts: vec!["Youth education".into()],
                target_values: vec!["Adolescent".into()],
            },
            FieldExtraction {
                doc_id: "d3".into(),
                source_texts: vec!["Unemployment".into()],
                target_values: vec!["Labor market".into()],
            },
            FieldExtraction {
                doc_id: "d4".into(),
                source_texts: vec!["Education".into()],
                target_values: vec!["School".into()],
            },
        ];
        let built = build_index(docs, &config);
        assert_eq!(built, fixture_index());
    }

    #[test]
    fn build_index_on_empty_stream_is_empty() {
        let index = build_index(Vec::new(), &PipelineConfig::default());
        assert_eq!(index.n_docs(), 0);
        assert_eq!(index.source_term_count(), 0);
        assert_eq!(index.pair_count(), 0);
    }

    #[test]
    fn build_index_counts_repeated_documents_twice() {
        let config = PipelineConfig::default();
        let doc = FieldExtraction {
            doc_id: "d1".into(),
            source_texts: vec!["Youth".into()],
            target_values: vec!["Adolescent".into()],
        };
        let index = build_index(vec![doc.clone(), doc], &config);
        assert_eq!(index.n_docs(), 2);
        assert_eq!(index.source_df("youth"), 2);
        assert_eq!(index.pair_df("youth", "adolescent"), 2);
    }

    #[test]
    fn empty_extractions_still_count_toward_corpus_size() {
        let config = PipelineConfig::default();
        let docs = vec![
            FieldExtraction {
                doc_id: "d1".into(),
                source_texts: vec![],
                target_values: vec![],
            },
            FieldExtraction {
                doc_id: "d2".into(),
                source_texts: vec!["Youth".into()],
                target_values: vec!["Adolescent".into()],
            },
        ];
        let index = build_index(docs, &config);
        assert_eq!(index.n_docs(), 2);
    }

    #[test]
    fn logical_equality_ignores_interning_order() {
        let mut a = CooccurrenceIndex::new();
        a.add_document(["x", "y"], ["p"]);
        a.add_document(["y"], ["q"]);
        let mut b = CooccurrenceIndex::new();
        b.add_document(["y"], ["q"]);
        b.add_document(["x", "y"], ["p"]);
        assert_eq!(a, b);
        let mut c = CooccurrenceIndex::new();
        c.add_document(["x", "y"], ["p"]);
        assert_ne!(a, c);
    }
}
