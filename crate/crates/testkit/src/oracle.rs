//! Brute-force ranking oracle.
//!
//! Materializes explicit document-ID sets per term and computes
//! relatedness directly from set cardinalities — for Jaccard literally
//! `|DS_x ∩ DS_y| / |DS_x ∪ DS_y|`. It shares no code with the engine's
//! streaming counters and exists so the engine can be checked against an
//! implementation too simple to be wrong.

use std::collections::{BTreeMap, BTreeSet};

/// One document as the oracle sees it: deduplicated term sets per side.
#[derive(Debug, Clone, Default)]
pub struct OracleDoc {
    pub sources: BTreeSet<String>,
    pub targets: BTreeSet<String>,
}

impl OracleDoc {
    pub fn new<S, T>(sources: S, targets: T) -> Self
    where
        S: IntoIterator,
        S::Item: Into<String>,
        T: IntoIterator,
        T::Item: Into<String>,
    {
        OracleDoc {
            sources: sources.into_iter().map(Into::into).collect(),
            targets: targets.into_iter().map(Into::into).collect(),
        }
    }
}

/// Metric selector mirroring the engine's registry names.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMetric {
    Jaccard,
    Dice,
    Nwd,
}

impl OracleMetric {
    fn higher_is_better(self) -> bool {
        !matches!(self, OracleMetric::Nwd)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRecommendation {
    pub term: String,
    pub score: f64,
    pub df_term: u64,
    pub df_joint: u64,
}

fn doc_set(docs: &[OracleDoc], term: &str, targets: bool) -> BTreeSet<usize> {
    docs.iter()
        .enumerate()
        .filter(|(_, doc)| {
            if targets {
                doc.targets.contains(term)
            } else {
                doc.sources.contains(term)
            }
        })
        .map(|(i, _)| i)
        .collect()
}

fn score_sets(metric: OracleMetric, ds_x: &BTreeSet<usize>, ds_y: &BTreeSet<usize>, n: usize) -> f64 {
    let inter = ds_x.intersection(ds_y).count() as f64;
    match metric {
        OracleMetric::Jaccard => {
            let union = ds_x.union(ds_y).count() as f64;
            inter / union
        }
        OracleMetric::Dice => 2.0 * inter / (ds_x.len() + ds_y.len()) as f64,
        OracleMetric::Nwd => {
            let log_x = (ds_x.len() as f64).ln();
            let log_y = (ds_y.len() as f64).ln();
            let log_xy = inter.ln();
            let log_n = (n as f64).ln();
            let denominator = log_n - log_x.min(log_y);
            if denominator == 0.0 {
                return if inter as usize == ds_x.len().min(ds_y.len()) {
                    0.0
                } else {
                    f64::INFINITY
                };
            }
            (log_x.max(log_y) - log_xy) / denominator
        }
    }
}

fn sort_and_truncate(
    mut items: Vec<OracleRecommendation>,
    metric: OracleMetric,
    k: usize,
) -> Vec<OracleRecommendation> {
    items.sort_by(|a, b| {
        let by_score = if metric.higher_is_better() {
            b.score.partial_cmp(&a.score)
        } else {
            a.score.partial_cmp(&b.score)
        }
        .unwrap();
        by_score
            .then_with(|| b.df_joint.cmp(&a.df_joint))
            .then_with(|| a.term.cmp(&b.term))
    });
    items.truncate(k);
    items
}

/// Every distinct target term of the corpus.
fn all_targets(docs: &[OracleDoc]) -> BTreeSet<String> {
    docs.iter().flat_map(|d| d.targets.iter().cloned()).collect()
}

/// Ranks target terms for one query term straight from document sets.
/// Returns `None` when the query occurs in no document.
pub fn brute_force_recommend(
    docs: &[OracleDoc],
    query: &str,
    k: usize,
    metric: OracleMetric,
    min_target_df: u64,
) -> Option<Vec<OracleRecommendation>> {
    let ds_x = doc_set(docs, query, false);
    if ds_x.is_empty() {
        return None;
    }
    let items = all_targets(docs)
        .into_iter()
        .filter_map(|term| {
            let ds_y = doc_set(docs, &term, true);
            let joint = ds_x.intersection(&ds_y).count() as u64;
            if joint == 0 || (ds_y.len() as u64) < min_target_df {
                return None;
            }
            Some(OracleRecommendation {
                score: score_sets(metric, &ds_x, &ds_y, docs.len()),
                df_term: ds_y.len() as u64,
                df_joint: joint,
                term,
            })
        })
        .collect();
    Some(sort_and_truncate(items, metric, k))
}

/// Multi-token ranking: per-token scores summed per target, absent pairs
/// contributing zero, reported joint frequencies summed the same way.
/// Returns `None` when no token occurs in any document.
pub fn brute_force_multi(
    docs: &[OracleDoc],
    tokens: &[&str],
    k: usize,
    metric: OracleMetric,
    min_target_df: u64,
) -> Option<Vec<OracleRecommendation>> {
    let known: Vec<&str> = tokens
        .iter()
        .copied()
        .filter(|t| !doc_set(docs, t, false).is_empty())
        .collect();
    if known.is_empty() {
        return None;
    }
    let mut merged: BTreeMap<String, (f64, u64, u64)> = BTreeMap::new();
    for token in &known {
        if let Some(per_token) = brute_force_recommend(docs, token, usize::MAX, metric, min_target_df)
        {
            for rec in per_token {
                let entry = merged.entry(rec.term.clone()).or_insert((0.0, rec.df_term, 0));
                entry.0 += rec.score;
                entry.2 += rec.df_joint;
            }
        }
    }
    let items = merged
        .into_iter()
        .map(|(term, (score, df_term, df_joint))| OracleRecommendation {
            term,
            score,
            df_term,
            df_joint,
        })
        .collect();
    Some(sort_and_truncate(items, metric, k))
}
