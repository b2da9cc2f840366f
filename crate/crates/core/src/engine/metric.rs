//! Relatedness metrics over document-frequency counts.
//!
//! Each metric lives behind the [`SimilarityMetric`] trait and is
//! registered by name, so callers select one at runtime (`?metric=dice`,
//! `--metric nwd`). Jaccard is the default; Dice and the normalized web
//! distance are drop-in alternates over the same counts.

use thiserror::Error;

/// Document-frequency counts for one (source term, target term) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    /// Documents containing the source term.
    pub df_x: u64,
    /// Documents containing the target term.
    pub df_y: u64,
    /// Documents containing both.
    pub df_xy: u64,
    /// Total documents in the corpus.
    pub n_docs: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CountsError {
    #[error("df_xy ({df_xy}) exceeds min(df_x={df_x}, df_y={df_y})")]
    JointExceedsMarginal { df_x: u64, df_y: u64, df_xy: u64 },
    #[error("df_x and df_y must be at least 1 (got df_x={df_x}, df_y={df_y})")]
    ZeroMarginal { df_x: u64, df_y: u64 },
    #[error("n_docs ({n_docs}) is smaller than max(df_x={df_x}, df_y={df_y})")]
    CorpusSmallerThanDf { df_x: u64, df_y: u64, n_docs: u64 },
    #[error("{metric} requires {requirement}")]
    MetricPrecondition {
        metric: &'static str,
        requirement: &'static str,
    },
}

impl PairCounts {
    /// Validates the count invariants shared by all metrics.
    pub fn new(df_x: u64, df_y: u64, df_xy: u64, n_docs: u64) -> Result<Self, CountsError> {
        if df_x == 0 || df_y == 0 {
            return Err(CountsError::ZeroMarginal { df_x, df_y });
        }
        if df_xy > df_x.min(df_y) {
            return Err(CountsError::JointExceedsMarginal { df_x, df_y, df_xy });
        }
        if n_docs < df_x.max(df_y) {
            return Err(CountsError::CorpusSmallerThanDf { df_x, df_y, n_docs });
        }
        Ok(PairCounts {
            df_x,
            df_y,
            df_xy,
            n_docs,
        })
    }
}

/// Whether larger or smaller scores mean "more related".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreOrder {
    HigherIsBetter,
    LowerIsBetter,
}

/// A relatedness measure between a source and a target term, computed from
/// document-frequency counts alone.
pub trait SimilarityMetric: Send + Sync {
    /// Registry name, also used on the wire and the command line.
    fn name(&self) -> &'static str;

    /// Sort direction for ranking.
    fn order(&self) -> ScoreOrder;

    /// Metric-specific preconditions beyond the [`PairCounts`] invariants.
    fn check(&self, _counts: &PairCounts) -> Result<(), CountsError> {
        Ok(())
    }

    /// Computes the score. Total for counts satisfying the `PairCounts`
    /// invariants; degenerate cases map to deterministic values rather
    /// than NaN.
    fn score(&self, counts: &PairCounts) -> f64;
}

/// Jaccard index: `df_xy / (df_x + df_y - df_xy)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Jaccard;

impl SimilarityMetric for Jaccard {
    fn name(&self) -> &'static str {
        "jaccard"
    }

    fn order(&self) -> ScoreOrder {
        ScoreOrder::HigherIsBetter
    }

    fn score(&self, c: &PairCounts) -> f64 {
        c.df_xy as f64 / (c.df_x + c.df_y - c.df_xy) as f64
    }
}

/// Dice coefficient: `2 * df_xy / (df_x + df_y)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dice;

impl SimilarityMetric for Dice {
    fn name(&self) -> &'static str {
        "dice"
    }

    fn order(&self) -> ScoreOrder {
        ScoreOrder::HigherIsBetter
    }

    fn score(&self, c: &PairCounts) -> f64 {
        2.0 * c.df_xy as f64 / (c.df_x + c.df_y) as f64
    }
}

/// Normalized web distance with natural logarithms:
/// `(max(ln df_x, ln df_y) - ln df_xy) / (ln n_docs - min(ln df_x, ln df_y))`.
///
/// Lower values mean more related. When the denominator vanishes
/// (`df_x = df_y = n_docs`) the distance is 0 if `df_xy = df_x` and
/// positive infinity otherwise, matching the limit behavior.
#[derive(Debug, Clone, Copy, Default)]
pub struct Nwd;

impl SimilarityMetric for Nwd {
    fn name(&self) -> &'static str {
        "nwd"
    }

    fn order(&self) -> ScoreOrder {
        ScoreOrder::LowerIsBetter
    }

    fn check(&self, c: &PairCounts) -> Result<(), CountsError> {
        if c.df_xy == 0 {
            return Err(CountsError::MetricPrecondition {
                metric: "nwd",
                requirement: "df_xy >= 1",
            });
        }
        if c.n_docs < 2 {
            return Err(CountsError::MetricPrecondition {
                metric: "nwd",
                requirement: "n_docs >= 2",
            });
        }
        Ok(())
    }

    fn score(&self, c: &PairCounts) -> f64 {
        let log_x = (c.df_x as f64).ln();
        let log_y = (c.df_y as f64).ln();
        let log_xy = (c.df_xy as f64).ln();
        let log_n = (c.n_docs as f64).ln();
        let denominator = log_n - log_x.min(log_y);
        if denominator == 0.0 {
            // df_x = df_y = n_docs: zero distance when the pair set is the
            // whole corpus too, otherwise unrelatable (sorted last).
            return if c.df_xy == c.df_x { 0.0 } else { f64::INFINITY };
        }
        (log_x.max(log_y) - log_xy) / denominator
    }
}

static METRICS: [&dyn SimilarityMetric; 3] = [&Jaccard, &Dice, &Nwd];

/// All registered metrics.
pub fn all_metrics() -> &'static [&'static dyn SimilarityMetric] {
    &METRICS
}

/// Looks a metric up by its registry name (case-insensitive).
pub fn resolve_metric(name: &str) -> Option<&'static dyn SimilarityMetric> {
    METRICS
        .iter()
        .copied()
        .find(|m| m.name().eq_ignore_ascii_case(name))
}

/// The default metric.
pub fn default_metric() -> &'static dyn SimilarityMetric {
    &Jaccard
}

/// Validates the counts (including metric preconditions) and computes the
/// metric's score.
pub fn similarity(
    metric: &dyn SimilarityMetric,
    df_x: u64,
    df_y: u64,
    df_xy: u64,
    n_docs: u64,
) -> Result<f64, CountsError> {
    let counts = PairCounts::new(df_x, df_y, df_xy, n_docs)?;
    metric.check(&counts)?;
    Ok(metric.score(&counts))
}
