//! Normalization of controlled terms and tokenization of free-text fields.
//!
//! Controlled vocabulary terms (subject descriptors, journal names, years)
//! are kept as whole phrases and only canonicalized. Free-text fields
//! (titles, abstracts) are split into single-token terms. Both sides of the
//! co-occurrence index go through this module so that query terms and
//! indexed terms compare equal.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Stopword list bundled as the default for [`PipelineConfig`].
const BUNDLED_STOPWORDS: &str = include_str!("stopwords_en.txt");

/// A set of stopwords dropped during free-text tokenization.
///
/// Entries are stored normalized (trimmed, lowercased); matching is
/// case-insensitive regardless of the pipeline's `lowercase` setting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    /// Empty list; nothing is dropped.
    pub fn empty() -> Self {
        StopwordList {
            words: HashSet::new(),
        }
    }

    /// The bundled minimal English list.
    pub fn bundled_english() -> Self {
        Self::from_lines(BUNDLED_STOPWORDS)
    }

    /// Parses the plain-text list format: one term per line, `#` starts a
    /// comment line, blank lines are ignored.
    pub fn from_lines(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|line| !line.is_empty() && !line.starts_with('#'))
            .map(|line| line.to_lowercase())
            .collect();
        StopwordList { words }
    }

    /// Loads a stopword file in the same one-term-per-line format.
    pub fn from_file(path: &Path) -> io::Result<Self> {
        Ok(Self::from_lines(&fs::read_to_string(path)?))
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        StopwordList { words }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl Default for StopwordList {
    fn default() -> Self {
        Self::bundled_english()
    }
}

impl Serialize for StopwordList {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut sorted: Vec<&str> = self.words.iter().map(String::as_str).collect();
        sorted.sort_unstable();
        sorted.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StopwordList {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let words = Vec::<String>::deserialize(deserializer)?;
        Ok(StopwordList::from_words(words))
    }
}

/// Text-processing settings applied per repository.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Lowercase terms and tokens.
    pub lowercase: bool,
    /// Minimum token length in characters; shorter tokens are dropped.
    pub min_token_length: usize,
    /// Stopwords dropped from free text (never from controlled terms).
    pub stopwords: StopwordList,
    /// Treat punctuation as a token boundary in free text.
    pub strip_punctuation: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            lowercase: true,
            min_token_length: 2,
            stopwords: StopwordList::default(),
            strip_punctuation: true,
        }
    }
}

impl PipelineConfig {
    /// Checks the configuration invariants.
    pub fn validate(&self) -> Result<(), String> {
        if self.min_token_length < 1 {
            return Err("min_token_length must be at least 1".into());
        }
        Ok(())
    }
}

/// Canonicalizes a controlled term: trims surrounding whitespace, collapses
/// internal whitespace runs to single spaces, and lowercases when
/// configured. Returns `None` when nothing remains. Controlled terms are
/// never split into tokens.
pub fn normalize_term(raw: &str, config: &PipelineConfig) -> Option<String> {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for ch in raw.chars() {
        if ch.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        if config.lowercase {
            out.extend(ch.to_lowercase());
        } else {
            out.push(ch);
        }
    }
    if out.is_empty() {
        None
    } else {
        Some(out)
    }
}

/// Splits free text into normalized single-token terms.
///
/// Tokens are maximal runs of non-boundary characters, where whitespace is
/// always a boundary and punctuation is one when `strip_punctuation` is
/// set. Tokens shorter than `min_token_length` and stopwords are dropped.
/// Duplicates are preserved; per-document deduplication happens in the
/// co-occurrence engine.
pub fn tokenize_free_text(text: &str, config: &PipelineConfig) -> Vec<String> {
    let is_boundary = |ch: char| {
        ch.is_whitespace() || (config.strip_punctuation && !ch.is_alphanumeric())
    };
    text.split(is_boundary)
        .filter(|tok| !tok.is_empty())
        .filter_map(|tok| {
            let normalized = if config.lowercase {
                tok.to_lowercase()
            } else {
                tok.to_string()
            };
            if normalized.chars().count() < config.min_token_length {
                return None;
            }
            let folded = if config.lowercase {
                normalized.clone()
            } else {
                normalized.to_lowercase()
            };
            if config.stopwords.contains(&folded) {
                return None;
            }
            Some(normalized)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_collapses_and_lowercases() {
        let config = PipelineConfig::default();
        assert_eq!(
            normalize_term("  Labor   Market ", &config),
            Some("labor market".to_string())
        );
        assert_eq!(
            normalize_term("Adolescent", &config),
            Some("adolescent".to_string())
        );
        assert_eq!(normalize_term("   ", &config), None);
        assert_eq!(normalize_term("", &config), None);
    }

    #[test]
    fn normalize_preserves_case_when_configured() {
        let config = PipelineConfig {
            lowercase: false,
            ..PipelineConfig::default()
        };
        assert_eq!(
            normalize_term("Labor  Market", &config),
            Some("Labor Market".to_string())
        );
    }

    #[test]
    fn tokenize_drops_stopwords_and_short_tokens() {
        let config = PipelineConfig::default();
        assert_eq!(
            tokenize_free_text("Youth unemployment in Europe", &config),
            vec!["youth", "unemployment", "europe"]
        );
        assert_eq!(tokenize_free_text("", &config), Vec::<String>::new());
    }

    #[test]
    fn tokenize_splits_on_punctuation() {
        let config = PipelineConfig::default();
        assert_eq!(
            tokenize_free_text("Labor-market dynamics, 2012", &config),
            vec!["labor", "market", "dynamics", "2012"]
        );
    }

    #[test]
    fn tokenize_keeps_punctuation_when_disabled() {
        let config = PipelineConfig {
            strip_punctuation: false,
            ..PipelineConfig::default()
        };
        assert_eq!(
            tokenize_free_text("labor-market dynamics", &config),
            vec!["labor-market", "dynamics"]
        );
    }

    #[test]
    fn tokenize_preserves_duplicates() {
        let config = PipelineConfig::default();
        assert_eq!(
            tokenize_free_text("youth youth", &config),
            vec!["youth", "youth"]
        );
    }

    #[test]
    fn stopword_file_format_skips_comments() {
        let list = StopwordList::from_lines("# comment\n\n  The \nvon\n");
        assert!(list.contains("the"));
        assert!(list.contains("von"));
        assert_eq!(list.len(), 2);
    }

    #[test]
    fn stopwords_match_case_insensitively() {
        let config = PipelineConfig {
            lowercase: false,
            ..PipelineConfig::default()
        };
        assert_eq!(
            tokenize_free_text("The Labor Market", &config),
            vec!["Labor", "Market"]
        );
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(raw in "\\PC{0,40}") {
            let config = PipelineConfig::default();
            if let Some(once) = normalize_term(&raw, &config) {
                prop_assert_eq!(normalize_term(&once, &config), Some(once.clone()));
            }
        }

        #[test]
        fn tokens_respect_length_and_stopwords(text in "\\PC{0,80}") {
            let config = PipelineConfig::default();
            for token in tokenize_free_text(&text, &config) {
                prop_assert!(token.chars().count() >= config.min_token_length);
                prop_assert!(!config.stopwords.contains(&token));
            }
        }

        #[test]
        fn tokenization_ignores_extra_whitespace(
            words in proptest::collection::vec("[a-z]{2,8}", 1..6),
            pads in proptest::collection::vec(" {1,3}", 0..7),
        ) {
            let config = PipelineConfig::default();
            let plain = words.join(" ");
            let mut padded = String::new();
            for (i, w) in words.iter().enumerate() {
                padded.push_str(pads.get(i).map(String::as_str).unwrap_or("  "));
                padded.push_str(w);
            }
            padded.push_str("   ");
            prop_assert_eq!(
                tokenize_free_text(&plain, &config),
                tokenize_free_text(&padded, &config)
            );
        }
    }
}
