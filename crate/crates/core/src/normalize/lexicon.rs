//! The signal-term lexicon and its matcher. Entries map terms to crisis
//! categories with a weight and one of four match modes; matching runs over
//! the normalized token stream and every match carries the byte span of the
//! triggering token(s) in the original text.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{NormalizedText, Span};
use crate::category::CrisisCategory;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid lexicon: {0}")]
    Invalid(String),
    #[error("entry `{term}`: regex failed to compile: {message}")]
    BadRegex { term: String, message: String },
}

/// How an entry's term is matched against the token stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Single token, equality.
    Exact,
    /// Whitespace-separated tokens matched as a contiguous run.
    Phrase,
    /// Single token within Levenshtein distance 1 of the term.
    EditDistance1,
    /// Regular expression searched within each token.
    Regex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub term: String,
    pub category: CrisisCategory,
    pub weight: f64,
    pub mode: MatchMode,
}

/// On-disk shape: either a bare entry list or an object with a description
/// header and an `entries` field.
#[derive(Deserialize)]
#[serde(untagged)]
enum LexiconFile {
    Bare(Vec<LexiconEntry>),
    Documented {
        #[serde(default)]
        #[allow(dead_code)]
        description: String,
        entries: Vec<LexiconEntry>,
    },
}

enum CompiledMatcher {
    Exact(String),
    Phrase(Vec<String>),
    EditDistance1(String),
    Regex(regex::Regex),
}

/// A validated term -> category signal table.
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    matchers: Vec<CompiledMatcher>,
}

impl Lexicon {
    pub fn from_entries(entries: Vec<LexiconEntry>) -> Result<Self, LexiconError> {
        if entries.is_empty() {
            return Err(LexiconError::Invalid("lexicon has no entries".to_string()));
        }
        let mut seen = BTreeSet::new();
        let mut matchers = Vec::with_capacity(entries.len());
        for entry in &entries {
            if entry.term.trim().is_empty() {
                return Err(LexiconError::Invalid("empty term".to_string()));
            }
            if entry.weight <= 0.0 || !entry.weight.is_finite() {
                return Err(LexiconError::Invalid(format!(
                    "entry `{}`: weight must be positive, got {}",
                    entry.term, entry.weight
                )));
            }
            if !seen.insert((entry.term.clone(), entry.category)) {
                return Err(LexiconError::Invalid(format!(
                    "duplicate (term, category) pair: (`{}`, {})",
                    entry.term, entry.category
                )));
            }
            let lowered = entry.term.to_lowercase();
            let matcher = match entry.mode {
                MatchMode::Exact => CompiledMatcher::Exact(lowered),
                MatchMode::Phrase => {
                    CompiledMatcher::Phrase(lowered.split_whitespace().map(str::to_string).collect())
                }
                MatchMode::EditDistance1 => CompiledMatcher::EditDistance1(lowered),
                MatchMode::Regex => CompiledMatcher::Regex(regex::Regex::new(&entry.term).map_err(
                    |e| LexiconError::BadRegex { term: entry.term.clone(), message: e.to_string() },
                )?),
            };
            matchers.push(matcher);
        }
        Ok(Self { entries, matchers })
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|source| LexiconError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&raw)
    }

    pub fn from_json(raw: &str) -> Result<Self, LexiconError> {
        let file: LexiconFile =
            serde_json::from_str(raw).map_err(|e| LexiconError::Invalid(e.to_string()))?;
        let entries = match file {
            LexiconFile::Bare(entries) => entries,
            LexiconFile::Documented { entries, .. } => entries,
        };
        Self::from_entries(entries)
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every token appearing in any non-regex term, lowercase. Used to keep
    /// the spelling corrector away from signal vocabulary.
    pub fn token_vocabulary(&self) -> BTreeSet<String> {
        let mut vocabulary = BTreeSet::new();
        for entry in &self.entries {
            if entry.mode != MatchMode::Regex {
                for token in entry.term.to_lowercase().split_whitespace() {
                    vocabulary.insert(token.to_string());
                }
            }
        }
        vocabulary
    }
}

/// One lexicon hit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexiconMatch {
    pub category: CrisisCategory,
    pub weight: f64,
    pub term: String,
    pub span: Span,
}

/// Match every lexicon entry against the token stream. Matches are ordered
/// by (token position, entry order) so output is stable; adding an entry can
/// only add matches, never remove existing ones.
pub fn match_lexicon(normalized: &NormalizedText, lexicon: &Lexicon) -> Vec<LexiconMatch> {
    let tokens = &normalized.tokens;
    let spans = &normalized.spans;
    let mut matches = Vec::new();
    for (position, token) in tokens.iter().enumerate() {
        for (entry, matcher) in lexicon.entries.iter().zip(&lexicon.matchers) {
            let hit = match matcher {
                CompiledMatcher::Exact(term) => (token == term).then_some(spans[position]),
                CompiledMatcher::EditDistance1(term) => {
                    (levenshtein(token, term) <= 1).then_some(spans[position])
                }
                CompiledMatcher::Regex(regex) => regex.is_match(token).then_some(spans[position]),
                CompiledMatcher::Phrase(words) => {
                    if position + words.len() <= tokens.len()
                        && tokens[position..position + words.len()].iter().eq(words.iter())
                    {
                        Some(spans[position].merge(spans[position + words.len() - 1]))
                    } else {
                        None
                    }
                }
            };
            if let Some(span) = hit {
                matches.push(LexiconMatch {
                    category: entry.category,
                    weight: entry.weight,
                    term: entry.term.clone(),
                    span,
                });
            }
        }
    }
    matches
}

/// Plain Levenshtein distance over characters.
pub fn levenshtein(a: &str, b: &str) -> usize {
    edit_distance(a, b, false)
}

/// Optimal string alignment distance: Levenshtein plus adjacent
/// transposition as a single edit ("teh" -> "the" is 1).
pub fn osa_distance(a: &str, b: &str) -> usize {
    edit_distance(a, b, true)
}

fn edit_distance(a: &str, b: &str, transpositions: bool) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let width = b.len() + 1;
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(a.len() + 1);
    rows.push((0..width).collect());
    for (i, &ca) in a.iter().enumerate() {
        let mut row = vec![0usize; width];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            let mut best = (rows[i][j + 1] + 1).min(row[j] + 1).min(rows[i][j] + cost);
            if transpositions && i > 0 && j > 0 && ca == b[j - 1] && a[i - 1] == cb {
                best = best.min(rows[i - 1][j - 1] + 1);
            }
            row[j + 1] = best;
        }
        rows.push(row);
    }
    rows[a.len()][b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::{EmojiTable, Normalizer, SpellingPolicy, TexteseMap};

    fn entry(term: &str, category: CrisisCategory, mode: MatchMode) -> LexiconEntry {
        LexiconEntry { term: term.to_string(), category, weight: 1.0, mode }
    }

    fn normalizer() -> Normalizer {
        Normalizer::new(TexteseMap::default(), EmojiTable::default(), SpellingPolicy::disabled())
    }

    fn small_lexicon() -> Lexicon {
        Lexicon::from_entries(vec![
            entry("13'ing", CrisisCategory::Suicide, MatchMode::Exact),
            entry("relief lines", CrisisCategory::SelfHarm, MatchMode::Phrase),
            entry("unalive", CrisisCategory::Suicide, MatchMode::EditDistance1),
            entry("^k+m+s+$", CrisisCategory::Suicide, MatchMode::Regex),
        ])
        .unwrap()
    }

    #[test]
    fn exact_slang_match() {
        let normalized = normalizer().normalize("been 13'ing again");
        let matches = match_lexicon(&normalized, &small_lexicon());
        assert_eq!(matches.len(), 1);
        assert_eq!(matches[0].category, CrisisCategory::Suicide);
        assert_eq!(matches[0].term, "13'ing");
    }

    #[test]
    fn phrase_matches_contiguous_tokens_with_merged_span() {
        let text = "my relief lines are showing";
        let normalized = normalizer().normalize(text);
        let matches = match_lexicon(&normalized, &small_lexicon());
        assert_eq!(matches.len(), 1);
        assert_eq!(matches[0].category, CrisisCategory::SelfHarm);
        assert_eq!(matches[0].span.slice(text), "relief lines");
    }

    #[test]
    fn phrase_requires_adjacency() {
        let normalized = normalizer().normalize("relief from the lines");
        assert!(match_lexicon(&normalized, &small_lexicon()).is_empty());
    }

    #[test]
    fn edit_distance_catches_variants() {
        let normalized = normalizer().normalize("unaliv unalived unalive alive");
        let matches = match_lexicon(&normalized, &small_lexicon());
        // "alive" is distance 2: only the first three hit
        assert_eq!(matches.len(), 3);
    }

    #[test]
    fn regex_mode_matches_tokens() {
        let normalized = normalizer().normalize("kms");
        let matches = match_lexicon(&normalized, &small_lexicon());
        assert_eq!(matches.len(), 1);
    }

    #[test]
    fn clean_text_matches_nothing() {
        let normalized = normalizer().normalize("can i reschedule my appointment");
        assert!(match_lexicon(&normalized, &small_lexicon()).is_empty());
    }

    #[test]
    fn adding_an_entry_never_removes_matches() {
        let normalized = normalizer().normalize("my relief lines and 13'ing thoughts");
        let base = small_lexicon();
        let before = match_lexicon(&normalized, &base);
        let mut grown = base.entries().to_vec();
        grown.push(entry("thoughts", CrisisCategory::SelfHarm, MatchMode::Exact));
        let after = match_lexicon(&normalized, &Lexicon::from_entries(grown).unwrap());
        for hit in &before {
            assert!(after.contains(hit));
        }
        assert_eq!(after.len(), before.len() + 1);
    }

    #[test]
    fn validation_rejects_bad_entries() {
        assert!(Lexicon::from_entries(vec![]).is_err());
        assert!(Lexicon::from_entries(vec![LexiconEntry {
            term: "x".to_string(),
            category: CrisisCategory::Abuse,
            weight: 0.0,
            mode: MatchMode::Exact,
        }])
        .is_err());
        assert!(Lexicon::from_entries(vec![entry("(", CrisisCategory::Abuse, MatchMode::Regex)]).is_err());
        let duplicate = vec![
            entry("kill myself", CrisisCategory::Suicide, MatchMode::Phrase),
            entry("kill myself", CrisisCategory::Suicide, MatchMode::Phrase),
        ];
        assert!(Lexicon::from_entries(duplicate).is_err());
    }

    #[test]
    fn json_forms_both_parse() {
        let bare = r#"[{"term":"x","category":"abuse","weight":1.0,"mode":"exact"}]"#;
        assert_eq!(Lexicon::from_json(bare).unwrap().len(), 1);
        let documented = r#"{"description":"ref","entries":[{"term":"x","category":"abuse","weight":1.0,"mode":"exact"}]}"#;
        assert_eq!(Lexicon::from_json(documented).unwrap().len(), 1);
    }

    #[test]
    fn distances() {
        assert_eq!(levenshtein("teh", "the"), 2);
        assert_eq!(osa_distance("teh", "the"), 1);
        assert_eq!(levenshtein("unalive", "unaliv"), 1);
        assert_eq!(levenshtein("unalive", "alive"), 2);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(osa_distance("abcd", "abcd"), 0);
        assert_eq!(levenshtein("kill", "will"), 1);
    }

    #[test]
    fn vocabulary_collects_term_tokens() {
        let vocabulary = small_lexicon().token_vocabulary();
        assert!(vocabulary.contains("relief"));
        assert!(vocabulary.contains("lines"));
        assert!(vocabulary.contains("unalive"));
        // regex patterns are not vocabulary
        assert!(!vocabulary.iter().any(|t| t.contains('^')));
    }
}
