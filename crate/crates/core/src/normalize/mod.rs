//! Deterministic text normalization: case folding, textese expansion,
//! closed-list spelling repair, and emoji signal extraction. The output
//! token stream is what the lexicon matcher operates on.

mod lexicon;

pub use lexicon::{
    levenshtein, match_lexicon, osa_distance, Lexicon, LexiconEntry, LexiconError, LexiconMatch,
    MatchMode,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NormalizeError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid table {path}: {message}")]
    InvalidTable { path: String, message: String },
}

/// Byte range into the original text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    /// Smallest span covering both.
    pub fn merge(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }

    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionKind {
    Textese,
    Spelling,
}

/// A token rewrite performed during normalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expansion {
    pub original: String,
    pub replacement: String,
    pub kind: ExpansionKind,
}

/// Weak-signal tag attached to an emoji.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmojiTag {
    Affect,
    HarmObject,
    Substance,
    FoodBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmojiSignal {
    pub symbol: char,
    pub tag: EmojiTag,
}

/// The normalized view of one message.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedText {
    pub tokens: Vec<String>,
    /// One span per token, non-decreasing, into the original text. Tokens
    /// produced by a multi-word expansion share their source span.
    pub spans: Vec<Span>,
    pub expansions: Vec<Expansion>,
    pub emoji_signals: Vec<EmojiSignal>,
}

impl NormalizedText {
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Textese shorthand table (key -> normal-form replacement, possibly
/// multi-word). Keys are lowercase single tokens; no replacement token may
/// itself be a key, which keeps normalization idempotent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TexteseMap {
    entries: BTreeMap<String, String>,
}

impl TexteseMap {
    pub fn from_entries(entries: BTreeMap<String, String>) -> Result<Self, NormalizeError> {
        let invalid = |message: String| NormalizeError::InvalidTable {
            path: "<textese>".to_string(),
            message,
        };
        for (key, value) in &entries {
            if key.is_empty() || value.is_empty() {
                return Err(invalid(format!("empty key or value near `{key}`")));
            }
            if key.chars().any(char::is_whitespace) {
                return Err(invalid(format!("key `{key}` must be a single token")));
            }
            if *key != key.to_lowercase() {
                return Err(invalid(format!("key `{key}` must be lowercase")));
            }
            for token in value.split_whitespace() {
                if entries.contains_key(token) {
                    return Err(invalid(format!(
                        "replacement token `{token}` of key `{key}` is itself a key"
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, NormalizeError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|source| NormalizeError::Io { path: path.display().to_string(), source })?;
        let entries: BTreeMap<String, String> =
            serde_json::from_str(&raw).map_err(|e| NormalizeError::InvalidTable {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        Self::from_entries(entries)
    }

    pub fn get(&self, token: &str) -> Option<&str> {
        self.entries.get(token).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Emoji -> signal-tag table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmojiTable {
    entries: BTreeMap<char, EmojiTag>,
}

impl EmojiTable {
    pub fn from_entries(entries: BTreeMap<char, EmojiTag>) -> Self {
        Self { entries }
    }

    pub fn load(path: &Path) -> Result<Self, NormalizeError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|source| NormalizeError::Io { path: path.display().to_string(), source })?;
        let parsed: BTreeMap<String, EmojiTag> =
            serde_json::from_str(&raw).map_err(|e| NormalizeError::InvalidTable {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        let mut entries = BTreeMap::new();
        for (key, tag) in parsed {
            let mut chars = key.chars();
            let symbol = chars.next().ok_or_else(|| NormalizeError::InvalidTable {
                path: path.display().to_string(),
                message: "empty emoji key".to_string(),
            })?;
            if chars.next().is_some() {
                return Err(NormalizeError::InvalidTable {
                    path: path.display().to_string(),
                    message: format!("emoji key `{key}` must be a single code point"),
                });
            }
            entries.insert(symbol, tag);
        }
        Ok(Self { entries })
    }

    pub fn tag(&self, symbol: char) -> Option<EmojiTag> {
        self.entries.get(&symbol).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Edit-distance-1 spelling repair against a closed function-word list.
///
/// A token is corrected only when it is purely alphabetic, at least three
/// characters, not itself a function word, not protected (lexicon
/// vocabulary), and exactly one function word lies at optimal-string-alignment
/// distance 1 via a transposition ("teh" -> "the"). Substitution and
/// insertion/deletion edits are deliberately not repaired: at distance 1 they
/// overwhelmingly hit real words (way/was, bus/but, bill/will), while
/// transpositions are the characteristic fast-typing error. The protected
/// set keeps the corrector away from signal vocabulary: "unalive" must
/// survive verbatim, and tokens like "kill" or "cut" must never be rewritten.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpellingPolicy {
    pub enabled: bool,
    function_words: BTreeSet<String>,
    protected: BTreeSet<String>,
}

impl SpellingPolicy {
    pub fn new(function_words: BTreeSet<String>) -> Self {
        Self { enabled: true, function_words, protected: BTreeSet::new() }
    }

    pub fn disabled() -> Self {
        Self { enabled: false, function_words: BTreeSet::new(), protected: BTreeSet::new() }
    }

    pub fn load(path: &Path) -> Result<Self, NormalizeError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|source| NormalizeError::Io { path: path.display().to_string(), source })?;
        let words: Vec<String> =
            serde_json::from_str(&raw).map_err(|e| NormalizeError::InvalidTable {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        Ok(Self::new(words.into_iter().map(|w| w.to_lowercase()).collect()))
    }

    /// Mark tokens that must never be rewritten (typically the lexicon's
    /// vocabulary plus textese keys).
    pub fn protect<I: IntoIterator<Item = String>>(&mut self, tokens: I) {
        self.protected.extend(tokens);
    }

    fn correct(&self, token: &str) -> Option<&str> {
        if !self.enabled
            || token.chars().count() < 3
            || !token.chars().all(char::is_alphabetic)
            || self.function_words.contains(token)
            || self.protected.contains(token)
        {
            return None;
        }
        let mut found: Option<&str> = None;
        for word in &self.function_words {
            if word.chars().count() != token.chars().count() {
                continue;
            }
            // transposition: one edit under OSA but two under plain Levenshtein
            if osa_distance(token, word) == 1 && levenshtein(token, word) == 2 {
                if found.is_some() {
                    return None; // ambiguous: leave the token alone
                }
                found = Some(word.as_str());
            }
        }
        found
    }
}

/// Bundles the three normalization tables; construct once, reuse everywhere.
#[derive(Debug, Clone, Default)]
pub struct Normalizer {
    pub textese: TexteseMap,
    pub emoji: EmojiTable,
    pub spelling: SpellingPolicy,
}

/// Characters stripped from token edges. Interior punctuation (apostrophes
/// in "i'm" or "13'ing", hyphens in "self-harm") is retained.
fn is_edge_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c, '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2026}' | '\u{2013}' | '\u{2014}')
}

/// Zero-width joiners and variation selectors carry no signal of their own.
fn is_ignorable(c: char) -> bool {
    matches!(c, '\u{FE0F}' | '\u{FE0E}' | '\u{200D}')
}

impl Normalizer {
    pub fn new(textese: TexteseMap, emoji: EmojiTable, spelling: SpellingPolicy) -> Self {
        Self { textese, emoji, spelling }
    }

    /// Normalize one message. Deterministic; the original text is untouched
    /// and every token carries its source byte range.
    pub fn normalize(&self, text: &str) -> NormalizedText {
        let mut tokens = Vec::new();
        let mut spans = Vec::new();
        let mut expansions = Vec::new();
        let mut emoji_signals = Vec::new();

        for (segment, span) in segments(text) {
            let mut kept = String::new();
            for c in segment.chars() {
                if is_ignorable(c) {
                    continue;
                }
                if let Some(tag) = self.emoji.tag(c) {
                    emoji_signals.push(EmojiSignal { symbol: c, tag });
                } else {
                    kept.push(c);
                }
            }
            let trimmed = kept.trim_matches(is_edge_punctuation);
            // a segment of pure punctuation stays opaque rather than vanishing
            let candidate = if trimmed.is_empty() { kept.as_str() } else { trimmed };
            if candidate.is_empty() {
                continue;
            }
            let lowered = candidate.to_lowercase();

            if let Some(replacement) = self.textese.get(&lowered) {
                expansions.push(Expansion {
                    original: lowered.clone(),
                    replacement: replacement.to_string(),
                    kind: ExpansionKind::Textese,
                });
                for word in replacement.split_whitespace() {
                    tokens.push(word.to_string());
                    spans.push(span);
                }
                continue;
            }
            if let Some(corrected) = self.spelling.correct(&lowered) {
                expansions.push(Expansion {
                    original: lowered.clone(),
                    replacement: corrected.to_string(),
                    kind: ExpansionKind::Spelling,
                });
                tokens.push(corrected.to_string());
                spans.push(span);
                continue;
            }
            tokens.push(lowered);
            spans.push(span);
        }

        NormalizedText { tokens, spans, expansions, emoji_signals }
    }
}

/// Whitespace-delimited segments with their byte spans.
fn segments(text: &str) -> impl Iterator<Item = (&str, Span)> {
    let mut result = Vec::new();
    let mut start: Option<usize> = None;
    for (offset, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                result.push((&text[s..offset], Span::new(s, offset)));
            }
        } else if start.is_none() {
            start = Some(offset);
        }
    }
    if let Some(s) = start {
        result.push((&text[s..], Span::new(s, text.len())));
    }
    result.into_iter()
}

impl fmt::Display for EmojiTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmojiTag::Affect => "affect",
            EmojiTag::HarmObject => "harm_object",
            EmojiTag::Substance => "substance",
            EmojiTag::FoodBody => "food_body",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_normalizer() -> Normalizer {
        let textese = TexteseMap::from_entries(
            [
                ("u", "you"),
                ("bc", "because"),
                ("rn", "right now"),
                ("idk", "i don't know"),
                ("n", "and"),
                ("cant", "can't"),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
        )
        .unwrap();
        let emoji = EmojiTable::from_entries(
            [
                ('\u{1F644}', EmojiTag::Affect),     // 🙄
                ('\u{1F52A}', EmojiTag::HarmObject), // 🔪
                ('\u{1FA78}', EmojiTag::HarmObject), // 🩸
            ]
            .into_iter()
            .collect(),
        );
        let mut spelling = SpellingPolicy::new(
            ["the", "and", "that", "with", "because", "going"]
                .into_iter()
                .map(str::to_string)
                .collect(),
        );
        spelling.protect(["unalive".to_string(), "kill".to_string()]);
        Normalizer::new(textese, emoji, spelling)
    }

    #[test]
    fn textese_expansion_is_recorded() {
        let normalizer = test_normalizer();
        let result = normalizer.normalize("u");
        assert_eq!(result.tokens, vec!["you"]);
        assert_eq!(
            result.expansions,
            vec![Expansion {
                original: "u".to_string(),
                replacement: "you".to_string(),
                kind: ExpansionKind::Textese,
            }]
        );
    }

    #[test]
    fn transposed_function_word_is_repaired_and_slang_preserved() {
        let normalizer = test_normalizer();
        let result = normalizer.normalize("dude teh urge to unalive myself is getting stronger");
        assert_eq!(
            result.tokens,
            vec!["dude", "the", "urge", "to", "unalive", "myself", "is", "getting", "stronger"]
        );
        assert_eq!(result.expansions.len(), 1);
        assert_eq!(result.expansions[0].kind, ExpansionKind::Spelling);
        assert_eq!(result.expansions[0].original, "teh");
    }

    #[test]
    fn emoji_become_signals_not_tokens() {
        let normalizer = test_normalizer();
        let result = normalizer.normalize("ok \u{1F644}\u{1F52A}\u{1FA78}");
        assert_eq!(result.tokens, vec!["ok"]);
        assert_eq!(
            result.emoji_signals,
            vec![
                EmojiSignal { symbol: '\u{1F644}', tag: EmojiTag::Affect },
                EmojiSignal { symbol: '\u{1F52A}', tag: EmojiTag::HarmObject },
                EmojiSignal { symbol: '\u{1FA78}', tag: EmojiTag::HarmObject },
            ]
        );
    }

    #[test]
    fn spans_cover_tokens_monotonically() {
        let normalizer = test_normalizer();
        let text = "He said: \"I CAN'T.\"";
        let result = normalizer.normalize(text);
        assert_eq!(result.tokens.len(), result.spans.len());
        let mut last_start = 0;
        for span in &result.spans {
            assert!(span.start >= last_start);
            assert!(span.end <= text.len());
            last_start = span.start;
        }
        // re-normalizing a span's slice reproduces its token
        for (token, span) in result.tokens.iter().zip(&result.spans) {
            let replay = normalizer.normalize(span.slice(text));
            assert!(replay.tokens.contains(token), "{token} not in replay of {:?}", span.slice(text));
        }
    }

    #[test]
    fn multi_word_expansion_shares_span() {
        let normalizer = test_normalizer();
        let result = normalizer.normalize("call me rn");
        assert_eq!(result.tokens, vec!["call", "me", "right", "now"]);
        assert_eq!(result.spans[2], result.spans[3]);
    }

    #[test]
    fn normalization_is_idempotent() {
        let normalizer = test_normalizer();
        for text in [
            "dude teh urge to unalive myself is getting stronger",
            "u said idk bc i cant",
            "OK \u{1F644}\u{1F52A} -- fine!!! (really)",
            "13'ing relief lines",
        ] {
            let once = normalizer.normalize(text);
            let twice = normalizer.normalize(&once.joined());
            assert_eq!(once.tokens, twice.tokens, "not idempotent for {text:?}");
        }
    }

    #[test]
    fn protected_tokens_never_corrected() {
        let normalizer = test_normalizer();
        // "kill" is one substitution from "will"-like words; protection must hold
        let result = normalizer.normalize("i want to kill myself");
        assert_eq!(result.tokens, vec!["i", "want", "to", "kill", "myself"]);
        assert!(result.expansions.is_empty());
    }

    #[test]
    fn ambiguous_corrections_are_skipped() {
        let spelling = SpellingPolicy::new(
            ["abc", "cab"].into_iter().map(str::to_string).collect(),
        );
        let normalizer = Normalizer::new(TexteseMap::default(), EmojiTable::default(), spelling);
        // "acb" is one transposition from both candidates: leave it alone
        assert_eq!(normalizer.normalize("acb").tokens, vec!["acb"]);
    }

    #[test]
    fn substitution_typos_are_left_alone() {
        let normalizer = test_normalizer();
        // "bus" is one substitution from "and"-class words like "but";
        // only transpositions are repaired
        let result = normalizer.normalize("the bus takes forever");
        assert_eq!(result.tokens, vec!["the", "bus", "takes", "forever"]);
        assert!(result.expansions.is_empty());
    }

    #[test]
    fn textese_value_must_not_be_a_key() {
        let err = TexteseMap::from_entries(
            [("u", "you"), ("you", "thou")]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("itself a key"));
    }

    #[test]
    fn pure_punctuation_passes_through_opaque() {
        let normalizer = test_normalizer();
        let result = normalizer.normalize("wait --- what");
        assert_eq!(result.tokens, vec!["wait", "---", "what"]);
    }

    #[test]
    fn interior_apostrophe_is_kept() {
        let normalizer = test_normalizer();
        let result = normalizer.normalize("been 13'ing, \"i'm\" done.");
        assert_eq!(result.tokens, vec!["been", "13'ing", "i'm", "done"]);
    }
}
