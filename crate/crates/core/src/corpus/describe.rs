//! Descriptive statistics over a dataset: per-message length summaries,
//! lexical diversity, and the most frequent words.
//!
//! Counting rules:
//! - a token is a maximal run of non-whitespace characters, case-folded for
//!   uniqueness and frequency counting ("I'm" is one token);
//! - sentences are splits on runs of `.`, `!`, `?`; a message with no
//!   terminator counts as one sentence;
//! - characters are raw code points of the message text;
//! - the standard deviation uses the sample (n−1) denominator.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{CorpusError, Dataset};

/// Five-number summary of a per-message quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub min: u64,
    pub max: u64,
}

/// One entry of the top-words table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordFrequency {
    pub word: String,
    pub count: u64,
    /// Share of the corpus total token count.
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub n_messages: usize,
    pub characters: SummaryStats,
    pub words: SummaryStats,
    pub sentences: SummaryStats,
    pub unique_tokens: u64,
    pub total_tokens: u64,
    pub type_token_ratio: f64,
    pub top_words: Vec<WordFrequency>,
}

/// Case-folded whitespace tokens of one message.
pub fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(|t| t.to_lowercase()).collect()
}

/// Sentence count: segments with visible content after splitting on runs of
/// terminators; never less than one.
pub fn sentence_count(text: &str) -> u64 {
    let count = text
        .split(['.', '!', '?'])
        .filter(|segment| segment.chars().any(|c| !c.is_whitespace()))
        .count() as u64;
    count.max(1)
}

fn summarize(values: &[u64]) -> SummaryStats {
    let n = values.len();
    debug_assert!(n > 0);
    let mean = values.iter().sum::<u64>() as f64 / n as f64;
    let sd = if n > 1 {
        let ss: f64 = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum();
        (ss / (n as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    };
    SummaryStats { mean, sd, median, min: sorted[0], max: sorted[n - 1] }
}

/// Compute the descriptive statistics of a non-empty dataset. `top_k`
/// controls the length of the frequent-word table. Ties in the frequency
/// table break lexicographically, so the result is independent of message
/// order.
pub fn describe(dataset: &Dataset, top_k: usize) -> Result<DescriptiveStats, CorpusError> {
    if dataset.is_empty() {
        return Err(CorpusError::EmptyDataset);
    }
    if top_k == 0 {
        return Err(CorpusError::InvalidTopK);
    }

    let mut characters = Vec::with_capacity(dataset.len());
    let mut words = Vec::with_capacity(dataset.len());
    let mut sentences = Vec::with_capacity(dataset.len());
    let mut frequencies: HashMap<String, u64> = HashMap::new();
    let mut total_tokens = 0u64;

    for message in dataset.iter() {
        characters.push(message.text.chars().count() as u64);
        let message_tokens = tokens(&message.text);
        words.push(message_tokens.len() as u64);
        sentences.push(sentence_count(&message.text));
        total_tokens += message_tokens.len() as u64;
        for token in message_tokens {
            *frequencies.entry(token).or_insert(0) += 1;
        }
    }

    let unique_tokens = frequencies.len() as u64;
    let type_token_ratio = if total_tokens == 0 {
        0.0
    } else {
        unique_tokens as f64 / total_tokens as f64
    };

    let mut ranked: Vec<(String, u64)> = frequencies.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let top_words = ranked
        .into_iter()
        .take(top_k)
        .map(|(word, count)| WordFrequency {
            word,
            count,
            share: count as f64 / total_tokens as f64,
        })
        .collect();

    Ok(DescriptiveStats {
        n_messages: dataset.len(),
        characters: summarize(&characters),
        words: summarize(&words),
        sentences: summarize(&sentences),
        unique_tokens,
        total_tokens,
        type_token_ratio,
        top_words,
    })
}
