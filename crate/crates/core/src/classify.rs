//! The two-stage screening pipeline: stage 1 flags a message as crisis or
//! not; stage 2 assigns crisis categories only to flagged messages. The
//! reference backend is a transparent lexicon scorer; external moderation
//! services plug in through the same [`Backend`] trait.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::category::{CategorySet, CrisisCategory, ALL_CATEGORIES, CATEGORY_COUNT};
use crate::corpus::Dataset;
use crate::exec;
use crate::normalize::{
    match_lexicon, EmojiTable, EmojiTag, Lexicon, LexiconMatch, NormalizedText, Normalizer, Span,
    SpellingPolicy, TexteseMap,
};

/// Failures surfaced by a screening backend, always carrying the backend id.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("backend `{backend_id}`: network failure after {attempts} attempt(s): {message}")]
    Network { backend_id: String, attempts: u32, message: String },
    #[error("backend `{backend_id}`: auth token env var `{env_var}` is not set")]
    MissingAuth { backend_id: String, env_var: String },
    #[error("backend `{backend_id}`: cassette miss for request hash {hash}")]
    CassetteMiss { backend_id: String, hash: String },
    #[error("backend `{backend_id}`: unparseable response: {message}")]
    Parse { backend_id: String, message: String },
}

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid threshold config: {0}")]
    InvalidConfig(String),
}

/// Scoring thresholds and weights for the lexicon screener. All constants
/// live here (and in the mirroring JSON config file) so a run's behavior is
/// fully determined by its configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Stage-1 signal at or above this flags the message as crisis.
    pub stage1_threshold: f64,
    /// Default per-category stage-2 threshold.
    pub category_threshold: f64,
    /// Per-category overrides of `category_threshold`.
    #[serde(default)]
    pub category_overrides: BTreeMap<CrisisCategory, f64>,
    /// Weight of each harm-tagged emoji signal in the stage-1 signal.
    pub emoji_weight: f64,
    /// Category preference order for the stage-2 argmax fallback.
    pub tie_break: Vec<CrisisCategory>,
}

impl Default for Thresholds {
    fn default() -> Self {
        serde_json::from_str(include_str!("../data/thresholds.json"))
            .expect("embedded threshold config parses")
    }
}

impl Thresholds {
    pub fn load(path: &Path) -> Result<Self, ClassifyError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|source| ClassifyError::Io { path: path.display().to_string(), source })?;
        let thresholds: Thresholds =
            serde_json::from_str(&raw).map_err(|e| ClassifyError::InvalidConfig(e.to_string()))?;
        thresholds.validate()?;
        Ok(thresholds)
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        if !self.stage1_threshold.is_finite() || self.stage1_threshold <= 0.0 {
            return Err(ClassifyError::InvalidConfig("stage1_threshold must be positive".into()));
        }
        if !self.category_threshold.is_finite() || self.category_threshold <= 0.0 {
            return Err(ClassifyError::InvalidConfig("category_threshold must be positive".into()));
        }
        if self.emoji_weight < 0.0 || !self.emoji_weight.is_finite() {
            return Err(ClassifyError::InvalidConfig("emoji_weight must be non-negative".into()));
        }
        let mut seen = CategorySet::new();
        for category in &self.tie_break {
            seen.insert(*category);
        }
        if self.tie_break.len() != CATEGORY_COUNT || seen.len() != CATEGORY_COUNT {
            return Err(ClassifyError::InvalidConfig(
                "tie_break must list each of the eight categories exactly once".into(),
            ));
        }
        Ok(())
    }

    fn threshold_for(&self, category: CrisisCategory) -> f64 {
        self.category_overrides.get(&category).copied().unwrap_or(self.category_threshold)
    }
}

/// A matched signal supporting a verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub category: CrisisCategory,
    pub term: String,
    pub weight: f64,
    pub span: Span,
}

/// A backend's verdict on one text.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreenResult {
    pub crisis: bool,
    pub categories: CategorySet,
    /// Non-zero per-category signal scores.
    pub scores: BTreeMap<CrisisCategory, f64>,
    pub evidence: Vec<Evidence>,
    pub backend_id: String,
}

impl ScreenResult {
    /// Construct a result, enforcing the hierarchical contract: a non-crisis
    /// verdict never carries categories.
    pub fn new(
        backend_id: impl Into<String>,
        crisis: bool,
        categories: CategorySet,
        scores: BTreeMap<CrisisCategory, f64>,
        evidence: Vec<Evidence>,
    ) -> Self {
        Self {
            crisis,
            categories: if crisis { categories } else { CategorySet::EMPTY },
            scores,
            evidence,
            backend_id: backend_id.into(),
        }
    }

    pub fn non_crisis(backend_id: impl Into<String>) -> Self {
        Self::new(backend_id, false, CategorySet::EMPTY, BTreeMap::new(), Vec::new())
    }
}

/// Per-category boolean vector (canonical order) used for flat evaluation:
/// an unflagged message contributes all-false.
pub fn flatten(result: &ScreenResult) -> [bool; CATEGORY_COUNT] {
    if result.crisis {
        result.categories.to_flags()
    } else {
        [false; CATEGORY_COUNT]
    }
}

/// A screening backend: deterministic text -> verdict for a fixed
/// configuration (external services satisfy this through replay cassettes).
pub trait Backend: Send + Sync {
    fn id(&self) -> &str;
    fn screen(&self, text: &str) -> Result<ScreenResult, BackendError>;
}

/// Screen one text through any backend, re-enforcing the hierarchical
/// contract on whatever the backend returned.
pub fn screen(text: &str, backend: &dyn Backend) -> Result<ScreenResult, BackendError> {
    let result = backend.screen(text)?;
    Ok(ScreenResult::new(
        result.backend_id,
        result.crisis,
        result.categories,
        result.scores,
        result.evidence,
    ))
}

fn category_totals(matches: &[LexiconMatch]) -> [f64; CATEGORY_COUNT] {
    let mut totals = [0.0; CATEGORY_COUNT];
    for hit in matches {
        totals[hit.category.index()] += hit.weight;
    }
    totals
}

fn harm_emoji_count(normalized: &NormalizedText) -> usize {
    normalized.emoji_signals.iter().filter(|s| s.tag == EmojiTag::HarmObject).count()
}

fn stage1_from_scores(totals: &[f64; CATEGORY_COUNT], harm_emoji: usize, thresholds: &Thresholds) -> bool {
    let lexical = totals.iter().copied().fold(0.0, f64::max);
    let signal = lexical + thresholds.emoji_weight * harm_emoji as f64;
    signal >= thresholds.stage1_threshold
}

fn stage2_from_scores(totals: &[f64; CATEGORY_COUNT], thresholds: &Thresholds) -> CategorySet {
    let mut categories = CategorySet::new();
    for category in ALL_CATEGORIES {
        if totals[category.index()] >= thresholds.threshold_for(category) {
            categories.insert(category);
        }
    }
    if categories.is_empty() {
        // non-empty guarantee: fall back to the top-scoring category, ties
        // broken by the configured preference order
        let mut best = thresholds.tie_break[0];
        for &category in &thresholds.tie_break {
            if totals[category.index()] > totals[best.index()] {
                best = category;
            }
        }
        categories.insert(best);
    }
    categories
}

/// Stage 1: does the aggregate signal (max category score plus weighted
/// harm-emoji count) clear the crisis threshold?
pub fn screen_stage1(normalized: &NormalizedText, lexicon: &Lexicon, thresholds: &Thresholds) -> bool {
    let totals = category_totals(&match_lexicon(normalized, lexicon));
    stage1_from_scores(&totals, harm_emoji_count(normalized), thresholds)
}

/// Stage 2: every category whose score clears its threshold; never empty
/// (argmax fallback). Only meaningful for stage-1-flagged messages.
pub fn screen_stage2(
    normalized: &NormalizedText,
    lexicon: &Lexicon,
    thresholds: &Thresholds,
) -> (CategorySet, BTreeMap<CrisisCategory, f64>) {
    let totals = category_totals(&match_lexicon(normalized, lexicon));
    let categories = stage2_from_scores(&totals, thresholds);
    (categories, score_map(&totals))
}

fn score_map(totals: &[f64; CATEGORY_COUNT]) -> BTreeMap<CrisisCategory, f64> {
    ALL_CATEGORIES
        .into_iter()
        .filter(|c| totals[c.index()] > 0.0)
        .map(|c| (c, totals[c.index()]))
        .collect()
}

/// The deterministic reference backend: normalization + lexicon scoring.
pub struct LexiconBackend {
    normalizer: Normalizer,
    lexicon: Lexicon,
    thresholds: Thresholds,
    id: String,
}

impl LexiconBackend {
    pub const REFERENCE_ID: &'static str = "lexicon-v1";

    /// Built-in tables: reference lexicon, textese map, emoji table,
    /// function-word list, and default thresholds.
    pub fn reference() -> Self {
        let lexicon = Lexicon::from_json(include_str!("../data/lexicon.json"))
            .expect("embedded lexicon parses");
        let textese: BTreeMap<String, String> =
            serde_json::from_str(include_str!("../data/textese.json"))
                .expect("embedded textese map parses");
        let textese = TexteseMap::from_entries(textese).expect("embedded textese map is valid");
        let emoji_raw: BTreeMap<String, EmojiTag> =
            serde_json::from_str(include_str!("../data/emoji.json"))
                .expect("embedded emoji table parses");
        let emoji = EmojiTable::from_entries(
            emoji_raw
                .into_iter()
                .map(|(k, v)| {
                    let mut chars = k.chars();
                    let c = chars.next().expect("emoji key non-empty");
                    assert!(chars.next().is_none(), "emoji key must be one code point");
                    (c, v)
                })
                .collect(),
        );
        let words: Vec<String> = serde_json::from_str(include_str!("../data/function_words.json"))
            .expect("embedded function-word list parses");
        let spelling = SpellingPolicy::new(words.into_iter().collect());
        Self::new(Self::REFERENCE_ID, lexicon, textese, emoji, spelling, Thresholds::default())
    }

    /// Assemble a backend from loaded tables. The spelling corrector is
    /// automatically kept away from the lexicon's vocabulary.
    pub fn new(
        id: impl Into<String>,
        lexicon: Lexicon,
        textese: TexteseMap,
        emoji: EmojiTable,
        mut spelling: SpellingPolicy,
        thresholds: Thresholds,
    ) -> Self {
        thresholds.validate().expect("thresholds validated before backend construction");
        spelling.protect(lexicon.token_vocabulary());
        Self { normalizer: Normalizer::new(textese, emoji, spelling), lexicon, thresholds, id: id.into() }
    }

    pub fn with_thresholds(mut self, thresholds: Thresholds) -> Result<Self, ClassifyError> {
        thresholds.validate()?;
        self.thresholds = thresholds;
        Ok(self)
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }
}

impl Backend for LexiconBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn screen(&self, text: &str) -> Result<ScreenResult, BackendError> {
        let normalized = self.normalizer.normalize(text);
        let matches = match_lexicon(&normalized, &self.lexicon);
        let totals = category_totals(&matches);
        let crisis = stage1_from_scores(&totals, harm_emoji_count(&normalized), &self.thresholds);
        let categories = if crisis {
            stage2_from_scores(&totals, &self.thresholds)
        } else {
            CategorySet::EMPTY
        };
        let evidence = matches
            .into_iter()
            .map(|hit| Evidence {
                category: hit.category,
                term: hit.term,
                weight: hit.weight,
                span: hit.span,
            })
            .collect();
        Ok(ScreenResult::new(&self.id, crisis, categories, score_map(&totals), evidence))
    }
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub crisis: bool,
    pub categories: CategorySet,
    pub backend: String,
}

impl Prediction {
    pub fn from_result(id: impl Into<String>, result: &ScreenResult) -> Self {
        Self {
            id: id.into(),
            crisis: result.crisis,
            categories: result.categories,
            backend: result.backend_id.clone(),
        }
    }
}

/// Screen every message in a dataset (parallel under the `parallel`
/// feature). Output order follows dataset order; the first backend error
/// aborts the run.
pub fn screen_dataset(backend: &dyn Backend, dataset: &Dataset) -> Result<Vec<Prediction>, BackendError> {
    exec::map_slice(dataset.messages(), |message| {
        screen(&message.text, backend).map(|result| Prediction::from_result(&message.id, &result))
    })
    .into_iter()
    .collect()
}

/// Sequential counterpart of [`screen_dataset`]; identical output.
pub fn screen_dataset_seq(
    backend: &dyn Backend,
    dataset: &Dataset,
) -> Result<Vec<Prediction>, BackendError> {
    exec::map_slice_seq(dataset.messages(), |message| {
        screen(&message.text, backend).map(|result| Prediction::from_result(&message.id, &result))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn backend() -> LexiconBackend {
        LexiconBackend::reference()
    }

    #[test]
    fn direct_statement_is_flagged_suicide() {
        let result = backend().screen("I want to kill myself").unwrap();
        assert!(result.crisis);
        assert_eq!(result.categories, CategorySet::new().with(CrisisCategory::Suicide));
        assert!(!result.evidence.is_empty());
        assert_eq!(result.backend_id, "lexicon-v1");
    }

    #[test]
    fn benign_requests_are_not_flagged() {
        for text in ["Can you help me find a provider near me?", "thanks, see you tuesday"] {
            let result = backend().screen(text).unwrap();
            assert!(!result.crisis, "{text:?} was wrongly flagged");
            assert!(result.categories.is_empty());
        }
    }

    #[test]
    fn masked_slang_with_typos_reaches_stage2() {
        let result = backend().screen("dude teh urge to unalive myself is getting stronger").unwrap();
        assert!(result.crisis);
        assert_eq!(result.categories, CategorySet::new().with(CrisisCategory::Suicide));
    }

    #[test]
    fn mixed_presentation_is_multi_label() {
        let result = backend()
            .screen("thinking about 13'ing after drinking a whole bottle of vodka")
            .unwrap();
        assert!(result.crisis);
        let expected: CategorySet =
            [CrisisCategory::Suicide, CrisisCategory::SubstanceMisuse].into_iter().collect();
        assert_eq!(result.categories, expected);
    }

    #[test]
    fn self_harm_slang_phrase() {
        let result = backend().screen("my relief lines are showing n i don't even care").unwrap();
        assert!(result.crisis);
        assert_eq!(result.categories, CategorySet::new().with(CrisisCategory::SelfHarm));
    }

    #[test]
    fn supporting_terms_combine_to_clear_stage1() {
        // 0.6 (phrase) + 0.4 (fear term) reaches the 1.0 threshold
        let result = backend()
            .screen("I feel like I'm always walking on eggshells when he's around n it scares me")
            .unwrap();
        assert!(result.crisis);
        assert_eq!(result.categories, CategorySet::new().with(CrisisCategory::Abuse));
    }

    #[test]
    fn fear_term_alone_stays_below_threshold() {
        let result = backend().screen("that horror movie scared me").unwrap();
        assert!(!result.crisis);
    }

    #[test]
    fn four_harm_emoji_alone_can_flag() {
        let result = backend().screen("🔪🔪🔪🔪").unwrap();
        assert!(result.crisis, "4 x 0.25 emoji weight reaches the stage-1 threshold");
        // no lexical signal: the fallback assigns the first tie-break category
        assert_eq!(result.categories.len(), 1);
        assert_eq!(result.categories.iter().next().unwrap(), CrisisCategory::Abuse);
    }

    #[test]
    fn stage2_fallback_picks_top_scoring_category() {
        // harm emoji push a sub-threshold lexical score over stage 1;
        // stage 2 then falls back to the highest-scoring category
        let result = backend().screen("it scares me 🔪🔪🩸").unwrap();
        assert!(result.crisis);
        assert_eq!(result.categories, CategorySet::new().with(CrisisCategory::Abuse));
    }

    #[test]
    fn hierarchy_non_crisis_flattens_to_all_false() {
        let result = backend().screen("am i due for a flu shot this fall?").unwrap();
        assert_eq!(flatten(&result), [false; CATEGORY_COUNT]);
    }

    #[test]
    fn flatten_marks_predicted_categories() {
        let result = backend().screen("I want to kill myself").unwrap();
        let flags = flatten(&result);
        assert!(flags[CrisisCategory::Suicide.index()]);
        assert_eq!(flags.iter().filter(|f| **f).count(), 1);
    }

    #[test]
    fn screen_result_constructor_enforces_hierarchy() {
        let sneaky = ScreenResult::new(
            "x",
            false,
            CategorySet::new().with(CrisisCategory::Abuse),
            BTreeMap::new(),
            Vec::new(),
        );
        assert!(sneaky.categories.is_empty());
    }

    #[test]
    fn screening_is_deterministic() {
        let b = backend();
        let text = "wanna cut myself again tonight 🙄🔪🩸";
        assert_eq!(b.screen(text).unwrap(), b.screen(text).unwrap());
    }

    #[test]
    fn categories_respect_scores_and_thresholds() {
        let b = backend();
        let result = b.screen("been taking extra pills to get high bc the dose stopped working").unwrap();
        assert!(result.crisis);
        for category in result.categories.iter() {
            let score = result.scores.get(&category).copied().unwrap_or(0.0);
            let max = result.scores.values().copied().fold(0.0, f64::max);
            let needed = b.thresholds().threshold_for(category).min(max);
            assert!(score >= needed);
        }
    }

    #[test]
    fn evidence_spans_point_at_signal_text() {
        let text = "after he hits me i go to my room and cut myself";
        let result = backend().screen(text).unwrap();
        let spans: Vec<&str> = result.evidence.iter().map(|e| e.span.slice(text)).collect();
        assert!(spans.contains(&"hits me"));
        assert!(spans.contains(&"cut myself"));
    }

    #[test]
    fn threshold_validation() {
        let mut thresholds = Thresholds::default();
        thresholds.tie_break.pop();
        assert!(thresholds.validate().is_err());
        let mut negative = Thresholds::default();
        negative.emoji_weight = -1.0;
        assert!(negative.validate().is_err());
        assert!(Thresholds::default().validate().is_ok());
    }

    #[test]
    fn stage_functions_compose_like_the_backend() {
        let b = backend();
        let text = "i relapsed last night and used way more than i meant to";
        let normalized = b.normalizer().normalize(text);
        assert!(screen_stage1(&normalized, b.lexicon(), b.thresholds()));
        let (categories, scores) = screen_stage2(&normalized, b.lexicon(), b.thresholds());
        let result = b.screen(text).unwrap();
        assert_eq!(categories, result.categories);
        assert_eq!(scores, result.scores);
    }
}
