//! Confusion-based diagnostic metrics with Wilson confidence intervals,
//! per-category one-vs-rest reports, macro averaging, inter-rater agreement,
//! and the stage-2 misclassification matrix.
//!
//! Proportion metrics carry Wilson score intervals; F1 (where Wilson does not
//! apply) carries a seeded stratified-bootstrap interval. Metrics whose
//! denominator is zero are reported as undefined (`None`), never as 0 or 1.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::category::{CategorySet, CrisisCategory, ALL_CATEGORIES, CATEGORY_COUNT};
use crate::stats::bootstrap::{percentile, resample_binomial, rng_for};
use crate::stats::special::z_for_confidence;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("prediction/label length mismatch: {predictions} predictions vs {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("no prediction found for id `{0}`")]
    MissingId(String),
    #[error("duplicate prediction for id `{0}`")]
    DuplicateId(String),
    #[error("kappa is undefined: expected agreement is 1 (degenerate marginals)")]
    DegenerateKappa,
}

/// 2x2 tally of a binary classification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fneg: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fneg: u64) -> Self {
        Self { tp, fp, tn, fneg }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fneg
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fneg
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }
}

/// Tally predictions against labels.
pub fn confusion(predictions: &[bool], labels: &[bool]) -> Result<ConfusionCounts, MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut counts = ConfusionCounts::default();
    for (&pred, &label) in predictions.iter().zip(labels) {
        match (pred, label) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fp += 1,
            (false, false) => counts.tn += 1,
            (false, true) => counts.fneg += 1,
        }
    }
    Ok(counts)
}

/// How a confidence interval was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Wilson,
    Bootstrap,
    /// Unweighted mean of per-category interval bounds (not a joint interval).
    MacroMean,
}

/// A point estimate with its 95% (or requested-level) interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: CiMethod,
}

/// The diagnostic metric bundle for one confusion table. `None` marks a
/// metric whose denominator was zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: Option<Estimate>,
    pub sensitivity: Option<Estimate>,
    pub specificity: Option<Estimate>,
    pub ppv: Option<Estimate>,
    pub npv: Option<Estimate>,
    pub f1: Option<Estimate>,
    pub counts: ConfusionCounts,
}

/// Seed and resample count for bootstrap intervals embedded in reports.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub seed: u64,
    pub resamples: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { seed: 42, resamples: 10_000 }
    }
}

/// Wilson score interval for `successes` out of `trials` at the given central
/// confidence level. Non-degenerate even at 0 or all successes.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(trials > 0, "wilson_interval requires trials > 0");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z = z_for_confidence(confidence);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half_width = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half_width).max(0.0), (center + half_width).min(1.0))
}

fn proportion_estimate(successes: u64, trials: u64, confidence: f64) -> Option<Estimate> {
    if trials == 0 {
        return None;
    }
    let (lower, upper) = wilson_interval(successes, trials, confidence);
    Some(Estimate {
        point: successes as f64 / trials as f64,
        lower,
        upper,
        method: CiMethod::Wilson,
    })
}

/// Derive the full metric bundle from a confusion table with default
/// bootstrap settings for the F1 interval.
pub fn metrics_from_confusion(counts: &ConfusionCounts, confidence: f64) -> MetricSet {
    metrics_from_confusion_with(counts, confidence, &BootstrapConfig::default())
}

/// Derive the full metric bundle from a confusion table.
///
/// Sensitivity = tp/(tp+fn), specificity = tn/(tn+fp), ppv = tp/(tp+fp),
/// npv = tn/(tn+fn), accuracy = (tp+tn)/n; each with a Wilson interval.
/// F1 = 2·sens·ppv/(sens+ppv), defined when both sensitivity and ppv are,
/// with a stratified-bootstrap percentile interval.
pub fn metrics_from_confusion_with(
    counts: &ConfusionCounts,
    confidence: f64,
    bootstrap: &BootstrapConfig,
) -> MetricSet {
    let n = counts.total();
    let accuracy = if n == 0 { None } else { proportion_estimate(counts.tp + counts.tn, n, confidence) };
    let sensitivity = proportion_estimate(counts.tp, counts.positives(), confidence);
    let specificity = proportion_estimate(counts.tn, counts.negatives(), confidence);
    let ppv = proportion_estimate(counts.tp, counts.tp + counts.fp, confidence);
    let npv = proportion_estimate(counts.tn, counts.tn + counts.fneg, confidence);

    let f1 = match (sensitivity, ppv) {
        (Some(_), Some(_)) => {
            // algebraically 2·sens·ppv/(sens+ppv), stable at tp = 0
            let point = 2.0 * counts.tp as f64
                / (2.0 * counts.tp as f64 + counts.fp as f64 + counts.fneg as f64);
            let (lower, upper) = f1_bootstrap_interval(counts, confidence, bootstrap)
                .unwrap_or((point, point));
            Some(Estimate { point, lower, upper, method: CiMethod::Bootstrap })
        }
        _ => None,
    };

    MetricSet { accuracy, sensitivity, specificity, ppv, npv, f1, counts: *counts }
}

/// Stratified bootstrap interval for F1: resample the positive stratum
/// (tp+fn) and the negative stratum (tn+fp) independently, recompute F1,
/// take the central percentile interval. Deterministic given the seed.
fn f1_bootstrap_interval(
    counts: &ConfusionCounts,
    confidence: f64,
    config: &BootstrapConfig,
) -> Option<(f64, f64)> {
    let n_pos = counts.positives();
    let n_neg = counts.negatives();
    if n_pos == 0 || n_neg == 0 || config.resamples == 0 {
        return None;
    }
    let p_tp = counts.tp as f64 / n_pos as f64;
    let p_fp = counts.fp as f64 / n_neg as f64;
    let samples = crate::exec::map_indexed(config.resamples, |i| {
        let mut rng = rng_for(config.seed, i as u64);
        let tp = resample_binomial(&mut rng, n_pos, p_tp);
        let fneg = n_pos - tp;
        let fp = resample_binomial(&mut rng, n_neg, p_fp);
        let denom = 2 * tp + fp + fneg;
        if denom == 0 {
            f64::NAN
        } else {
            2.0 * tp as f64 / denom as f64
        }
    });
    let realized: Vec<f64> = samples.into_iter().filter(|v| !v.is_nan()).collect();
    if realized.is_empty() {
        return None;
    }
    let alpha = (1.0 - confidence) / 2.0;
    Some((percentile(&realized, alpha), percentile(&realized, 1.0 - alpha)))
}

/// Flat mode scores every message; hierarchical mode restricts the
/// denominator to messages the backend flagged as crisis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationMode {
    Flat,
    Hierarchical,
}

/// One message's predicted and true crisis verdicts (joined on id).
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedMessage {
    pub id: String,
    pub predicted_crisis: bool,
    pub predicted: CategorySet,
    pub label_crisis: bool,
    pub label: CategorySet,
}

/// A crisis verdict for one message, usable as either prediction or label.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub id: String,
    pub crisis: bool,
    pub categories: CategorySet,
}

/// Join predictions onto labels by id, preserving label order. Fails with
/// the first label id that has no prediction.
pub fn join_on_id(
    labels: &[Verdict],
    predictions: &[Verdict],
) -> Result<Vec<EvaluatedMessage>, MetricsError> {
    let mut by_id: HashMap<&str, &Verdict> = HashMap::with_capacity(predictions.len());
    for pred in predictions {
        if by_id.insert(pred.id.as_str(), pred).is_some() {
            return Err(MetricsError::DuplicateId(pred.id.clone()));
        }
    }
    labels
        .iter()
        .map(|label| {
            let pred = by_id
                .get(label.id.as_str())
                .ok_or_else(|| MetricsError::MissingId(label.id.clone()))?;
            Ok(EvaluatedMessage {
                id: label.id.clone(),
                predicted_crisis: pred.crisis,
                predicted: pred.categories,
                label_crisis: label.crisis,
                label: label.categories,
            })
        })
        .collect()
}

/// Per-category metric bundles for one backend under one evaluation mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerCategoryReport {
    pub mode: EvaluationMode,
    pub n_evaluated: usize,
    /// Keyed in canonical category order.
    pub categories: Vec<(CrisisCategory, MetricSet)>,
}

impl PerCategoryReport {
    pub fn get(&self, category: CrisisCategory) -> &MetricSet {
        &self.categories[category.index()].1
    }
}

/// One-vs-rest evaluation of category predictions.
///
/// For each category c, the binary confusion of "c predicted" against
/// "c in the true label set", then the metric bundle from that table.
pub fn per_category_one_vs_rest(
    items: &[EvaluatedMessage],
    mode: EvaluationMode,
    confidence: f64,
    bootstrap: &BootstrapConfig,
) -> Result<PerCategoryReport, MetricsError> {
    let scoped: Vec<&EvaluatedMessage> = match mode {
        EvaluationMode::Flat => items.iter().collect(),
        EvaluationMode::Hierarchical => items.iter().filter(|m| m.predicted_crisis).collect(),
    };
    if scoped.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let categories = ALL_CATEGORIES
        .into_iter()
        .map(|category| {
            let mut counts = ConfusionCounts::default();
            for message in &scoped {
                let predicted = message.predicted.contains(category);
                let actual = message.label.contains(category);
                match (predicted, actual) {
                    (true, true) => counts.tp += 1,
                    (true, false) => counts.fp += 1,
                    (false, false) => counts.tn += 1,
                    (false, true) => counts.fneg += 1,
                }
            }
            (category, metrics_from_confusion_with(&counts, confidence, bootstrap))
        })
        .collect();
    Ok(PerCategoryReport { mode, n_evaluated: scoped.len(), categories })
}

/// Unweighted arithmetic mean of each metric across the eight categories.
///
/// Any category with an undefined metric makes the macro value undefined.
/// Interval bounds are averaged the same way and labeled [`CiMethod::MacroMean`];
/// counts are the elementwise sum of the per-category tallies.
pub fn macro_average(report: &PerCategoryReport) -> MetricSet {
    fn mean_of(estimates: Vec<Option<&Estimate>>) -> Option<Estimate> {
        let n = estimates.len() as f64;
        let mut point = 0.0;
        let mut lower = 0.0;
        let mut upper = 0.0;
        for estimate in estimates {
            let estimate = estimate?;
            point += estimate.point;
            lower += estimate.lower;
            upper += estimate.upper;
        }
        Some(Estimate {
            point: point / n,
            lower: lower / n,
            upper: upper / n,
            method: CiMethod::MacroMean,
        })
    }

    let pick = |f: fn(&MetricSet) -> Option<&Estimate>| {
        mean_of(report.categories.iter().map(|(_, m)| f(m)).collect())
    };

    let mut counts = ConfusionCounts::default();
    for (_, m) in &report.categories {
        counts.tp += m.counts.tp;
        counts.fp += m.counts.fp;
        counts.tn += m.counts.tn;
        counts.fneg += m.counts.fneg;
    }

    MetricSet {
        accuracy: pick(|m| m.accuracy.as_ref()),
        sensitivity: pick(|m| m.sensitivity.as_ref()),
        specificity: pick(|m| m.specificity.as_ref()),
        ppv: pick(|m| m.ppv.as_ref()),
        npv: pick(|m| m.npv.as_ref()),
        f1: pick(|m| m.f1.as_ref()),
        counts,
    }
}

/// Cohen's kappa for two binary raters over the same items:
/// kappa = (p_o − p_e) / (1 − p_e) with marginal-product expected agreement.
pub fn cohen_kappa(rater_a: &[bool], rater_b: &[bool]) -> Result<f64, MetricsError> {
    if rater_a.len() != rater_b.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: rater_a.len(),
            labels: rater_b.len(),
        });
    }
    if rater_a.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = rater_a.len() as f64;
    let mut agree = 0u64;
    let mut a_pos = 0u64;
    let mut b_pos = 0u64;
    for (&a, &b) in rater_a.iter().zip(rater_b) {
        if a == b {
            agree += 1;
        }
        if a {
            a_pos += 1;
        }
        if b {
            b_pos += 1;
        }
    }
    let p_o = agree as f64 / n;
    let pa = a_pos as f64 / n;
    let pb = b_pos as f64 / n;
    let p_e = pa * pb + (1.0 - pa) * (1.0 - pb);
    if (1.0 - p_e).abs() < f64::EPSILON {
        return Err(MetricsError::DegenerateKappa);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// 8x8 error matrix of the stage-2 classifier over flagged messages.
///
/// Diagonal (c, c): direct errors for category c, i.e. FP(c) + FN(c) among
/// flagged messages. Off-diagonal (r, c): messages truly carrying r where c
/// was wrongly predicted. Only diagonal entries contribute to overall error
/// statistics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MisclassMatrix {
    pub counts: [[u64; CATEGORY_COUNT]; CATEGORY_COUNT],
    pub n_flagged: usize,
}

impl MisclassMatrix {
    pub fn diagonal_total(&self) -> u64 {
        (0..CATEGORY_COUNT).map(|i| self.counts[i][i]).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.counts.iter().all(|row| row.iter().all(|&c| c == 0))
    }
}

/// Build the misclassification matrix from joined outcomes; only messages
/// the backend flagged as crisis are considered.
pub fn misclassification_matrix(items: &[EvaluatedMessage]) -> MisclassMatrix {
    let flagged: Vec<&EvaluatedMessage> = items.iter().filter(|m| m.predicted_crisis).collect();
    let mut counts = [[0u64; CATEGORY_COUNT]; CATEGORY_COUNT];
    for message in &flagged {
        for category in ALL_CATEGORIES {
            let predicted = message.predicted.contains(category);
            let actual = message.label.contains(category);
            if predicted != actual {
                counts[category.index()][category.index()] += 1;
            }
        }
        for truth in message.label.iter() {
            for wrong in message.predicted.iter() {
                if wrong != truth && !message.label.contains(wrong) {
                    counts[truth.index()][wrong.index()] += 1;
                }
            }
        }
    }
    MisclassMatrix { counts, n_flagged: flagged.len() }
}
