//! Comparative-inference toolkit: Cochran's Q omnibus test, pairwise
//! McNemar tests under Bonferroni control, and prevalence-projected PPV
//! with seeded bootstrap confidence intervals.

pub mod bootstrap;
pub mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::metrics::ConfusionCounts;
use bootstrap::{percentile, resample_binomial, rng_for};
use special::chi_square_sf;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("outcome vectors differ in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("need at least {required} models, got {got}")]
    TooFewModels { required: usize, got: usize },
    #[error("outcome row {row} has {got} entries, expected {expected}")]
    RaggedRow { row: usize, expected: usize, got: usize },
    #[error("{name} must lie in [0, 1], got {value}")]
    InvalidProportion { name: &'static str, value: f64 },
    #[error("projected PPV undefined: denominator is zero")]
    UndefinedPpv,
    #[error("bootstrap degenerate: no realizable resamples")]
    DegenerateBootstrap,
    #[error("confusion table needs a non-empty positive and negative stratum")]
    EmptyStratum,
}

/// Per-item correctness of k models over identical items. Row i column j is
/// true when model j was correct on item i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedOutcomes {
    item_ids: Vec<String>,
    outcomes: Vec<Vec<bool>>,
}

impl PairedOutcomes {
    pub fn new(item_ids: Vec<String>, outcomes: Vec<Vec<bool>>) -> Result<Self, StatsError> {
        if outcomes.is_empty() {
            return Err(StatsError::EmptyInput);
        }
        if item_ids.len() != outcomes.len() {
            return Err(StatsError::LengthMismatch { a: item_ids.len(), b: outcomes.len() });
        }
        let k = outcomes[0].len();
        if k < 2 {
            return Err(StatsError::TooFewModels { required: 2, got: k });
        }
        for (row, values) in outcomes.iter().enumerate() {
            if values.len() != k {
                return Err(StatsError::RaggedRow { row, expected: k, got: values.len() });
            }
        }
        Ok(Self { item_ids, outcomes })
    }

    pub fn n_items(&self) -> usize {
        self.outcomes.len()
    }

    pub fn n_models(&self) -> usize {
        self.outcomes[0].len()
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    /// Correctness column for one model.
    pub fn model_column(&self, model: usize) -> Vec<bool> {
        self.outcomes.iter().map(|row| row[model]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    CochranQ,
    McNemarExact,
    McNemarChi2Cc,
}

/// Outcome of one hypothesis test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub alpha: f64,
    pub significant: bool,
    pub method: TestMethod,
}

impl TestResult {
    fn new(statistic: f64, df: u32, p_value: f64, alpha: f64, method: TestMethod) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self { statistic, df, p_value, alpha, significant: p_value < alpha, method }
    }
}

/// Cochran's Q omnibus test over k paired binary outcome columns.
///
/// Q = (k−1)·(k·ΣC_j² − T²) / (k·T − ΣR_i²) with column successes C_j, row
/// successes R_i, grand total T; the p-value is the chi-square upper tail at
/// k−1 degrees of freedom. Rows where all models agree contribute nothing
/// but are retained. A vanishing denominator only happens when every row is
/// constant, i.e. the models never disagree; that carries no evidence of a
/// difference, so Q = 0 and p = 1 by convention. Intended as an omnibus
/// test for k ≥ 3; with k = 2 it reduces to McNemar's uncorrected
/// chi-square statistic.
pub fn cochran_q(data: &PairedOutcomes, alpha: f64) -> Result<TestResult, StatsError> {
    let k = data.n_models() as f64;
    let mut column_sums = vec![0u64; data.n_models()];
    let mut total = 0u64;
    let mut row_sq_sum = 0u64;
    for row in &data.outcomes {
        let mut row_sum = 0u64;
        for (j, &correct) in row.iter().enumerate() {
            if correct {
                column_sums[j] += 1;
                row_sum += 1;
            }
        }
        total += row_sum;
        row_sq_sum += row_sum * row_sum;
    }
    let df = (data.n_models() - 1) as u32;
    let denominator = k * total as f64 - row_sq_sum as f64;
    if denominator == 0.0 {
        return Ok(TestResult::new(0.0, df, 1.0, alpha, TestMethod::CochranQ));
    }
    let col_sq_sum: f64 = column_sums.iter().map(|&c| (c as f64) * (c as f64)).sum();
    let statistic = (k - 1.0) * (k * col_sq_sum - (total as f64) * (total as f64)) / denominator;
    let p_value = chi_square_sf(statistic, df);
    Ok(TestResult::new(statistic, df, p_value, alpha, TestMethod::CochranQ))
}

/// Discordant-pair counts: `(b, c)` where b = model A correct and B wrong,
/// c = A wrong and B correct.
pub fn discordant_counts(a_correct: &[bool], b_correct: &[bool]) -> Result<(u64, u64), StatsError> {
    if a_correct.len() != b_correct.len() {
        return Err(StatsError::LengthMismatch { a: a_correct.len(), b: b_correct.len() });
    }
    if a_correct.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut b = 0u64;
    let mut c = 0u64;
    for (&x, &y) in a_correct.iter().zip(b_correct) {
        match (x, y) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    Ok((b, c))
}

/// Discordant-pair total at or below which the exact binomial test is used.
pub const MCNEMAR_EXACT_THRESHOLD: u64 = 25;

/// McNemar's paired test with the default exact/asymptotic switch at
/// [`MCNEMAR_EXACT_THRESHOLD`] discordant pairs.
pub fn mcnemar(a_correct: &[bool], b_correct: &[bool], alpha: f64) -> Result<TestResult, StatsError> {
    mcnemar_with_threshold(a_correct, b_correct, alpha, MCNEMAR_EXACT_THRESHOLD)
}

/// McNemar's paired test with a configurable exact-test threshold.
///
/// With b + c ≤ `exact_threshold`: exact two-sided binomial
/// p = min(1, 2·P(X ≤ min(b, c))) for X ~ Binomial(b+c, ½). Above it:
/// chi-square with continuity correction, (|b−c|−1)²/(b+c) at 1 df.
/// Zero discordance yields p = 1 by convention (exact method).
pub fn mcnemar_with_threshold(
    a_correct: &[bool],
    b_correct: &[bool],
    alpha: f64,
    exact_threshold: u64,
) -> Result<TestResult, StatsError> {
    assert!(exact_threshold <= 100, "exact binomial tail is computed in u128");
    let (b, c) = discordant_counts(a_correct, b_correct)?;
    mcnemar_from_discordant(b, c, alpha, exact_threshold)
}

/// McNemar's test directly from discordant counts.
pub fn mcnemar_from_discordant(
    b: u64,
    c: u64,
    alpha: f64,
    exact_threshold: u64,
) -> Result<TestResult, StatsError> {
    let n = b + c;
    if n == 0 {
        return Ok(TestResult::new(0.0, 0, 1.0, alpha, TestMethod::McNemarExact));
    }
    if n <= exact_threshold {
        let m = b.min(c);
        let p = (2.0 * binomial_half_cdf(n, m)).min(1.0);
        Ok(TestResult::new(m as f64, 0, p, alpha, TestMethod::McNemarExact))
    } else {
        let diff = (b as f64 - c as f64).abs() - 1.0;
        let statistic = diff * diff / n as f64;
        let p = chi_square_sf(statistic, 1);
        Ok(TestResult::new(statistic, 1, p, alpha, TestMethod::McNemarChi2Cc))
    }
}

/// Exact P(X ≤ m) for X ~ Binomial(n, ½), via u128 integer arithmetic.
fn binomial_half_cdf(n: u64, m: u64) -> f64 {
    debug_assert!(n <= 100);
    let mut coeff: u128 = 1;
    let mut sum: u128 = 1; // k = 0 term
    for k in 1..=m as u128 {
        coeff = coeff * (n as u128 - k + 1) / k;
        sum += coeff;
    }
    sum as f64 / (2f64).powi(n as i32)
}

/// Per-test significance decisions under Bonferroni family-wise control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BonferroniOutcome {
    pub family_alpha: f64,
    pub per_test_alpha: f64,
    pub m: usize,
    pub significant: Vec<bool>,
}

/// Each test is significant iff p < family_alpha / m.
pub fn bonferroni(p_values: &[f64], family_alpha: f64) -> Result<BonferroniOutcome, StatsError> {
    if p_values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let m = p_values.len();
    let per_test_alpha = family_alpha / m as f64;
    Ok(BonferroniOutcome {
        family_alpha,
        per_test_alpha,
        m,
        significant: p_values.iter().map(|&p| p < per_test_alpha).collect(),
    })
}

fn check_proportion(name: &'static str, value: f64) -> Result<(), StatsError> {
    if !(0.0..=1.0).contains(&value) || value.is_nan() {
        return Err(StatsError::InvalidProportion { name, value });
    }
    Ok(())
}

/// Positive predictive value projected to an assumed prevalence:
/// PPV = sens·prev / (sens·prev + (1−spec)·(1−prev)).
pub fn project_ppv(sensitivity: f64, specificity: f64, prevalence: f64) -> Result<f64, StatsError> {
    check_proportion("sensitivity", sensitivity)?;
    check_proportion("specificity", specificity)?;
    check_proportion("prevalence", prevalence)?;
    let numerator = sensitivity * prevalence;
    let denominator = numerator + (1.0 - specificity) * (1.0 - prevalence);
    if denominator == 0.0 {
        return Err(StatsError::UndefinedPpv);
    }
    Ok(numerator / denominator)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PpvCiMethod {
    Bootstrap,
    BoundPropagation,
}

/// A projected PPV with its interval at one prevalence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpvProjection {
    pub prevalence: f64,
    pub ppv: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: PpvCiMethod,
}

/// One bootstrap replicate of the projected PPV: resample the positive and
/// negative strata independently with replacement, recompute sensitivity and
/// specificity, project. Returns NaN when the replicate's denominator is
/// zero (no realizable value).
pub fn ppv_replicate(counts: &ConfusionCounts, prevalence: f64, seed: u64, index: u64) -> f64 {
    let n_pos = counts.positives();
    let n_neg = counts.negatives();
    let mut rng = rng_for(seed, index);
    let tp = resample_binomial(&mut rng, n_pos, counts.tp as f64 / n_pos as f64);
    let fp = resample_binomial(&mut rng, n_neg, counts.fp as f64 / n_neg as f64);
    let sens = tp as f64 / n_pos as f64;
    let spec = (n_neg - fp) as f64 / n_neg as f64;
    let numerator = sens * prevalence;
    let denominator = numerator + (1.0 - spec) * (1.0 - prevalence);
    if denominator == 0.0 {
        f64::NAN
    } else {
        numerator / denominator
    }
}

/// Stratified bootstrap interval for the projected PPV (percentile 2.5/97.5
/// over realized replicates), deterministic given the seed. Degenerate
/// replicates (zero denominator) are dropped, never extrapolated.
pub fn project_ppv_ci(
    counts: &ConfusionCounts,
    prevalence: f64,
    seed: u64,
    resamples: usize,
) -> Result<PpvProjection, StatsError> {
    project_ppv_ci_impl(counts, prevalence, seed, resamples, true)
}

/// Sequential variant of [`project_ppv_ci`]; identical output, used as the
/// schedule-independence oracle and the bench baseline.
pub fn project_ppv_ci_seq(
    counts: &ConfusionCounts,
    prevalence: f64,
    seed: u64,
    resamples: usize,
) -> Result<PpvProjection, StatsError> {
    project_ppv_ci_impl(counts, prevalence, seed, resamples, false)
}

fn project_ppv_ci_impl(
    counts: &ConfusionCounts,
    prevalence: f64,
    seed: u64,
    resamples: usize,
    parallel: bool,
) -> Result<PpvProjection, StatsError> {
    check_proportion("prevalence", prevalence)?;
    if counts.positives() == 0 || counts.negatives() == 0 {
        return Err(StatsError::EmptyStratum);
    }
    if resamples == 0 {
        return Err(StatsError::EmptyInput);
    }
    let sens = counts.tp as f64 / counts.positives() as f64;
    let spec = counts.tn as f64 / counts.negatives() as f64;
    let point = project_ppv(sens, spec, prevalence)?;
    let replicate = |i: usize| ppv_replicate(counts, prevalence, seed, i as u64);
    let samples = if parallel {
        exec::map_indexed(resamples, replicate)
    } else {
        exec::map_indexed_seq(resamples, replicate)
    };
    let realized: Vec<f64> = samples.into_iter().filter(|v| !v.is_nan()).collect();
    if realized.is_empty() {
        return Err(StatsError::DegenerateBootstrap);
    }
    Ok(PpvProjection {
        prevalence,
        ppv: point,
        lower: percentile(&realized, 0.025),
        upper: percentile(&realized, 0.975),
        method: PpvCiMethod::Bootstrap,
    })
}

/// Alternate labeled interval: propagate the Wilson bounds of sensitivity
/// and specificity through the projection (worst/best corners; the PPV is
/// increasing in both arguments).
pub fn project_ppv_bounds(
    counts: &ConfusionCounts,
    prevalence: f64,
    confidence: f64,
) -> Result<PpvProjection, StatsError> {
    if counts.positives() == 0 || counts.negatives() == 0 {
        return Err(StatsError::EmptyStratum);
    }
    let sens = counts.tp as f64 / counts.positives() as f64;
    let spec = counts.tn as f64 / counts.negatives() as f64;
    let point = project_ppv(sens, spec, prevalence)?;
    let (sens_lo, sens_hi) = crate::metrics::wilson_interval(counts.tp, counts.positives(), confidence);
    let (spec_lo, spec_hi) = crate::metrics::wilson_interval(counts.tn, counts.negatives(), confidence);
    let lower = project_ppv(sens_lo, spec_lo, prevalence).unwrap_or(0.0);
    let upper = project_ppv(sens_hi, spec_hi, prevalence).unwrap_or(1.0);
    Ok(PpvProjection { prevalence, ppv: point, lower, upper, method: PpvCiMethod::BoundPropagation })
}
