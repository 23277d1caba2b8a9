//! Crisis-screening guardrail toolkit: dataset handling, deterministic text
//! normalization, a two-stage lexicon screener, and the diagnostic statistics
//! used to evaluate and compare screening backends.
//!
//! The crate is organized around the evaluation pipeline:
//!
//! - [`corpus`] — labeled message datasets (JSONL/CSV), validation, and
//!   descriptive statistics.
//! - [`normalize`] — tokenization, textese expansion, spelling repair, emoji
//!   signal extraction, and lexicon matching.
//! - [`classify`] — the two-stage screener (binary crisis detection, then
//!   multi-label categorization) and the flattening rule used for
//!   cross-backend comparison.
//! - [`metrics`] — confusion-based diagnostics with Wilson intervals,
//!   one-vs-rest per-category reports, macro averaging, Cohen's kappa, and
//!   the stage-2 misclassification matrix.
//! - [`stats`] — Cochran's Q, McNemar's test, Bonferroni control, and
//!   prevalence-projected PPV with seeded bootstrap intervals.
//! - [`report`] — deterministic table/figure rendering of evaluation output.
//!
//! All computation is pure over immutable inputs. Data-parallel loops
//! (bootstrap resampling, batch screening) run on rayon when the `parallel`
//! feature is enabled (the default) and fall back to sequential iteration
//! otherwise; both paths produce identical results because per-item RNG
//! streams are derived from (seed, index).

pub mod category;
pub mod classify;
pub mod corpus;
pub mod exec;
pub mod metrics;
pub mod normalize;
pub mod report;
pub mod stats;

pub use category::{CategorySet, CrisisCategory};
pub use classify::{Backend, BackendError, ScreenResult, Thresholds};
pub use corpus::{Dataset, Label, Message};
pub use metrics::{ConfusionCounts, MetricSet};
