//! Deterministic rendering of evaluation output as tables (markdown, CSV,
//! JSON) and figure data (CSV plus optional dependency-free SVG).
//!
//! The renderer formats what the report already contains and computes no new
//! statistics. Human-facing markdown shows three decimals in the
//! "0.990 (0.981-0.995)" style with undefined metrics as "—"; CSV carries
//! full-precision floats so re-parsing reproduces the exact values.

mod svg;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::category::ALL_CATEGORIES;
use crate::corpus::DescriptiveStats;
use crate::metrics::{Estimate, MetricSet, MisclassMatrix, PerCategoryReport};
use crate::stats::{BonferroniOutcome, PpvProjection, TestResult};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("report has no `{0}` section")]
    MissingSection(&'static str),
}

/// Everything evaluated for one backend.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendSection {
    pub backend_id: String,
    pub overall: MetricSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_category_flat: Option<PerCategoryReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_category_hierarchical: Option<PerCategoryReport>,
    /// Macro average over the hierarchical per-category report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub macro_hierarchical: Option<MetricSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub misclassification: Option<MisclassMatrix>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ppv_projections: Vec<PpvProjection>,
    /// Dense (prevalence, ppv) curve for figure output; filled when figures
    /// are requested so the renderer itself computes nothing.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ppv_curve: Vec<(f64, f64)>,
}

/// One pairwise significance test between two backends.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub backend_a: String,
    pub backend_b: String,
    pub result: TestResult,
    pub significant_after_correction: bool,
}

/// Omnibus plus corrected pairwise tests over one outcome stratum
/// (sensitivity = true-crisis items, specificity = true-non-crisis items).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StratumTests {
    pub n_items: usize,
    pub omnibus: TestResult,
    pub pairwise: Vec<PairwiseTest>,
    pub correction: BonferroniOutcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestsSection {
    pub sensitivity: StratumTests,
    pub specificity: StratumTests,
}

/// Inputs that determine a report, recorded so any run can be reproduced.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_map_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cassette_hash: Option<String>,
}

/// The complete output of an evaluation or comparison run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub dataset_id: String,
    pub n_messages: usize,
    pub backends: Vec<BackendSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tests: Option<TestsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptives: Option<DescriptiveStats>,
    pub provenance: Provenance,
}

impl ComparisonReport {
    /// Stable pretty-printed JSON; byte-identical for identical reports.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    Overall,
    PerCategory,
    PpvProjection,
    Descriptives,
    Misclass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    Markdown,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureKind {
    SensSpecBars,
    PpvCurves,
    MisclassHeatmap,
}

/// Rendered figure payload: CSV always, SVG when requested.
#[derive(Debug, Clone)]
pub struct FigureData {
    pub csv: String,
    pub svg: Option<String>,
}

const UNDEFINED: &str = "—";

fn fmt3(x: f64) -> String {
    format!("{x:.3}")
}

/// "0.990 (0.981-0.995)" or "—" for undefined metrics.
fn fmt_estimate(estimate: &Option<Estimate>) -> String {
    match estimate {
        Some(e) => format!("{} ({}-{})", fmt3(e.point), fmt3(e.lower), fmt3(e.upper)),
        None => UNDEFINED.to_string(),
    }
}

fn csv_cell(estimate: &Option<Estimate>, field: fn(&Estimate) -> f64) -> String {
    match estimate {
        Some(e) => field(e).to_string(),
        None => String::new(),
    }
}

struct MetricColumns;

impl MetricColumns {
    const NAMES: [&'static str; 6] = ["accuracy", "sensitivity", "specificity", "ppv", "npv", "f1"];

    fn get<'a>(set: &'a MetricSet, name: &str) -> &'a Option<Estimate> {
        match name {
            "accuracy" => &set.accuracy,
            "sensitivity" => &set.sensitivity,
            "specificity" => &set.specificity,
            "ppv" => &set.ppv,
            "npv" => &set.npv,
            "f1" => &set.f1,
            _ => unreachable!("unknown metric column"),
        }
    }
}

/// Render one section of the report as a document in the requested format.
pub fn render_table(
    report: &ComparisonReport,
    kind: TableKind,
    format: TableFormat,
) -> Result<String, ReportError> {
    match kind {
        TableKind::Overall => render_overall(report, format),
        TableKind::PerCategory => render_per_category(report, format),
        TableKind::PpvProjection => render_ppv_projection(report, format),
        TableKind::Descriptives => render_descriptives(report, format),
        TableKind::Misclass => render_misclass(report, format),
    }
}

fn markdown_row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

fn markdown_separator(n: usize) -> String {
    format!("|{}\n", " --- |".repeat(n))
}

fn csv_line(cells: &[String]) -> String {
    let escaped: Vec<String> = cells
        .iter()
        .map(|c| {
            if c.contains(',') || c.contains('"') || c.contains('\n') {
                format!("\"{}\"", c.replace('"', "\"\""))
            } else {
                c.clone()
            }
        })
        .collect();
    format!("{}\n", escaped.join(","))
}

fn render_overall(report: &ComparisonReport, format: TableFormat) -> Result<String, ReportError> {
    if report.backends.is_empty() {
        return Err(ReportError::MissingSection("overall"));
    }
    match format {
        TableFormat::Json => {
            let value: Vec<serde_json::Value> = report
                .backends
                .iter()
                .map(|b| {
                    serde_json::json!({ "backend": b.backend_id, "overall": b.overall })
                })
                .collect();
            Ok(pretty(&value))
        }
        TableFormat::Markdown => {
            let mut out = String::new();
            let mut header = vec!["Metric".to_string()];
            header.extend(report.backends.iter().map(|b| b.backend_id.clone()));
            out.push_str(&markdown_row(&header));
            out.push_str(&markdown_separator(header.len()));
            for name in MetricColumns::NAMES {
                let mut row = vec![name.to_string()];
                for backend in &report.backends {
                    row.push(fmt_estimate(MetricColumns::get(&backend.overall, name)));
                }
                out.push_str(&markdown_row(&row));
            }
            for (label, pick) in
                [("false positive", 0usize), ("false negative", 1), ("n", 2)]
            {
                let mut row = vec![label.to_string()];
                for backend in &report.backends {
                    let counts = &backend.overall.counts;
                    let value = match pick {
                        0 => counts.fp,
                        1 => counts.fneg,
                        _ => counts.total(),
                    };
                    row.push(value.to_string());
                }
                out.push_str(&markdown_row(&row));
            }
            Ok(out)
        }
        TableFormat::Csv => {
            let mut out = csv_line(
                &["backend", "metric", "point", "lower", "upper", "tp", "fp", "tn", "fn"]
                    .map(String::from),
            );
            for backend in &report.backends {
                for name in MetricColumns::NAMES {
                    let estimate = MetricColumns::get(&backend.overall, name);
                    let counts = &backend.overall.counts;
                    out.push_str(&csv_line(&[
                        backend.backend_id.clone(),
                        name.to_string(),
                        csv_cell(estimate, |e| e.point),
                        csv_cell(estimate, |e| e.lower),
                        csv_cell(estimate, |e| e.upper),
                        counts.tp.to_string(),
                        counts.fp.to_string(),
                        counts.tn.to_string(),
                        counts.fneg.to_string(),
                    ]));
                }
            }
            Ok(out)
        }
    }
}

fn per_category_blocks(
    report: &ComparisonReport,
) -> Vec<(&str, &'static str, &PerCategoryReport)> {
    let mut blocks = Vec::new();
    for backend in &report.backends {
        if let Some(flat) = &backend.per_category_flat {
            blocks.push((backend.backend_id.as_str(), "flat", flat));
        }
        if let Some(hier) = &backend.per_category_hierarchical {
            blocks.push((backend.backend_id.as_str(), "hierarchical", hier));
        }
    }
    blocks
}

fn render_per_category(report: &ComparisonReport, format: TableFormat) -> Result<String, ReportError> {
    let blocks = per_category_blocks(report);
    if blocks.is_empty() {
        return Err(ReportError::MissingSection("per_category"));
    }
    match format {
        TableFormat::Json => {
            let value: Vec<serde_json::Value> = blocks
                .iter()
                .map(|(backend, mode, block)| {
                    serde_json::json!({ "backend": backend, "mode": mode, "report": block })
                })
                .collect();
            Ok(pretty(&value))
        }
        TableFormat::Markdown => {
            let mut out = String::new();
            let header: Vec<String> = ["Backend", "Mode", "Category", "Accuracy", "Sensitivity",
                "Specificity", "PPV", "NPV", "F1", "FP", "FN", "n"]
                .map(String::from)
                .to_vec();
            out.push_str(&markdown_row(&header));
            out.push_str(&markdown_separator(header.len()));
            for (backend, mode, block) in &blocks {
                for (category, set) in &block.categories {
                    let mut row = vec![backend.to_string(), mode.to_string(), category.to_string()];
                    for name in MetricColumns::NAMES {
                        row.push(fmt_estimate(MetricColumns::get(set, name)));
                    }
                    row.push(set.counts.fp.to_string());
                    row.push(set.counts.fneg.to_string());
                    row.push(block.n_evaluated.to_string());
                    out.push_str(&markdown_row(&row));
                }
            }
            Ok(out)
        }
        TableFormat::Csv => {
            let mut out = csv_line(
                &["backend", "mode", "category", "metric", "point", "lower", "upper", "tp", "fp",
                    "tn", "fn", "n_evaluated"]
                    .map(String::from),
            );
            for (backend, mode, block) in &blocks {
                for (category, set) in &block.categories {
                    for name in MetricColumns::NAMES {
                        let estimate = MetricColumns::get(set, name);
                        out.push_str(&csv_line(&[
                            backend.to_string(),
                            mode.to_string(),
                            category.to_string(),
                            name.to_string(),
                            csv_cell(estimate, |e| e.point),
                            csv_cell(estimate, |e| e.lower),
                            csv_cell(estimate, |e| e.upper),
                            set.counts.tp.to_string(),
                            set.counts.fp.to_string(),
                            set.counts.tn.to_string(),
                            set.counts.fneg.to_string(),
                            block.n_evaluated.to_string(),
                        ]));
                    }
                }
            }
            Ok(out)
        }
    }
}

fn render_ppv_projection(report: &ComparisonReport, format: TableFormat) -> Result<String, ReportError> {
    if report.backends.iter().all(|b| b.ppv_projections.is_empty()) {
        return Err(ReportError::MissingSection("ppv_projection"));
    }
    match format {
        TableFormat::Json => {
            let value: Vec<serde_json::Value> = report
                .backends
                .iter()
                .map(|b| serde_json::json!({ "backend": b.backend_id, "projections": b.ppv_projections }))
                .collect();
            Ok(pretty(&value))
        }
        TableFormat::Markdown => {
            let prevalences: Vec<f64> = report
                .backends
                .iter()
                .find(|b| !b.ppv_projections.is_empty())
                .map(|b| b.ppv_projections.iter().map(|p| p.prevalence).collect())
                .unwrap_or_default();
            let mut header = vec!["Backend".to_string(), "Sensitivity".to_string(), "Specificity".to_string()];
            header.extend(prevalences.iter().map(|p| format!("{}% prevalence", trim_float(p * 100.0))));
            let mut out = markdown_row(&header);
            out.push_str(&markdown_separator(header.len()));
            for backend in &report.backends {
                let mut row = vec![
                    backend.backend_id.clone(),
                    fmt_estimate(&backend.overall.sensitivity),
                    fmt_estimate(&backend.overall.specificity),
                ];
                for prevalence in &prevalences {
                    let cell = backend
                        .ppv_projections
                        .iter()
                        .find(|p| p.prevalence == *prevalence)
                        .map(|p| format!("{} ({}-{})", fmt3(p.ppv), fmt3(p.lower), fmt3(p.upper)))
                        .unwrap_or_else(|| UNDEFINED.to_string());
                    row.push(cell);
                }
                out.push_str(&markdown_row(&row));
            }
            Ok(out)
        }
        TableFormat::Csv => {
            let mut out = csv_line(
                &["backend", "prevalence", "ppv", "lower", "upper", "method"].map(String::from),
            );
            for backend in &report.backends {
                for projection in &backend.ppv_projections {
                    out.push_str(&csv_line(&[
                        backend.backend_id.clone(),
                        projection.prevalence.to_string(),
                        projection.ppv.to_string(),
                        projection.lower.to_string(),
                        projection.upper.to_string(),
                        format!("{:?}", projection.method).to_lowercase(),
                    ]));
                }
            }
            Ok(out)
        }
    }
}

fn render_descriptives(report: &ComparisonReport, format: TableFormat) -> Result<String, ReportError> {
    let stats = report.descriptives.as_ref().ok_or(ReportError::MissingSection("descriptives"))?;
    match format {
        TableFormat::Json => Ok(pretty(stats)),
        TableFormat::Markdown => {
            let mut out = String::new();
            let header = ["Statistic", "Characters", "Words", "Sentences"].map(String::from).to_vec();
            out.push_str(&markdown_row(&header));
            out.push_str(&markdown_separator(header.len()));
            let rows: [(&str, fn(&crate::corpus::SummaryStats) -> String); 4] = [
                ("mean (sd)", |s| format!("{} ({})", format!("{:.2}", s.mean), format!("{:.2}", s.sd))),
                ("median", |s| format!("{:.2}", s.median)),
                ("min", |s| s.min.to_string()),
                ("max", |s| s.max.to_string()),
            ];
            for (label, extract) in rows {
                out.push_str(&markdown_row(&[
                    label.to_string(),
                    extract(&stats.characters),
                    extract(&stats.words),
                    extract(&stats.sentences),
                ]));
            }
            out.push('\n');
            out.push_str(&markdown_row(&["Lexical property".to_string(), "Value".to_string()]));
            out.push_str(&markdown_separator(2));
            out.push_str(&markdown_row(&["messages".to_string(), stats.n_messages.to_string()]));
            out.push_str(&markdown_row(&["unique tokens".to_string(), stats.unique_tokens.to_string()]));
            out.push_str(&markdown_row(&["total tokens".to_string(), stats.total_tokens.to_string()]));
            out.push_str(&markdown_row(&[
                "type-token ratio".to_string(),
                fmt3(stats.type_token_ratio),
            ]));
            out.push('\n');
            out.push_str(&markdown_row(&["Word".to_string(), "Count".to_string(), "Share".to_string()]));
            out.push_str(&markdown_separator(3));
            for word in &stats.top_words {
                out.push_str(&markdown_row(&[
                    word.word.clone(),
                    word.count.to_string(),
                    format!("{:.3}%", word.share * 100.0),
                ]));
            }
            Ok(out)
        }
        TableFormat::Csv => {
            let mut out = csv_line(&["field", "value"].map(String::from));
            out.push_str(&csv_line(&["n_messages".into(), stats.n_messages.to_string()]));
            for (name, summary) in [
                ("characters", &stats.characters),
                ("words", &stats.words),
                ("sentences", &stats.sentences),
            ] {
                out.push_str(&csv_line(&[format!("{name}_mean"), summary.mean.to_string()]));
                out.push_str(&csv_line(&[format!("{name}_sd"), summary.sd.to_string()]));
                out.push_str(&csv_line(&[format!("{name}_median"), summary.median.to_string()]));
                out.push_str(&csv_line(&[format!("{name}_min"), summary.min.to_string()]));
                out.push_str(&csv_line(&[format!("{name}_max"), summary.max.to_string()]));
            }
            out.push_str(&csv_line(&["unique_tokens".into(), stats.unique_tokens.to_string()]));
            out.push_str(&csv_line(&["total_tokens".into(), stats.total_tokens.to_string()]));
            out.push_str(&csv_line(&["type_token_ratio".into(), stats.type_token_ratio.to_string()]));
            for word in &stats.top_words {
                out.push_str(&csv_line(&[
                    format!("top_word_{}", word.word),
                    format!("{} ({})", word.count, word.share),
                ]));
            }
            Ok(out)
        }
    }
}

fn render_misclass(report: &ComparisonReport, format: TableFormat) -> Result<String, ReportError> {
    let blocks: Vec<(&str, &MisclassMatrix)> = report
        .backends
        .iter()
        .filter_map(|b| b.misclassification.as_ref().map(|m| (b.backend_id.as_str(), m)))
        .collect();
    if blocks.is_empty() {
        return Err(ReportError::MissingSection("misclass"));
    }
    match format {
        TableFormat::Json => {
            let value: Vec<serde_json::Value> = blocks
                .iter()
                .map(|(backend, m)| serde_json::json!({ "backend": backend, "matrix": m }))
                .collect();
            Ok(pretty(&value))
        }
        TableFormat::Markdown => {
            let mut out = String::new();
            for (backend, matrix) in &blocks {
                out.push_str(&format!(
                    "**{backend}** (n flagged = {}, diagonal errors = {})\n\n",
                    matrix.n_flagged,
                    matrix.diagonal_total()
                ));
                let mut header = vec!["true \\ predicted".to_string()];
                header.extend(ALL_CATEGORIES.iter().map(|c| c.to_string()));
                out.push_str(&markdown_row(&header));
                out.push_str(&markdown_separator(header.len()));
                for row_category in ALL_CATEGORIES {
                    let mut row = vec![row_category.to_string()];
                    for col_category in ALL_CATEGORIES {
                        row.push(matrix.counts[row_category.index()][col_category.index()].to_string());
                    }
                    out.push_str(&markdown_row(&row));
                }
                out.push('\n');
            }
            Ok(out)
        }
        TableFormat::Csv => {
            let mut out =
                csv_line(&["backend", "true_category", "predicted_category", "count"].map(String::from));
            for (backend, matrix) in &blocks {
                for row_category in ALL_CATEGORIES {
                    for col_category in ALL_CATEGORIES {
                        out.push_str(&csv_line(&[
                            backend.to_string(),
                            row_category.to_string(),
                            col_category.to_string(),
                            matrix.counts[row_category.index()][col_category.index()].to_string(),
                        ]));
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Emit the flat data behind one figure; `with_svg` additionally renders a
/// self-contained SVG chart.
pub fn emit_figure_data(
    report: &ComparisonReport,
    figure: FigureKind,
    with_svg: bool,
) -> Result<FigureData, ReportError> {
    match figure {
        FigureKind::SensSpecBars => {
            let mut rows = Vec::new();
            for backend in &report.backends {
                for (metric, estimate) in [
                    ("sensitivity", &backend.overall.sensitivity),
                    ("specificity", &backend.overall.specificity),
                ] {
                    if let Some(e) = estimate {
                        rows.push(svg::BarRow {
                            backend: backend.backend_id.clone(),
                            category: "all".to_string(),
                            metric: metric.to_string(),
                            point: e.point,
                            lower: e.lower,
                            upper: e.upper,
                        });
                    }
                }
                if let Some(flat) = &backend.per_category_flat {
                    for (category, set) in &flat.categories {
                        for (metric, estimate) in
                            [("sensitivity", &set.sensitivity), ("specificity", &set.specificity)]
                        {
                            if let Some(e) = estimate {
                                rows.push(svg::BarRow {
                                    backend: backend.backend_id.clone(),
                                    category: category.to_string(),
                                    metric: metric.to_string(),
                                    point: e.point,
                                    lower: e.lower,
                                    upper: e.upper,
                                });
                            }
                        }
                    }
                }
            }
            if rows.is_empty() {
                return Err(ReportError::MissingSection("overall"));
            }
            let mut csv =
                csv_line(&["backend", "category", "metric", "point", "lower", "upper"].map(String::from));
            for row in &rows {
                csv.push_str(&csv_line(&[
                    row.backend.clone(),
                    row.category.clone(),
                    row.metric.clone(),
                    row.point.to_string(),
                    row.lower.to_string(),
                    row.upper.to_string(),
                ]));
            }
            let svg = with_svg.then(|| svg::bars(&rows));
            Ok(FigureData { csv, svg })
        }
        FigureKind::PpvCurves => {
            if report.backends.iter().all(|b| b.ppv_curve.is_empty()) {
                return Err(ReportError::MissingSection("ppv_curve"));
            }
            let mut csv = csv_line(&["backend", "prevalence", "ppv"].map(String::from));
            for backend in &report.backends {
                for (prevalence, ppv) in &backend.ppv_curve {
                    csv.push_str(&csv_line(&[
                        backend.backend_id.clone(),
                        prevalence.to_string(),
                        ppv.to_string(),
                    ]));
                }
            }
            let svg = with_svg.then(|| {
                svg::curves(
                    report
                        .backends
                        .iter()
                        .filter(|b| !b.ppv_curve.is_empty())
                        .map(|b| (b.backend_id.as_str(), b.ppv_curve.as_slice())),
                )
            });
            Ok(FigureData { csv, svg })
        }
        FigureKind::MisclassHeatmap => {
            let matrix = report
                .backends
                .iter()
                .find_map(|b| b.misclassification.as_ref())
                .ok_or(ReportError::MissingSection("misclass"))?;
            let mut csv = csv_line(&["true_category", "predicted_category", "count"].map(String::from));
            for row_category in ALL_CATEGORIES {
                for col_category in ALL_CATEGORIES {
                    csv.push_str(&csv_line(&[
                        row_category.to_string(),
                        col_category.to_string(),
                        matrix.counts[row_category.index()][col_category.index()].to_string(),
                    ]));
                }
            }
            let svg = with_svg.then(|| svg::heatmap(matrix));
            Ok(FigureData { csv, svg })
        }
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("section serializes");
    out.push('\n');
    out
}

fn trim_float(x: f64) -> String {
    let s = format!("{x}");
    s
}
