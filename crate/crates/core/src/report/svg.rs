//! Minimal dependency-free SVG charts. Plots are conveniences; the CSV next
//! to them is the contract. Output bytes are deterministic for fixed input.

use std::fmt::Write;

use crate::category::ALL_CATEGORIES;
use crate::metrics::MisclassMatrix;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

pub(crate) struct BarRow {
    pub backend: String,
    pub category: String,
    pub metric: String,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

fn open(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width} {height}\" \
         font-family=\"sans-serif\" font-size=\"10\">"
    );
}

fn color(index: usize) -> &'static str {
    const PALETTE: [&str; 6] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2"];
    PALETTE[index % PALETTE.len()]
}

/// Grouped bars with CI whiskers, one group per (category, metric), one bar
/// per backend. Degenerate whiskers (upper below lower) are clamped to
/// zero width; a comment in the output notes each clamp.
pub(crate) fn bars(rows: &[BarRow]) -> String {
    let mut backends: Vec<&str> = rows.iter().map(|r| r.backend.as_str()).collect();
    backends.sort_unstable();
    backends.dedup();
    let mut groups: Vec<(String, String)> = rows
        .iter()
        .map(|r| (r.category.clone(), r.metric.clone()))
        .collect();
    groups.sort();
    groups.dedup();

    let plot_width = WIDTH - 2.0 * MARGIN;
    let plot_height = HEIGHT - 2.0 * MARGIN;
    let group_width = plot_width / groups.len() as f64;
    let bar_width = (group_width * 0.8) / backends.len() as f64;
    let y = |v: f64| MARGIN + plot_height * (1.0 - v.clamp(0.0, 1.0));

    let mut out = String::new();
    open(&mut out, WIDTH, HEIGHT);
    // axes
    let _ = writeln!(
        out,
        "<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\
         <line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for tick in 0..=5 {
        let value = tick as f64 / 5.0;
        let ty = y(value);
        let _ = writeln!(
            out,
            "<text x=\"{x}\" y=\"{ty}\" text-anchor=\"end\">{value:.1}</text>",
            x = MARGIN - 6.0
        );
    }
    for (group_index, (category, metric)) in groups.iter().enumerate() {
        let group_x = MARGIN + group_width * group_index as f64 + group_width * 0.1;
        let label_x = group_x + group_width * 0.4;
        let _ = writeln!(
            out,
            "<text x=\"{label_x}\" y=\"{ly}\" text-anchor=\"middle\" transform=\"rotate(40 {label_x} {ly})\">{category}/{metric}</text>",
            ly = HEIGHT - MARGIN + 14.0
        );
        for (backend_index, backend) in backends.iter().enumerate() {
            let Some(row) = rows.iter().find(|r| {
                r.backend == *backend && r.category == *category && r.metric == *metric
            }) else {
                continue;
            };
            let x = group_x + bar_width * backend_index as f64;
            let top = y(row.point);
            let _ = writeln!(
                out,
                "<rect x=\"{x:.2}\" y=\"{top:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"{fill}\"/>",
                w = bar_width * 0.9,
                h = (HEIGHT - MARGIN) - top,
                fill = color(backend_index)
            );
            let center = x + bar_width * 0.45;
            let (lower, upper) = if row.upper < row.lower {
                // degenerate interval: clamp whisker to zero width
                let _ = writeln!(out, "<!-- whisker clamped for {}/{} -->", row.backend, row.category);
                (row.point, row.point)
            } else {
                (row.lower, row.upper)
            };
            let _ = writeln!(
                out,
                "<line x1=\"{center:.2}\" y1=\"{y1:.2}\" x2=\"{center:.2}\" y2=\"{y2:.2}\" stroke=\"black\"/>",
                y1 = y(lower),
                y2 = y(upper)
            );
        }
    }
    // legend
    for (backend_index, backend) in backends.iter().enumerate() {
        let lx = MARGIN + 110.0 * backend_index as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{lx}\" y=\"8\" width=\"10\" height=\"10\" fill=\"{fill}\"/>\
             <text x=\"{tx}\" y=\"17\">{backend}</text>",
            fill = color(backend_index),
            tx = lx + 14.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// One polyline per backend over (prevalence, ppv) points.
pub(crate) fn curves<'a, I>(series: I) -> String
where
    I: Iterator<Item = (&'a str, &'a [(f64, f64)])>,
{
    let series: Vec<(&str, &[(f64, f64)])> = series.collect();
    let max_x = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|(x, _)| *x))
        .fold(f64::MIN, f64::max)
        .max(1e-9);
    let plot_width = WIDTH - 2.0 * MARGIN;
    let plot_height = HEIGHT - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + plot_width * (x / max_x);
    let sy = |v: f64| MARGIN + plot_height * (1.0 - v.clamp(0.0, 1.0));

    let mut out = String::new();
    open(&mut out, WIDTH, HEIGHT);
    let _ = writeln!(
        out,
        "<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\
         <line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for (index, (backend, points)) in series.iter().enumerate() {
        let path: Vec<String> =
            points.iter().map(|(x, v)| format!("{:.2},{:.2}", sx(*x), sy(*v))).collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\" points=\"{points}\"/>",
            stroke = color(index),
            points = path.join(" ")
        );
        let _ = writeln!(
            out,
            "<rect x=\"{lx}\" y=\"8\" width=\"10\" height=\"10\" fill=\"{fill}\"/>\
             <text x=\"{tx}\" y=\"17\">{backend}</text>",
            lx = MARGIN + 130.0 * index as f64,
            fill = color(index),
            tx = MARGIN + 130.0 * index as f64 + 14.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// 8x8 shaded grid of the misclassification matrix.
pub(crate) fn heatmap(matrix: &MisclassMatrix) -> String {
    let n = ALL_CATEGORIES.len();
    let cell = 34.0;
    let label_pad = 150.0;
    let width = label_pad + cell * n as f64 + MARGIN;
    let height = label_pad + cell * n as f64 + MARGIN;
    let max = matrix
        .counts
        .iter()
        .flat_map(|row| row.iter())
        .copied()
        .max()
        .unwrap_or(0)
        .max(1) as f64;

    let mut out = String::new();
    open(&mut out, width, height);
    for (row_index, row_category) in ALL_CATEGORIES.iter().enumerate() {
        let ry = label_pad + cell * row_index as f64;
        let _ = writeln!(
            out,
            "<text x=\"{x}\" y=\"{y:.2}\" text-anchor=\"end\">{row_category}</text>",
            x = label_pad - 6.0,
            y = ry + cell * 0.6
        );
        for (col_index, col_category) in ALL_CATEGORIES.iter().enumerate() {
            let cx = label_pad + cell * col_index as f64;
            if row_index == 0 {
                let _ = writeln!(
                    out,
                    "<text x=\"{tx:.2}\" y=\"{ty}\" text-anchor=\"start\" transform=\"rotate(-60 {tx:.2} {ty})\">{col_category}</text>",
                    tx = cx + cell * 0.5,
                    ty = label_pad - 8.0
                );
            }
            let value = matrix.counts[row_index][col_index];
            let intensity = 1.0 - (value as f64 / max) * 0.85;
            let shade = (intensity * 255.0).round() as u8;
            let _ = writeln!(
                out,
                "<rect x=\"{cx:.2}\" y=\"{ry:.2}\" width=\"{cell}\" height=\"{cell}\" \
                 fill=\"rgb(255,{shade},{shade})\" stroke=\"#ccc\"/>\
                 <text x=\"{vx:.2}\" y=\"{vy:.2}\" text-anchor=\"middle\">{value}</text>",
                vx = cx + cell / 2.0,
                vy = ry + cell * 0.6
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
