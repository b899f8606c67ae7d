//! Minimal SVG plots: line charts and a magnitude heatmap.

use std::fmt::Write as _;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 40.0;
const MAX_POINTS: usize = 2000;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn header(out: &mut String, title: &str) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{MARGIN}" y="24" font-family="sans-serif" font-size="14">{}</text>"#,
        escape(title)
    )
    .unwrap();
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One polyline per series over a shared index axis.
pub fn line_chart(title: &str, series: &[(&str, &[f64])]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let finite = series.iter().flat_map(|(_, v)| v.iter()).filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo < hi { (lo, hi) } else { (lo - 1.0, lo + 1.0) };
    let len = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0).max(2);
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#888"/>"##
    )
    .unwrap();
    for (k, (name, values)) in series.iter().enumerate() {
        let step = values.len().div_ceil(MAX_POINTS).max(1);
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .step_by(step)
            .filter(|(_, v)| v.is_finite())
            .map(|(i, v)| {
                let x = MARGIN + plot_w * i as f64 / (len - 1) as f64;
                let y = MARGIN + plot_h * (hi - v) / (hi - lo);
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let color = COLORS[k % COLORS.len()];
        writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#,
            points.join(" ")
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 120.0,
            MARGIN + 16.0 * (k as f64 + 1.0),
            escape(name)
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="4" y="{}" font-family="sans-serif" font-size="11">{hi:.3}</text>"#,
        MARGIN + 4.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="4" y="{}" font-family="sans-serif" font-size="11">{lo:.3}</text>"#,
        HEIGHT - MARGIN
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}

/// Log-magnitude heatmap of a `frames × bins` matrix, time left to right and
/// frequency bottom to top.
pub fn heatmap(title: &str, magnitudes: &[Vec<f64>]) -> String {
    const MAX_COLS: usize = 400;
    let mut out = String::new();
    header(&mut out, title);
    let frames = magnitudes.len();
    let bins = magnitudes.first().map_or(0, Vec::len);
    if frames == 0 || bins == 0 {
        out.push_str("</svg>\n");
        return out;
    }
    let group = frames.div_ceil(MAX_COLS);
    let cols: Vec<Vec<f64>> = magnitudes
        .chunks(group)
        .map(|chunk| {
            (0..bins)
                .map(|b| chunk.iter().map(|f| f[b]).sum::<f64>() / chunk.len() as f64)
                .map(|m| (m + 1e-12).log10())
                .collect()
        })
        .collect();
    let hi = cols.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = hi - 4.0;
    let cw = (WIDTH - 2.0 * MARGIN) / cols.len() as f64;
    let ch = (HEIGHT - 2.0 * MARGIN) / bins as f64;
    for (i, col) in cols.iter().enumerate() {
        for (b, &v) in col.iter().enumerate() {
            let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
            let shade = (255.0 * (1.0 - t)).round() as u8;
            writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({shade},{shade},255)"/>"#,
                MARGIN + i as f64 * cw,
                HEIGHT - MARGIN - (b as f64 + 1.0) * ch,
                cw + 0.05,
                ch + 0.05
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}
