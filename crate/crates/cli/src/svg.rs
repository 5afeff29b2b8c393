//! Minimal SVG line plots of report series.

use std::collections::BTreeMap;
use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 48.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One polyline per series on shared axes; the data bounds are printed in
/// the corners so the plot stays readable without tick marks.
pub fn plot(title: &str, series: &BTreeMap<String, Vec<[f64; 2]>>) -> String {
    let pts = series.values().flatten().filter(|p| p[0].is_finite() && p[1].is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{PAD}" y="24" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        out,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    if !x0.is_finite() {
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">no series</text>"#, W / 2.0 - 30.0, H / 2.0);
        out.push_str("</svg>\n");
        return out;
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    for (i, (name, data)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = data
            .iter()
            .filter(|p| p[0].is_finite() && p[1].is_finite())
            .map(|p| format!("{:.2},{:.2}", sx(p[0]), sy(p[1])))
            .collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        if i < 12 {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
                W - PAD - 150.0,
                PAD + 14.0 + 13.0 * i as f64,
                escape(name)
            );
        }
    }
    let label = |v: f64| format!("{v:.6e}");
    let _ = writeln!(out, r#"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="10">{}</text>"#, H - PAD + 14.0, label(x0));
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#, W - PAD, H - PAD + 14.0, label(x1));
    let _ = writeln!(out, r#"<text x="4" y="{}" font-family="sans-serif" font-size="10">{}</text>"#, H - PAD, label(y0));
    let _ = writeln!(out, r#"<text x="4" y="{}" font-family="sans-serif" font-size="10">{}</text>"#, PAD + 4.0, label(y1));
    out.push_str("</svg>\n");
    out
}
