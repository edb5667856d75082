//! Minimal hand-written SVG so plot bytes depend only on the input data.

use std::fmt::Write;

use super::InclusionEntry;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<path d="M{m:.1} {t:.1} L{m:.1} {b:.1} L{r:.1} {b:.1}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
}

/// Bar chart of inclusion probabilities: red for positive, blue for negative
/// and grey for zero conditional mean; dashed line at the threshold.
pub fn inclusion_svg(entries: &[&InclusionEntry], threshold: f64, series: usize) -> String {
    let mut out = String::new();
    header(&mut out, &format!("Inclusion probabilities, series {series}"));
    axes(&mut out);
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let slot = plot_w / entries.len().max(1) as f64;
    for (i, e) in entries.iter().enumerate() {
        let h = e.probability * plot_h;
        let x = MARGIN + i as f64 * slot + 0.15 * slot;
        let y = HEIGHT - MARGIN - h;
        let color = match e.sign {
            1 => "red",
            -1 => "blue",
            _ => "grey",
        };
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{h:.2}" fill="{color}"/>"#,
            0.7 * slot
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            x + 0.35 * slot,
            HEIGHT - MARGIN + 14.0,
            escape(&e.name)
        );
    }
    let ty = HEIGHT - MARGIN - threshold * plot_h;
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN:.1}" y1="{ty:.2}" x2="{:.1}" y2="{ty:.2}" stroke="black" stroke-dasharray="4 3"/>"#,
        WIDTH - MARGIN
    );
    for tick in [0.0, 0.5, 1.0] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{tick:.1}</text>"#,
            MARGIN - 4.0,
            HEIGHT - MARGIN - tick * plot_h + 3.0
        );
    }
    out.push_str("</svg>\n");
    out
}

const PALETTE: [&str; 5] = ["black", "#d62728", "#1f77b4", "#2ca02c", "#9467bd"];

/// Line plot of several equally indexed paths on one shared vertical scale.
pub fn series_svg(lines: &[(String, Vec<f64>)], series: usize) -> String {
    let mut out = String::new();
    header(&mut out, &format!("Series {series}"));
    axes(&mut out);
    let finite = lines.iter().flat_map(|(_, v)| v.iter().copied()).filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (lo.min(0.0) - 1.0, lo.max(0.0) + 1.0) };
    let len = lines.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let sx = |t: usize| MARGIN + if len > 1 { t as f64 / (len - 1) as f64 * plot_w } else { 0.0 };
    let sy = |v: f64| HEIGHT - MARGIN - (v - lo) / (hi - lo) * plot_h;
    for (k, (name, values)) in lines.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for (t, v) in values.iter().enumerate() {
            if !v.is_finite() {
                pen_down = false;
                continue;
            }
            let _ = write!(d, "{}{:.2} {:.2} ", if pen_down { "L" } else { "M" }, sx(t), sy(*v));
            pen_down = true;
        }
        let _ = writeln!(out, r#"<path d="{}" stroke="{color}" fill="none" stroke-width="1"/>"#, d.trim_end());
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 90.0,
            MARGIN + 14.0 * (k as f64 + 1.0),
            escape(name)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{hi:.3}</text>"#,
        MARGIN - 4.0,
        MARGIN + 3.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{lo:.3}</text>"#,
        MARGIN - 4.0,
        HEIGHT - MARGIN + 3.0
    );
    out.push_str("</svg>\n");
    out
}
