//! Minimal SVG line charts for a report: `log₁₀ dₙ`, the ratios, and the
//! α envelope per sampled `T`.

use std::fmt::Write as _;

use crate::report::Report;

const W: f64 = 360.0;
const H: f64 = 240.0;
const PAD: f64 = 36.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn panel(out: &mut String, x_off: f64, title: &str, series: &[Series]) {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let _ = writeln!(out, r#"<g transform="translate({x_off},0)">"#);
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white" stroke="gray"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="16" font-size="12" text-anchor="middle">{title}</text>"#, W / 2.0);
    if !x0.is_finite() {
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">no data</text></g>"#, W / 2.0, H / 2.0);
        return;
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let _ = writeln!(
        out,
        r#"<text x="4" y="{:.1}" font-size="9">{:.3}</text><text x="4" y="{:.1}" font-size="9">{:.3}</text>"#,
        sy(y1) + 3.0,
        y1,
        sy(y0) + 3.0,
        y0
    );
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        for p in &path {
            let (x, y) = p.split_once(',').unwrap_or(("0", "0"));
            let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{color}"/>"#);
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" font-size="10" fill="{color}">{}</text>"#,
            W - PAD - 70.0,
            30.0 + 12.0 * k as f64,
            s.label
        );
    }
    let _ = writeln!(out, "</g>");
}

pub fn render(report: &Report) -> String {
    let mut panels: Vec<(String, Vec<Series>)> = Vec::new();
    if let Some(t) = &report.trace {
        let d = t.records.iter().map(|r| (r.n as f64, r.d.log10())).collect();
        panels.push(("log10 d_n".into(), vec![Series { label: "d_n".into(), points: d }]));
        let q = t.records.iter().filter_map(|r| r.ratio.map(|q| (r.n as f64, q))).collect();
        panels.push(("ratio_n".into(), vec![Series { label: "ratio".into(), points: q }]));
        let env = t
            .alphas
            .iter()
            .enumerate()
            .map(|(j, set)| Series {
                label: format!("T{j}"),
                points: set.records.iter().map(|a| (a.n as f64, a.envelope_bound.max(1e-300).log10())).collect(),
            })
            .collect();
        panels.push(("log10 alpha envelope".into(), env));
    } else if let Some(s) = &report.solve {
        let y = s.solution.y.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect();
        panels.push(("minimal vector y".into(), vec![Series { label: "y".into(), points: y }]));
    }
    let width = W * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{H}" font-family="sans-serif">"#);
    for (i, (title, series)) in panels.iter().enumerate() {
        panel(&mut out, W * i as f64, title, series);
    }
    let _ = writeln!(out, "</svg>");
    out
}
