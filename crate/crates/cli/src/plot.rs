//! Minimal deterministic SVG 1.1 line plots. Coordinates are printed with
//! fixed precision so identical inputs give identical bytes.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("no plottable points")]
    EmptySeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Linear,
    LogLog,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlotSpec<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub style: Style,
    /// Log-log reference line of this slope through the first point.
    pub guide_slope: Option<f64>,
    /// Written into a leading comment.
    pub provenance: &'a str,
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 560.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 380.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64, style: Style) -> String {
    match style {
        Style::LogLog => format!("1e{}", v.round() as i64),
        Style::Linear => {
            let a = v.abs();
            if a != 0.0 && !(1e-3..1e4).contains(&a) {
                format!("{v:.2e}")
            } else {
                let s = format!("{v:.4}");
                let s = s.trim_end_matches('0').trim_end_matches('.');
                if s == "-0" { "0".into() } else { s.to_string() }
            }
        }
    }
}

fn transform(style: Style, (x, y): (f64, f64)) -> Option<(f64, f64)> {
    let (x, y) = match style {
        Style::Linear => (x, y),
        Style::LogLog => {
            if x <= 0.0 || y <= 0.0 {
                return None;
            }
            (x.log10(), y.log10())
        }
    };
    (x.is_finite() && y.is_finite()).then_some((x, y))
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn ticks(lo: f64, hi: f64, style: Style) -> Vec<f64> {
    if style == Style::LogLog {
        let decades: Vec<f64> = ((lo.ceil() as i64)..=(hi.floor() as i64)).map(|d| d as f64).collect();
        if decades.len() >= 2 {
            return decades;
        }
    }
    (0..5).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
}

pub fn emit_plot(series: &[Series], spec: &PlotSpec<'_>) -> Result<String, PlotError> {
    let data: Vec<(&str, Vec<(f64, f64)>)> = series
        .iter()
        .map(|s| (s.label.as_str(), s.points.iter().filter_map(|&p| transform(spec.style, p)).collect()))
        .collect();
    let all: Vec<(f64, f64)> = data.iter().flat_map(|d| d.1.iter().cloned()).collect();
    if all.is_empty() {
        return Err(PlotError::EmptySeries);
    }
    let (x0, x1) = padded(
        all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = padded(
        all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        all.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    );
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * (RIGHT - LEFT);
    let sy = |y: f64| BOTTOM - (y - y0) / (y1 - y0) * (BOTTOM - TOP);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, "<!-- {} -->", escape(spec.provenance).replace("--", "- -"));
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="area"><rect x="{LEFT}" y="{TOP}" width="{}" height="{}"/></clipPath></defs>"#,
        RIGHT - LEFT,
        BOTTOM - TOP
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        0.5 * (LEFT + RIGHT),
        escape(spec.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        RIGHT - LEFT,
        BOTTOM - TOP
    );
    for t in ticks(x0, x1, spec.style) {
        let x = sx(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{BOTTOM}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            BOTTOM + 5.0,
            BOTTOM + 18.0,
            tick_label(t, spec.style)
        );
    }
    for t in ticks(y0, y1, spec.style) {
        let y = sy(t);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            tick_label(t, spec.style)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        0.5 * (LEFT + RIGHT),
        HEIGHT - 20.0,
        escape(spec.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        0.5 * (TOP + BOTTOM),
        0.5 * (TOP + BOTTOM),
        escape(spec.y_label)
    );

    let mut legend: Vec<(String, &str, bool)> = Vec::new();
    for (i, (label, pts)) in data.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline clip-path="url(#area)" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        legend.push((label.to_string(), color, false));
    }
    if let (Style::LogLog, Some(slope)) = (spec.style, spec.guide_slope) {
        let (gx, gy) = data.iter().find_map(|d| d.1.first().cloned()).expect("nonempty");
        let y_at = |x: f64| gy + slope * (x - gx);
        let _ = writeln!(
            s,
            r##"<line clip-path="url(#area)" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555555" stroke-dasharray="6,4"/>"##,
            sx(x0),
            sy(y_at(x0)),
            sx(x1),
            sy(y_at(x1))
        );
        let label = if slope == -0.5 { "slope -1/2".to_string() } else { format!("slope {slope}") };
        legend.push((label, "#555555", true));
    }
    for (i, (label, color, dashed)) in legend.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let dash = if *dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="1.5"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
            RIGHT + 15.0,
            RIGHT + 40.0,
            RIGHT + 46.0,
            y + 4.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
