//! Static SVG line plots of spectrum and rate curves.

use std::fmt::Write;

use ergolab::curve::{read_csv, Curve};

use crate::error::{LabError, LabResult};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;
const TICKS: usize = 5;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    pub y_label: String,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            title: String::new(),
            y_label: "value".into(),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn extent(vals: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    if hi - lo < 1e-12 {
        let pad = lo.abs().max(1.0) * 0.05;
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

/// Renders curves into one SVG document; output depends only on the input.
pub fn emit_plot(curves: &[Curve], style: &PlotStyle) -> LabResult<String> {
    if curves.is_empty() || curves.iter().all(|c| c.points.is_empty()) {
        return Err(LabError::SchemaMismatch("no curve points to plot".into()));
    }
    let xs = curves.iter().flat_map(|c| c.points.iter().map(|p| p.x));
    let ys = curves.iter().flat_map(|c| c.points.iter().map(|p| p.value));
    let ((x0, x1), (y0, y1)) = match (extent(xs), extent(ys)) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(LabError::SchemaMismatch("curves have no finite points".into())),
    };
    let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let w = &mut svg;
    // writing into a String cannot fail
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if !style.title.is_empty() {
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            MARGIN_LEFT + pw / 2.0,
            escape(&style.title)
        );
    }
    let _ = writeln!(
        w,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let bottom = MARGIN_TOP + ph;
        let _ = writeln!(
            w,
            r#"<line x1="{px:.2}" y1="{bottom}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 19.0,
            tick_label(xv)
        );
        let _ = writeln!(
            w,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{MARGIN_LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(&curves[0].abscissa)
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        MARGIN_TOP + ph / 2.0,
        MARGIN_TOP + ph / 2.0,
        escape(&style.y_label)
    );
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = c
            .points
            .iter()
            .filter(|p| p.x.is_finite() && p.value.is_finite())
            .map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.value)))
            .collect();
        let _ = writeln!(
            w,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 12.0;
        let _ = writeln!(
            w,
            r#"<g class="legend"><line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(&c.method)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Reads a curve CSV and renders it.
pub fn plot_csv(text: &str, style: &PlotStyle) -> LabResult<String> {
    let curves = read_csv(text).map_err(|e| LabError::SchemaMismatch(e.to_string()))?;
    emit_plot(&curves, style)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parabola(method: &str) -> Curve {
        let mut c = Curve::new("a", method, (0.0, 1.0));
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            c.push(x, x * (1.0 - x), 0.0);
        }
        c
    }

    #[test]
    fn deterministic_with_legend() {
        let curves = [parabola("legendre"), parabola("oracle")];
        let a = emit_plot(&curves, &PlotStyle::default()).unwrap();
        let b = emit_plot(&curves, &PlotStyle::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matches(r#"class="legend""#).count(), 2);
        assert!(a.contains(">oracle<") && a.contains("<polyline"));
    }

    #[test]
    fn flat_curve_still_renders() {
        let mut c = Curve::new("s", "rate", (0.0, 1.0));
        c.push(0.0, 1.0, 0.0);
        c.push(1.0, 1.0, 0.0);
        assert!(emit_plot(&[c], &PlotStyle::default()).is_ok());
    }

    #[test]
    fn empty_input_is_a_schema_mismatch() {
        assert!(matches!(plot_csv("", &PlotStyle::default()), Err(LabError::SchemaMismatch(_))));
        assert!(matches!(
            plot_csv("a,value,method,residual\n", &PlotStyle::default()),
            Err(LabError::SchemaMismatch(_))
        ));
        assert!(matches!(plot_csv("x,y\n1,2\n", &PlotStyle::default()), Err(LabError::SchemaMismatch(_))));
    }
}
