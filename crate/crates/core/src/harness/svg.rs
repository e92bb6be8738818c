//! Minimal self-contained SVG line charts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 560.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 400.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Symmetric error bar half-heights, one per point.
    pub errors: Option<Vec<f64>>,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
            errors: None,
            dashed: false,
        }
    }

    pub fn with_errors(mut self, errors: Vec<f64>) -> Self {
        self.errors = Some(errors);
        self
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Axes {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = (0.1 * lo.abs()).max(0.5);
        (lo - pad, hi + pad)
    }
}

/// Tick positions on a 1-2-5 step inside `[lo, hi]`, and decimals to print.
fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), decimals)
}

/// Renders the chart; identical input gives identical bytes.
pub fn render_svg(series: &[Series], axes: &Axes) -> Result<String> {
    if series.is_empty() {
        return Err(Error::Empty("no series to plot".into()));
    }
    let mut sorted = Vec::with_capacity(series.len());
    for s in series {
        if s.points.is_empty() {
            return Err(Error::Empty(format!("series {:?} has no points", s.label)));
        }
        if let Some(e) = &s.errors {
            if e.len() != s.points.len() {
                return Err(Error::LengthMismatch {
                    expected: s.points.len(),
                    actual: e.len(),
                });
            }
        }
        if s.points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Domain(format!("series {:?} has non-finite values", s.label)));
        }
        let mut pts: Vec<(f64, f64, f64)> = s
            .points
            .iter()
            .enumerate()
            .map(|(k, &(x, y))| (x, y, s.errors.as_ref().map_or(0.0, |e| e[k].abs())))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        sorted.push(pts);
    }

    let all = || sorted.iter().flatten();
    let (x_lo, x_hi) = padded_range(
        all().map(|p| p.0).fold(f64::INFINITY, f64::min),
        all().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let (y_lo, y_hi) = padded_range(
        all().map(|p| p.1 - p.2).fold(f64::INFINITY, f64::min),
        all().map(|p| p.1 + p.2).fold(f64::NEG_INFINITY, f64::max),
    );
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * (RIGHT - LEFT);
    let sy = |y: f64| BOTTOM - (y - y_lo) / (y_hi - y_lo) * (BOTTOM - TOP);

    let mut out = String::new();
    let w = &mut out;
    // writing into a String cannot fail
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="28" text-anchor="middle" font-size="15">{}</text>"#,
        (LEFT + RIGHT) / 2.0,
        escape(&axes.title)
    );
    let _ = writeln!(
        w,
        r#"<g class="axes" stroke="black" fill="none"><line x1="{LEFT}" y1="{BOTTOM}" x2="{RIGHT}" y2="{BOTTOM}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{BOTTOM}"/></g>"#
    );
    let (xt, xd) = ticks(x_lo, x_hi);
    for t in xt {
        let x = sx(t);
        let _ = writeln!(
            w,
            r#"<line x1="{x:.2}" y1="{BOTTOM}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.xd$}</text>"#,
            BOTTOM + 5.0,
            BOTTOM + 20.0
        );
    }
    let (yt, yd) = ticks(y_lo, y_hi);
    for t in yt {
        let y = sy(t);
        let _ = writeln!(
            w,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{t:.yd$}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 42.0,
        escape(&axes.x_label)
    );
    let _ = writeln!(
        w,
        r#"<text x="22" y="{:.2}" text-anchor="middle" transform="rotate(-90 22 {:.2})">{}</text>"#,
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0,
        escape(&axes.y_label)
    );

    for (k, (s, pts)) in series.iter().zip(&sorted).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(w, r#"<g class="series" stroke="{color}" fill="{color}">"#);
        if pts.len() > 1 {
            let coords: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
            let _ = writeln!(
                w,
                r#"<polyline fill="none" stroke-width="1.5"{dash} points="{}"/>"#,
                coords.join(" ")
            );
        }
        for &(x, y, e) in pts {
            if e > 0.0 {
                let _ = writeln!(
                    w,
                    r#"<line class="errorbar" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
                    sx(x),
                    sy(y - e),
                    sx(x),
                    sy(y + e)
                );
            }
            let _ = writeln!(w, r#"<circle class="mark" cx="{:.2}" cy="{:.2}" r="3"/>"#, sx(x), sy(y));
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let _ = writeln!(
            w,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}" stroke="none" fill="black">{}</text>"#,
            RIGHT + 20.0,
            RIGHT + 44.0,
            RIGHT + 50.0,
            ly + 4.0,
            escape(&s.label)
        );
        let _ = writeln!(w, "</g>");
    }
    let _ = writeln!(w, "</svg>");
    Ok(out)
}

pub fn emit_plot_svg(series: &[Series], axes: &Axes, path: &Path) -> Result<()> {
    let svg = render_svg(series, axes)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_has_one_mark() {
        let svg = render_svg(&[Series::new("a", vec![(1.0, 2.0)])], &Axes::default()).unwrap();
        assert_eq!(svg.matches(r#"class="mark""#).count(), 1);
        assert!(!svg.contains("<polyline"));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn polyline_x_strictly_increasing() {
        let pts: Vec<(f64, f64)> = (0..10).map(|k| (k as f64 * 0.3, (k as f64).sqrt())).collect();
        let svg = render_svg(&[Series::new("m", pts)], &Axes::default()).unwrap();
        let line = svg.lines().find(|l| l.contains("<polyline")).unwrap();
        let attr = line.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        let xs: Vec<f64> = attr.split(' ').map(|p| p.split(',').next().unwrap().parse().unwrap()).collect();
        assert_eq!(xs.len(), 10);
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(render_svg(&[], &Axes::default()).is_err());
        assert!(render_svg(&[Series::new("e", vec![])], &Axes::default()).is_err());
    }

    #[test]
    fn labels_are_escaped() {
        let axes = Axes {
            title: "a < b & c".into(),
            ..Axes::default()
        };
        let svg = render_svg(&[Series::new("\"q\"", vec![(0.0, 0.0)])], &axes).unwrap();
        assert!(svg.contains("a &lt; b &amp; c"));
        assert!(svg.contains("&quot;q&quot;"));
    }

    #[test]
    fn tick_steps() {
        let (t, d) = ticks(0.0, 1.0);
        assert_eq!(t.len(), 6);
        assert_eq!(d, 1);
        let (t, d) = ticks(-30.0, 70.0);
        assert_eq!(t, vec![-20.0, 0.0, 20.0, 40.0, 60.0]);
        assert_eq!(d, 0);
    }
}
