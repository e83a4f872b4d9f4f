//! Standalone SVG 1.1 line and scatter plots.

use std::fmt::Write as _;
use std::io::Write;

use crate::io::IoError;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;
/// Longer line series are reduced to per-column min/max envelopes.
pub const MAX_POLYLINE_POINTS: usize = 4000;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesStyle {
    Line,
    Scatter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: SeriesStyle,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points, style: SeriesStyle::Line }
    }

    pub fn scatter(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points, style: SeriesStyle::Scatter }
    }
}

/// Text for the plot title, axis captions, and `<metadata>` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotLabels {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub metadata: Vec<String>,
    /// Fixed x-axis range. When set, a plot whose series are all empty
    /// still renders its axes.
    pub x_range: Option<(f64, f64)>,
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

fn extent(series: &[Series]) -> ((f64, f64), (f64, f64)) {
    let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite()) {
        xs = (xs.0.min(*x), xs.1.max(*x));
        ys = (ys.0.min(*y), ys.1.max(*y));
    }
    let widen = |(lo, hi): (f64, f64)| {
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
            (lo - pad, hi + pad)
        } else {
            (lo, hi)
        }
    };
    (widen(xs), widen(ys))
}

fn tick_label(v: f64, span: f64) -> String {
    let decimals = if span >= 100.0 { 0 } else { (2.0 - span.log10().floor()).clamp(0.0, 8.0) as usize };
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Keeps the first and last point plus the min and max of each of
/// `max_points / 2` equal-width index buckets, in index order.
fn decimate(points: &[(f64, f64)], max_points: usize) -> Vec<(f64, f64)> {
    if points.len() <= max_points {
        return points.to_vec();
    }
    let buckets = max_points / 2;
    let n = points.len();
    let mut out = Vec::with_capacity(max_points + 2);
    for b in 0..buckets {
        let lo = b * n / buckets;
        let hi = ((b + 1) * n / buckets).max(lo + 1);
        let slice = &points[lo..hi];
        let (imin, _) = slice.iter().enumerate().min_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).expect("non-empty");
        let (imax, _) = slice.iter().enumerate().max_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).expect("non-empty");
        let (first, second) = if imin <= imax { (imin, imax) } else { (imax, imin) };
        out.push(slice[first]);
        if second != first {
            out.push(slice[second]);
        }
    }
    if out.first() != points.first() {
        out.insert(0, points[0]);
    }
    if out.last() != points.last() {
        out.push(points[n - 1]);
    }
    out
}

/// Renders `series` as a standalone SVG document.
///
/// Line series become one `<polyline>` each; scatter series become one
/// `<g class="scatter">` group of circles. Axes carry tick labels and a
/// legend lists every series label. Output depends only on the inputs.
pub fn render_plot_svg(series: &[Series], labels: &PlotLabels) -> Result<String, IoError> {
    if labels.x_range.is_none() && series.iter().all(|s| s.points.is_empty()) {
        return Err(IoError::EmptyPlot);
    }
    let ((mut x0, mut x1), (y0, y1)) = extent(series);
    if let Some((lo, hi)) = labels.x_range.filter(|(lo, hi)| lo.is_finite() && hi.is_finite() && lo < hi) {
        (x0, x1) = (lo, hi);
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    if !labels.metadata.is_empty() {
        let _ = writeln!(w, "<metadata>");
        for m in &labels.metadata {
            let _ = writeln!(w, "{}", escape(m));
        }
        let _ = writeln!(w, "</metadata>");
    }
    let _ = writeln!(w, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if !labels.title.is_empty() {
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&labels.title)
        );
    }
    let _ = writeln!(w, r#"<g class="axes" stroke="black" stroke-width="1" fill="none">"#);
    let _ = writeln!(w, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/>"#);
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let px = LEFT + f * pw;
        let py = TOP + ph - f * ph;
        let _ = writeln!(w, r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(w, r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}"/>"#, LEFT - 5.0);
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, r#"<g class="tick-labels" font-family="sans-serif" font-size="11" fill="black">"#);
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + f * pw,
            TOP + ph + 18.0,
            tick_label(xv, x1 - x0)
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            TOP + ph - f * ph + 4.0,
            tick_label(yv, y1 - y0)
        );
    }
    let _ = writeln!(w, "</g>");
    if !labels.x_label.is_empty() {
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 10.0,
            escape(&labels.x_label)
        );
    }
    if !labels.y_label.is_empty() {
        let _ = writeln!(
            w,
            r#"<text x="20" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&labels.y_label)
        );
    }

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let finite: Vec<(f64, f64)> =
            s.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
        match s.style {
            SeriesStyle::Line => {
                let pts = decimate(&finite, MAX_POLYLINE_POINTS);
                let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let _ = writeln!(
                    w,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                    coords.join(" ")
                );
            }
            SeriesStyle::Scatter => {
                let _ = writeln!(w, r#"<g class="scatter" fill="{color}">"#);
                for &(x, y) in &finite {
                    let _ = writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5"/>"#, sx(x), sy(y));
                }
                let _ = writeln!(w, "</g>");
            }
        }
    }

    let _ = writeln!(w, r#"<g class="legend" font-family="sans-serif" font-size="12">"#);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let ly = TOP + 10.0 + i as f64 * 18.0;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(w, r#"<rect x="{lx:.2}" y="{:.2}" width="12" height="4" fill="{color}"/>"#, ly - 4.0);
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 18.0, ly + 2.0, escape(&s.label));
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

/// Renders and writes the plot to `out`.
pub fn write_plot_svg<W: Write>(series: &[Series], labels: &PlotLabels, mut out: W) -> Result<(), IoError> {
    let svg = render_plot_svg(series, labels)?;
    out.write_all(svg.as_bytes())?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_make_one_polyline() {
        let svg = render_plot_svg(&[Series::line("x", vec![(0.0, 0.0), (1.0, 1.0)])], &PlotLabels::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(pts.split(' ').count(), 2);
        assert!(svg.contains(">x</text>"));
    }

    #[test]
    fn deterministic_bytes() {
        let s = vec![Series::line("a", (0..500).map(|i| (i as f64, (i as f64 * 0.1).sin())).collect())];
        let l = PlotLabels { title: "t".into(), metadata: vec!["cmd --flag".into()], ..Default::default() };
        assert_eq!(render_plot_svg(&s, &l).unwrap(), render_plot_svg(&s, &l).unwrap());
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(render_plot_svg(&[], &PlotLabels::default()), Err(IoError::EmptyPlot)));
        assert!(matches!(
            render_plot_svg(&[Series::line("a", vec![])], &PlotLabels::default()),
            Err(IoError::EmptyPlot)
        ));
    }

    #[test]
    fn fixed_range_allows_empty_scatter() {
        let l = PlotLabels { x_range: Some((0.01, 1.0)), ..Default::default() };
        let svg = render_plot_svg(&[Series::scatter("x", vec![])], &l).unwrap();
        assert_eq!(svg.matches(r#"<g class="scatter""#).count(), 1);
        assert_eq!(svg.matches("<circle").count(), 0);
        assert!(svg.contains(">0.010</text>") && svg.contains(">1.000</text>"));
    }

    #[test]
    fn scatter_and_legend() {
        let s = vec![
            Series::scatter("peaks", vec![(0.1, 1.0), (0.2, 2.0), (0.2, 2.5)]),
            Series::line("ref", vec![(0.1, 0.0), (0.2, 3.0)]),
        ];
        let svg = render_plot_svg(&s, &PlotLabels::default()).unwrap();
        assert_eq!(svg.matches(r#"<g class="scatter""#).count(), 1);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains(">peaks</text>") && svg.contains(">ref</text>"));
    }

    #[test]
    fn metadata_is_escaped() {
        let l = PlotLabels { metadata: vec!["a <b> & --c".into()], ..Default::default() };
        let svg = render_plot_svg(&[Series::line("a", vec![(0.0, 1.0)])], &l).unwrap();
        assert!(svg.contains("a &lt;b&gt; &amp; --c"));
    }

    #[test]
    fn decimation_bounds_size_and_keeps_extremes() {
        let pts: Vec<(f64, f64)> = (0..100_000).map(|i| (i as f64, if i == 54_321 { 9.0 } else { 0.0 })).collect();
        let d = decimate(&pts, MAX_POLYLINE_POINTS);
        assert!(d.len() <= MAX_POLYLINE_POINTS + 2);
        assert!(d.contains(&(54_321.0, 9.0)));
        assert_eq!(d.first(), pts.first());
        assert_eq!(d.last(), pts.last());
        assert!(d.windows(2).all(|w| w[0].0 < w[1].0));
    }
}
