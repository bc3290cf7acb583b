//! Minimal SVG rendering: polyline trend charts and point-plus-interval
//! coefficient charts. Pure string assembly, deterministic bytes.

use std::fmt::Write as _;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 42.0;
const MARGIN_B: f64 = 56.0;

const PALETTE: [&str; 8] = [
    "#1f6fb2", "#d1495b", "#3a7d44", "#8667a8", "#c77d2a", "#4aa8a0", "#6b6b6b", "#a04a96",
];

fn finite_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo > hi {
        return None;
    }
    if lo == hi {
        // Flat data still needs a band to draw in.
        lo -= 0.5;
        hi += 0.5;
    }
    Some((lo, hi))
}

struct Frame {
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn x(&self, frac: f64) -> f64 {
        MARGIN_L + frac * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        let frac = (v - self.y_lo) / (self.y_hi - self.y_lo);
        HEIGHT - MARGIN_B - frac * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{:.2}\" y=\"22\" font-size=\"15\">{}</text>\n",
        MARGIN_L,
        escape(title)
    );
}

fn axes(out: &mut String, frame: &Frame) {
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let y0 = HEIGHT - MARGIN_B;
    let _ = write!(
        out,
        "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x1:.2}\" y2=\"{y0:.2}\" stroke=\"black\"/>\n\
         <line x1=\"{x0:.2}\" y1=\"{:.2}\" x2=\"{x0:.2}\" y2=\"{y0:.2}\" stroke=\"black\"/>\n",
        MARGIN_T
    );
    for i in 0..=4 {
        let v = frame.y_lo + (frame.y_hi - frame.y_lo) * i as f64 / 4.0;
        let y = frame.y(v);
        let _ = write!(
            out,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{x0:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{v:.2}</text>\n",
            x0 - 4.0,
            x0 - 8.0,
            y + 4.0
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Polyline chart of equally spaced series. NaN points break the line.
/// `x_labels` annotates the first, middle, and last positions.
pub fn render_line_chart(
    title: &str,
    x_labels: &[String],
    series: &[(String, Vec<f64>)],
) -> String {
    let n = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let (y_lo, y_hi) = finite_range(series.iter().flat_map(|(_, v)| v.iter().copied()))
        .unwrap_or((0.0, 1.0));
    let pad = 0.05 * (y_hi - y_lo);
    let frame = Frame { y_lo: y_lo - pad, y_hi: y_hi + pad };

    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &frame);

    for (idx, label) in [(0usize, true), (n / 2, n > 2), (n.saturating_sub(1), n > 1)]
        .iter()
        .filter(|(_, keep)| *keep)
        .map(|(i, _)| *i)
        .filter_map(|i| x_labels.get(i).map(|l| (i, l)))
    {
        let x = frame.x(if n > 1 { idx as f64 / (n - 1) as f64 } else { 0.5 });
        let _ = write!(
            out,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            HEIGHT - MARGIN_B + 18.0,
            escape(label)
        );
    }

    for (s, (name, values)) in series.iter().enumerate() {
        let color = PALETTE[s % PALETTE.len()];
        // Split at NaNs so gaps stay visible instead of being bridged.
        let mut segment: Vec<(f64, f64)> = Vec::new();
        let mut segments: Vec<Vec<(f64, f64)>> = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            if v.is_finite() {
                let fx = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
                segment.push((frame.x(fx), frame.y(v)));
            } else if !segment.is_empty() {
                segments.push(std::mem::take(&mut segment));
            }
        }
        if !segment.is_empty() {
            segments.push(segment);
        }
        for seg in &segments {
            if seg.len() == 1 {
                let _ = write!(
                    out,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"{color}\"/>\n",
                    seg[0].0, seg[0].1
                );
                continue;
            }
            let points: Vec<String> =
                seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = write!(
                out,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                points.join(" ")
            );
        }
        let ly = MARGIN_T + 14.0 * s as f64;
        let _ = write!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n",
            WIDTH - MARGIN_R - 190.0,
            ly,
            WIDTH - MARGIN_R - 176.0,
            ly + 9.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// One labeled estimate with its 95% interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalPoint {
    pub label: String,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Point-plus-interval chart with a dashed zero line.
pub fn render_interval_chart(title: &str, points: &[IntervalPoint]) -> String {
    let (y_lo, y_hi) = finite_range(
        points
            .iter()
            .flat_map(|p| [p.estimate, p.lo, p.hi].into_iter())
            .chain(std::iter::once(0.0)),
    )
    .unwrap_or((-1.0, 1.0));
    let pad = 0.08 * (y_hi - y_lo);
    let frame = Frame { y_lo: y_lo - pad, y_hi: y_hi + pad };

    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &frame);

    let zero_y = frame.y(0.0);
    let _ = write!(
        out,
        "<line x1=\"{:.2}\" y1=\"{zero_y:.2}\" x2=\"{:.2}\" y2=\"{zero_y:.2}\" \
         stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n",
        MARGIN_L,
        WIDTH - MARGIN_R
    );

    let n = points.len().max(1);
    for (i, p) in points.iter().enumerate() {
        let x = frame.x((i as f64 + 0.5) / n as f64);
        if p.lo.is_finite() && p.hi.is_finite() {
            let _ = write!(
                out,
                "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
                 stroke=\"#1f6fb2\" stroke-width=\"2\"/>\n",
                frame.y(p.lo),
                frame.y(p.hi)
            );
        }
        if p.estimate.is_finite() {
            let _ = write!(
                out,
                "<circle cx=\"{x:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#d1495b\"/>\n",
                frame.y(p.estimate)
            );
        }
        let _ = write!(
            out,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"10\">{}</text>\n",
            HEIGHT - MARGIN_B + 18.0,
            escape(&p.label)
        );
    }
    out.push_str("</svg>\n");
    out
}
