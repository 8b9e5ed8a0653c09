//! Minimal static SVG charts.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    log_x: bool,
}

impl Frame {
    fn new(
        xs: impl Iterator<Item = f64> + Clone,
        ys: impl Iterator<Item = f64> + Clone,
        log_x: bool,
    ) -> Self {
        let tx = |v: f64| {
            if log_x {
                v.max(f64::MIN_POSITIVE).log10()
            } else {
                v
            }
        };
        let x = padded(xs.map(tx), false);
        let y = padded(ys, true);
        Self { x, y, log_x }
    }

    fn px(&self, v: f64) -> f64 {
        let v = if self.log_x {
            v.max(f64::MIN_POSITIVE).log10()
        } else {
            v
        };
        LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn padded(values: impl Iterator<Item = f64>, from_zero: bool) -> (f64, f64) {
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if from_zero && lo > 0.0 {
        lo = 0.0;
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn open(out: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        (WIDTH - RIGHT + LEFT) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (WIDTH - RIGHT + LEFT) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (HEIGHT - BOTTOM + TOP) / 2.0,
        escape(y_label)
    );
}

fn axes(out: &mut String, frame: &Frame, x_ticks: &[f64]) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        r#"<path d="M{x0} {y0} L{x0} {y1} L{x1} {y1}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let v = frame.y.0 + (frame.y.1 - frame.y.0) * i as f64 / 4.0;
        let y = frame.py(v);
        let _ = writeln!(
            out,
            r##"<line x1="{x0}" y1="{y:.1}" x2="{x1}" y2="{y:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">{}</text>"##,
            x0 - 6.0,
            y + 4.0,
            tick_label(v)
        );
    }
    for &v in x_ticks {
        let x = frame.px(v);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{y1}" x2="{x:.1}" y2="{}" stroke="black"/><text x="{x:.1}" y="{}" text-anchor="middle">{}</text>"#,
            y1 + 4.0,
            y1 + 18.0,
            tick_label(v)
        );
    }
}

fn tick_label(v: f64) -> String {
    if v == v.round() && v.abs() < 1e6 {
        format!("{v:.0}")
    } else if v.abs() >= 100.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

fn legend(out: &mut String, labels: &[&str]) {
    for (i, label) in labels.iter().enumerate() {
        let y = TOP + 10.0 + i as f64 * 20.0;
        let x = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            out,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            x + 20.0,
            PALETTE[i % PALETTE.len()],
            x + 26.0,
            y + 4.0,
            escape(label)
        );
    }
}

/// Line chart; with `log_x` the x axis is base-10 logarithmic.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    log_x: bool,
) -> String {
    let points = || series.iter().flat_map(|s| s.points.iter());
    let frame = Frame::new(points().map(|p| p.0), points().map(|p| p.1), log_x);
    let mut x_ticks: Vec<f64> = points().map(|p| p.0).collect();
    x_ticks.sort_by(f64::total_cmp);
    x_ticks.dedup();
    if x_ticks.len() > 12 {
        let step = x_ticks.len().div_ceil(10);
        x_ticks = x_ticks.into_iter().step_by(step).collect();
    }

    let mut out = String::new();
    open(&mut out, title, x_label, y_label);
    axes(&mut out, &frame, &x_ticks);
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (j, &(x, y)) in s.points.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.1} {:.1} ",
                if j == 0 { "M" } else { "L" },
                frame.px(x),
                frame.py(y)
            );
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            d.trim_end()
        );
        for &(x, y) in &s.points {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{colour}"/>"#,
                frame.px(x),
                frame.py(y)
            );
        }
    }
    legend(
        &mut out,
        &series.iter().map(|s| s.label.as_str()).collect::<Vec<_>>(),
    );
    out.push_str("</svg>\n");
    out
}

/// Histogram over `(lo, hi, count)` bins with an optional vertical marker.
pub fn histogram_chart(
    title: &str,
    x_label: &str,
    bins: &[(f64, f64, usize)],
    marker: Option<(&str, f64)>,
) -> String {
    let xs = bins
        .iter()
        .flat_map(|b| [b.0, b.1])
        .chain(marker.map(|m| m.1));
    let frame = Frame::new(xs.clone(), bins.iter().map(|b| b.2 as f64), false);
    let mut ticks: Vec<f64> = bins
        .iter()
        .map(|b| b.0)
        .chain(bins.last().map(|b| b.1))
        .collect();
    if ticks.len() > 11 {
        let step = ticks.len().div_ceil(10);
        ticks = ticks.into_iter().step_by(step).collect();
    }
    let mut out = String::new();
    open(&mut out, title, x_label, "count");
    axes(&mut out, &frame, &ticks);
    for &(lo, hi, count) in bins {
        let (x0, x1) = (frame.px(lo), frame.px(hi));
        let (y0, y1) = (frame.py(count as f64), frame.py(0.0));
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.1}" y="{y0:.1}" width="{:.1}" height="{:.1}" fill="{}" stroke="white"/>"#,
            (x1 - x0).max(0.5),
            y1 - y0,
            PALETTE[0]
        );
    }
    if let Some((label, v)) = marker {
        let x = frame.px(v);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{TOP}" x2="{x:.1}" y2="{}" stroke="{}" stroke-width="2" stroke-dasharray="6 3"/>"#,
            HEIGHT - BOTTOM,
            PALETTE[1]
        );
        legend(&mut out, &["", label]);
    }
    out.push_str("</svg>\n");
    out
}

/// Vertical bars, one per label, for the labels with non-zero values.
pub fn bar_chart(title: &str, y_label: &str, labels: &[String], values: &[f64]) -> String {
    let shown: Vec<(&String, f64)> = labels
        .iter()
        .zip(values.iter().copied())
        .filter(|(_, v)| *v != 0.0)
        .collect();
    let n = shown.len().max(1) as f64;
    let frame = Frame::new(
        [0.0, n].into_iter(),
        shown.iter().map(|s| s.1).chain([0.0]),
        false,
    );
    let mut out = String::new();
    open(&mut out, title, "feature", y_label);
    axes(&mut out, &frame, &[]);
    for (i, (label, v)) in shown.iter().enumerate() {
        let (x0, x1) = (frame.px(i as f64 + 0.1), frame.px(i as f64 + 0.9));
        let (y0, y1) = (frame.py(*v), frame.py(0.0));
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.1}" y="{y0:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
            x1 - x0,
            y1 - y0,
            PALETTE[0]
        );
        let xc = (x0 + x1) / 2.0;
        let _ = writeln!(
            out,
            r#"<text x="{xc:.1}" y="{0:.1}" text-anchor="end" transform="rotate(-60 {xc:.1} {0:.1})">{1}</text>"#,
            y1 + 14.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}
