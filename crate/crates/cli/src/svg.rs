//! Minimal SVG line plot of a sweep: both phase-error bounds on a log axis
//! at the left, the relative gap on a log axis at the right.

use std::fmt::Write;

use pmqkd_core::rates::SweepRow;

use crate::config::XAxis;
use crate::CliError;

const W: f64 = 760.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 80.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const UPPER_COLOR: &str = "#1f4e99";
const LOWER_COLOR: &str = "#c0392b";
const GAP_COLOR: &str = "#2e7d32";

/// Decade range `[10^lo, 10^hi]` covering the positive finite values.
fn decades(values: impl Iterator<Item = f64>) -> Option<(i32, i32)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values.filter(|v| v.is_finite() && *v > 0.0) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return None;
    }
    let a = lo.log10().floor() as i32;
    let b = (hi.log10().ceil() as i32).max(a + 1);
    Some((a, b))
}

struct LogAxis {
    lo: i32,
    hi: i32,
}

impl LogAxis {
    fn y(&self, v: f64) -> f64 {
        let t = (v.log10() - self.lo as f64) / (self.hi - self.lo) as f64;
        H - BOTTOM - t * (H - TOP - BOTTOM)
    }
}

fn x_value(row: &SweepRow, axis: XAxis) -> f64 {
    match axis {
        XAxis::Mu => row.point.mu,
        XAxis::EtaDb => row.point.eta_db,
    }
}

/// Polyline segments, broken wherever a value cannot sit on a log axis.
fn polylines(
    out: &mut String,
    pts: &[(f64, f64)],
    axis: &LogAxis,
    sx: impl Fn(f64) -> f64,
    color: &str,
    dash: &str,
) {
    let mut seg: Vec<String> = Vec::new();
    let flush = |seg: &mut Vec<String>, out: &mut String| {
        if seg.len() > 1 {
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.8"{dash} points="{}"/>"#,
                seg.join(" ")
            );
        }
        seg.clear();
    };
    for &(x, v) in pts {
        if v.is_finite() && v > 0.0 {
            seg.push(format!("{:.2},{:.2}", sx(x), axis.y(v)));
        } else {
            flush(&mut seg, out);
        }
    }
    flush(&mut seg, out);
}

fn decade_label(e: i32) -> String {
    format!("1e{e}")
}

/// Render the sweep. Needs at least two rows; output depends only on the
/// rows and labels, so repeated calls give identical bytes.
pub fn emit_svg(rows: &[SweepRow], x_axis: XAxis, title: &str) -> Result<String, CliError> {
    if rows.len() < 2 {
        return Err(CliError::TooFewPoints(rows.len()));
    }
    let xs: Vec<f64> = rows.iter().map(|r| x_value(r, x_axis)).collect();
    let x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if x_max <= x_min {
        x_max = x_min + 1.0;
    }
    let sx = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * (W - LEFT - RIGHT);

    let (lo, hi) = decades(rows.iter().flat_map(|r| [r.ep_upper, r.ep_lower])).unwrap_or((-3, 0));
    let left = LogAxis { lo, hi };
    let (lo, hi) = decades(rows.iter().map(|r| r.gap_ratio)).unwrap_or((-3, 0));
    let right = LogAxis { lo, hi };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );

    // frame
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(
        s,
        r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );

    // x ticks: six evenly spaced
    for i in 0..=5 {
        let x = x_min + (x_max - x_min) * i as f64 / 5.0;
        let px = sx(x);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{y1:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#,
            y1 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y1 + 20.0,
            tick_label(x)
        );
    }
    let x_label = match x_axis {
        XAxis::Mu => "mu (mean photon number)",
        XAxis::EtaDb => "channel loss (dB)",
    };
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
        (x0 + x1) / 2.0,
        H - 15.0
    );

    // decade ticks on both log axes
    for e in left.lo..=left.hi {
        let py = left.y(10f64.powi(e));
        let _ = writeln!(
            s,
            r##"<line x1="{x0:.2}" y1="{py:.2}" x2="{x1:.2}" y2="{py:.2}" stroke="#dddddd"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            py + 4.0,
            decade_label(e)
        );
    }
    for e in right.lo..=right.hi {
        let py = right.y(10f64.powi(e));
        let _ = writeln!(
            s,
            r#"<line x1="{x1:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="{GAP_COLOR}"/>"#,
            x1 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" fill="{GAP_COLOR}">{}</text>"#,
            x1 + 8.0,
            py + 4.0,
            decade_label(e)
        );
    }
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">phase error rate</text>"#,
        (y0 + y1) / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate({:.2} {:.2}) rotate(90)" text-anchor="middle" fill="{GAP_COLOR}">relative gap</text>"#,
        W - 14.0,
        (y0 + y1) / 2.0
    );

    let series = |f: fn(&SweepRow) -> f64| -> Vec<(f64, f64)> {
        rows.iter().zip(&xs).map(|(r, &x)| (x, f(r))).collect()
    };
    polylines(&mut s, &series(|r| r.ep_upper), &left, sx, UPPER_COLOR, "");
    polylines(&mut s, &series(|r| r.ep_lower), &left, sx, LOWER_COLOR, "");
    polylines(
        &mut s,
        &series(|r| r.gap_ratio),
        &right,
        sx,
        GAP_COLOR,
        r#" stroke-dasharray="6 4""#,
    );

    // legend
    let entries = [
        (UPPER_COLOR, "upper bound"),
        (LOWER_COLOR, "lower bound (beam-splitting attack)"),
        (GAP_COLOR, "relative gap (right axis)"),
    ];
    for (i, (color, label)) in entries.iter().enumerate() {
        let ly = y0 + 18.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            x0 + 12.0,
            x0 + 36.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{label}</text>"#,
            x0 + 42.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn tick_label(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
