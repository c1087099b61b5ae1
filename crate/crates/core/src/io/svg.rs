//! Minimal hand-written SVG line charts.

use std::fmt::Write as _;

use crate::evaluation::{EvaluationRecord, TradeoffRow};
use crate::scalar::Scalar;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

struct Frame {
    x_max: f64,
    y_max: f64,
}

impl Frame {
    fn new(x_max: f64, y_max: f64) -> Self {
        let fix = |v: f64| if v > 0.0 && v.is_finite() { v } else { 1.0 };
        Self { x_max: fix(x_max), y_max: fix(y_max) }
    }

    fn x(&self, v: f64) -> f64 {
        PAD + v / self.x_max * (W - 2.0 * PAD)
    }

    fn y(&self, v: f64) -> f64 {
        H - PAD - v / self.y_max * (H - 2.0 * PAD)
    }

    fn open(&self, out: &mut String, title: &str, x_label: &str, y_label: &str) {
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#, W / 2.0);
        let (x0, y0, x1, y1) = (PAD, H - PAD, W - PAD, PAD);
        let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
        let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, W / 2.0, H - 12.0);
        let _ = writeln!(
            out,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{y_label}</text>"#,
            H / 2.0,
            H / 2.0
        );
        let _ = writeln!(out, r#"<text x="{x0}" y="{}" text-anchor="start">0</text>"#, y0 + 16.0);
        let _ = writeln!(out, r#"<text x="{x1}" y="{}" text-anchor="end">{:.4}</text>"#, y0 + 16.0, self.x_max);
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{:.4}</text>"#, x0 - 4.0, y1 + 4.0, self.y_max);
    }
}

/// Ascending `distance_min` curve with CLEVER markers, green when the
/// score is below the distance and red otherwise.
pub fn distances_svg<T: Scalar>(records: &[EvaluationRecord<T>]) -> String {
    let y_max = records
        .iter()
        .flat_map(|r| [Some(r.distance_min), r.clever_score])
        .flatten()
        .map(Scalar::as_f64)
        .fold(0.0, f64::max);
    let frame = Frame::new(records.len().saturating_sub(1) as f64, y_max);
    let mut out = String::new();
    frame.open(&mut out, "Sorted adversarial distances", "image (sorted)", "distance");
    let points: Vec<String> = records
        .iter()
        .enumerate()
        .map(|(k, r)| format!("{:.2},{:.2}", frame.x(k as f64), frame.y(r.distance_min.as_f64())))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline class="distance" fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
        points.join(" ")
    );
    for (k, r) in records.iter().enumerate() {
        if let (Some(s), Some(valid)) = (r.clever_score, r.clever_valid) {
            let colour = if valid { "green" } else { "red" };
            let _ = writeln!(
                out,
                r#"<circle class="clever" cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#,
                frame.x(k as f64),
                frame.y(s.as_f64())
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Mean distance against runtime, one point per step size.
pub fn tradeoff_svg<T: Scalar>(rows: &[TradeoffRow<T>]) -> String {
    let x_max = rows.iter().map(|r| r.runtime.as_secs_f64()).fold(0.0, f64::max);
    let y_max = rows.iter().map(|r| r.mean_distance.as_f64()).fold(0.0, f64::max);
    let frame = Frame::new(x_max, y_max);
    let mut out = String::new();
    frame.open(&mut out, "Step size trade-off", "runtime [s]", "mean distance");
    let points: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.2},{:.2}", frame.x(r.runtime.as_secs_f64()), frame.y(r.mean_distance.as_f64())))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
        points.join(" ")
    );
    for (r, p) in rows.iter().zip(&points) {
        let (x, y) = p.split_once(',').unwrap_or(("0", "0"));
        let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="3" fill="steelblue"/>"#);
        let _ = writeln!(out, r#"<text x="{x}" y="{y}" dx="5" dy="-5">{:.4}</text>"#, r.eps_step.as_f64());
    }
    out.push_str("</svg>\n");
    out
}
