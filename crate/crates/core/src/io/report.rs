use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::{EvaluationRecord, EvaluationReport, TradeoffRow, Winner};
use crate::scalar::Scalar;

use super::svg::{distances_svg, tradeoff_svg};

pub const RECORD_COLUMNS: &str = "index,true_label,predicted_label,initially_correct,distance_alg1,distance_second,distance_min,winner,clever_score,clever_valid";

/// 17 significant digits, enough to reconstruct any f64.
pub fn format_float<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.as_f64())
}

fn opt<T: Scalar>(v: Option<T>) -> String {
    v.map(format_float).unwrap_or_default()
}

pub fn records_csv<T: Scalar>(records: &[EvaluationRecord<T>]) -> String {
    let mut out = String::from(RECORD_COLUMNS);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.index,
            r.true_label,
            r.predicted_label,
            r.initially_correct,
            opt(r.distance_alg1),
            opt(r.distance_second),
            format_float(r.distance_min),
            r.winner,
            opt(r.clever_score),
            r.clever_valid.map(|b| b.to_string()).unwrap_or_default(),
        );
    }
    out
}

/// Inverse of [`records_csv`]. Iteration counts are not stored.
pub fn parse_records_csv(text: &str) -> Result<Vec<EvaluationRecord<f64>>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::domain(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != RECORD_COLUMNS {
        return Err(Error::domain("unexpected records.csv header"));
    }
    reader
        .records()
        .enumerate()
        .map(|(row, rec)| {
            let rec = rec.map_err(|e| Error::Row { row, message: e.to_string() })?;
            let bad = |col: &str| Error::Row { row, message: format!("bad {col}") };
            let int = |k: usize, col: &str| rec[k].parse::<usize>().map_err(|_| bad(col));
            let float = |k: usize, col: &str| rec[k].parse::<f64>().map_err(|_| bad(col));
            let maybe = |k: usize, col: &str| {
                if rec[k].is_empty() {
                    Ok(None)
                } else {
                    float(k, col).map(Some)
                }
            };
            let flag = |k: usize, col: &str| match &rec[k] {
                "" => Ok(None),
                s => s.parse::<bool>().map(Some).map_err(|_| bad(col)),
            };
            Ok(EvaluationRecord {
                index: int(0, "index")?,
                true_label: int(1, "true_label")?,
                predicted_label: int(2, "predicted_label")?,
                initially_correct: flag(3, "initially_correct")?.ok_or_else(|| bad("initially_correct"))?,
                distance_alg1: maybe(4, "distance_alg1")?,
                distance_second: maybe(5, "distance_second")?,
                distance_min: float(6, "distance_min")?,
                winner: rec[7].parse::<Winner>().map_err(|_| bad("winner"))?,
                clever_score: maybe(8, "clever_score")?,
                clever_valid: flag(9, "clever_valid")?,
                iterations_alg1: None,
            })
        })
        .collect()
}

/// `metric,epsilon,value` rows.
pub fn summary_csv<T: Scalar>(report: &EvaluationReport<T>) -> String {
    let mut out = String::from("metric,epsilon,value\n");
    let _ = writeln!(out, "norm,,{}", report.norm.as_str());
    let _ = writeln!(out, "records,,{}", report.records.len());
    let _ = writeln!(out, "mean_adversarial_distance,,{}", format_float(report.mean_adversarial_distance));
    let _ = writeln!(out, "radius_max,,{}", format_float(report.radius_max));
    for (eps, acc) in &report.adversarial_accuracy_at {
        let _ = writeln!(out, "adversarial_accuracy,{},{}", format_float(*eps), format_float(*acc));
    }
    let _ = writeln!(out, "clever_error_ratio,,{}", opt(report.clever_error_ratio));
    let _ = writeln!(out, "all_attacks_failed,,{}", report.all_attacks_failed);
    let rt = &report.runtimes;
    for (name, d) in [("alg1", rt.alg1), ("second", rt.second), ("clever", rt.clever), ("total", rt.total)] {
        let _ = writeln!(out, "runtime_{name}_s,,{:.6}", d.as_secs_f64());
    }
    out
}

pub fn tradeoff_csv<T: Scalar>(rows: &[TradeoffRow<T>]) -> String {
    let mut out = String::from("eps_step,max_iters,mean_distance,runtime_s,successes\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{}",
            format_float(r.eps_step),
            r.max_iters,
            format_float(r.mean_distance),
            r.runtime.as_secs_f64(),
            r.successes
        );
    }
    out
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| Error::io(path, e))
}

/// Writes `records.csv`, `summary.csv` and `distances.svg`, plus
/// `tradeoff.csv` and `tradeoff.svg` when a trade-off study is given.
pub fn write_report<T: Scalar>(
    report: Option<&EvaluationReport<T>>,
    tradeoff: Option<&[TradeoffRow<T>]>,
    dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if let Some(report) = report {
        write(dir, "records.csv", &records_csv(&report.records))?;
        write(dir, "summary.csv", &summary_csv(report))?;
        write(dir, "distances.svg", &distances_svg(&report.records))?;
    }
    if let Some(rows) = tradeoff {
        write(dir, "tradeoff.csv", &tradeoff_csv(rows))?;
        write(dir, "tradeoff.svg", &tradeoff_svg(rows))?;
    }
    Ok(())
}
