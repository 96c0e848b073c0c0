//! Plot-ready CSV and JSON artifacts.
//!
//! All floats go through the canonical 6-significant-digit formatter, so
//! repeated runs with the same seed produce byte-identical files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::fmt::format_float;

use super::{TrialLog, TrialRow};

/// `trials.csv`: trial,candidate,y,best_so_far,wall_ms.
pub fn write_trials_csv(path: &Path, log: &TrialLog) -> Result<(), HarnessError> {
    let mut out = String::from("trial,candidate,y,best_so_far,wall_ms\n");
    for row in &log.rows {
        out.push_str(&row.trial.to_string());
        out.push(',');
        out.push_str(&csv_field(&row.candidate));
        out.push(',');
        out.push_str(&format_float(row.y));
        out.push(',');
        out.push_str(&format_float(row.best_so_far));
        out.push(',');
        out.push_str(&row.wall_ms.to_string());
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Parse a trials.csv produced by [`write_trials_csv`].
pub fn parse_trials_csv(content: &str) -> Result<TrialLog, HarnessError> {
    let mut lines = content.lines();
    let header = lines.next().ok_or_else(|| HarnessError::Config("empty trials.csv".into()))?;
    if header != "trial,candidate,y,best_so_far,wall_ms" {
        return Err(HarnessError::Config(format!("unexpected trials.csv header {header:?}")));
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields = split_csv_line(line)
            .map_err(|e| HarnessError::Config(format!("bad csv line {line:?}: {e}")))?;
        if fields.len() != 5 {
            return Err(HarnessError::Config(format!("expected 5 fields, got {}", fields.len())));
        }
        rows.push(TrialRow {
            trial: fields[0].parse().map_err(|_| HarnessError::Config("bad trial index".into()))?,
            candidate: fields[1].clone(),
            y: parse_float(&fields[2])?,
            best_so_far: parse_float(&fields[3])?,
            wall_ms: fields[4].parse().map_err(|_| HarnessError::Config("bad wall_ms".into()))?,
        });
    }
    Ok(TrialLog { rows })
}

fn parse_float(s: &str) -> Result<f64, HarnessError> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        other => other.parse().map_err(|_| HarnessError::Config(format!("bad float {other:?}"))),
    }
}

/// `curves.csv`: trial,mean_best,stddev_best aggregated across repeats.
pub fn write_curves_csv(path: &Path, curves: &[Vec<f64>]) -> Result<(), HarnessError> {
    assert!(!curves.is_empty());
    let len = curves[0].len();
    assert!(curves.iter().all(|c| c.len() == len), "curves must share a budget");
    let mut out = String::from("trial,mean_best,stddev_best\n");
    for t in 0..len {
        let values: Vec<f64> = curves.iter().map(|c| c[t]).collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        out.push_str(&format!("{t},{},{}\n", format_float(mean), format_float(std)));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// `metrics.json` schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub nll: Option<f64>,
    pub mae: Option<f64>,
    pub r2: Option<f64>,
    pub mace: Option<f64>,
    pub log_efficiency: BTreeMap<String, Option<f64>>,
}

pub fn write_metrics_json(path: &Path, report: &MetricsReport) -> Result<(), HarnessError> {
    let mut file = std::fs::File::create(path)?;
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| HarnessError::Config(format!("metrics encode: {e}")))?;
    file.write_all(json.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        let mut out = String::with_capacity(s.len() + 2);
        out.push('"');
        for c in s.chars() {
            if c == '"' {
                out.push('"');
            }
            out.push(c);
        }
        out.push('"');
        out
    } else {
        s.to_string()
    }
}

fn split_csv_line(line: &str) -> Result<Vec<String>, String> {
    let mut fields = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        let mut field = String::new();
        if chars.peek() == Some(&'"') {
            chars.next();
            loop {
                match chars.next() {
                    Some('"') => {
                        if chars.peek() == Some(&'"') {
                            chars.next();
                            field.push('"');
                        } else {
                            break;
                        }
                    }
                    Some(c) => field.push(c),
                    None => return Err("unterminated quoted field".into()),
                }
            }
            match chars.next() {
                Some(',') | None => {}
                Some(c) => return Err(format!("unexpected {c:?} after quoted field")),
            }
        } else {
            let mut ended = false;
            for c in chars.by_ref() {
                if c == ',' {
                    ended = true;
                    break;
                }
                field.push(c);
            }
            fields.push(field);
            if !ended {
                return Ok(fields);
            }
            continue;
        }
        fields.push(field);
        if chars.peek().is_none() {
            return Ok(fields);
        }
    }
}
