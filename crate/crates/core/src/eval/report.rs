//! Report files: per-word score CSVs, a JSON summary and confusion-matrix text.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{student_t_two_sided_p, BinaryMetrics, PearsonResult};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub word: String,
    pub score: f64,
    pub annotation: Option<f64>,
}

/// Results for one (method, frame) cell.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub frame: String,
    pub pearson: Option<PearsonResult>,
    pub binary: Option<BinaryMetrics>,
    pub threshold: Option<f64>,
    /// Words scored but not comparable (unannotated, or missing from a slice).
    pub excluded: Vec<String>,
    /// Instances with no usable verdict, left out of every aggregate.
    pub failed_instances: usize,
    #[serde(skip)]
    pub rows: Vec<ScoreRow>,
}

impl EvalReport {
    pub fn new(method: impl Into<String>, frame: impl Into<String>) -> Self {
        EvalReport {
            method: method.into(),
            frame: frame.into(),
            ..Default::default()
        }
    }

    /// File-name-safe `method_frame`.
    pub fn label(&self) -> String {
        let raw = if self.frame.is_empty() {
            self.method.clone()
        } else {
            format!("{}_{}", self.method, self.frame)
        };
        raw.chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                    c
                } else {
                    '_'
                }
            })
            .collect()
    }
}

/// Identifies the run that produced an output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStamp {
    pub config_hash: String,
    pub seed: u64,
}

impl RunStamp {
    pub fn comment_line(&self) -> String {
        format!("# config_hash={} seed={}\n", self.config_hash, self.seed)
    }
}

/// Cross-frame averages for one method. Whether to average `p` directly or
/// recompute it from the averaged `r` is a convention choice; both are given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAverage {
    pub method: String,
    pub frames: usize,
    pub mean_r: f64,
    pub mean_p: f64,
    /// p-value of `mean_r` at the mean comparison count.
    pub p_of_mean_r: f64,
}

pub fn frame_averages(reports: &[EvalReport]) -> Vec<FrameAverage> {
    let mut by_method: BTreeMap<&str, Vec<PearsonResult>> = BTreeMap::new();
    for rep in reports {
        if let Some(p) = rep.pearson {
            by_method.entry(&rep.method).or_default().push(p);
        }
    }
    by_method
        .into_iter()
        .map(|(method, results)| {
            let k = results.len() as f64;
            let mean_r = results.iter().map(|p| p.r).sum::<f64>() / k;
            let mean_p = results.iter().map(|p| p.p).sum::<f64>() / k;
            let mean_n = (results.iter().map(|p| p.n).sum::<usize>() as f64 / k).round();
            let df = (mean_n - 2.0).max(1.0);
            let p_of_mean_r = if mean_r.abs() >= 1.0 {
                0.0
            } else {
                student_t_two_sided_p(mean_r * (df / (1.0 - mean_r * mean_r)).sqrt(), df)
            };
            FrameAverage {
                method: method.to_string(),
                frames: results.len(),
                mean_r,
                mean_p,
                p_of_mean_r,
            }
        })
        .collect()
}

/// 2×2 grid: rows T/F, columns P/N.
///
/// ```text
///          P      N
/// T        1      4
/// F        2      3
/// ```
pub fn render_confusion(m: &BinaryMetrics) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<3}{:>7}{:>7}", "", "P", "N");
    let _ = writeln!(s, "{:<3}{:>7}{:>7}", "T", m.tp, m.tn);
    let _ = writeln!(s, "{:<3}{:>7}{:>7}", "F", m.fp, m.fn_);
    s
}

#[derive(Serialize)]
struct Summary<'a> {
    config_hash: &'a str,
    seed: u64,
    reports: &'a [EvalReport],
    frame_averages: Vec<FrameAverage>,
    averaging_note: &'static str,
}

const AVERAGING_NOTE: &str = "cross-frame averages: mean_p averages per-frame p-values; \
p_of_mean_r recomputes p from the averaged r. Choose one convention when comparing to other work.";

#[derive(Debug, Clone, PartialEq)]
pub struct EmittedFiles {
    pub summary: PathBuf,
    pub confusion: PathBuf,
    pub score_csvs: Vec<PathBuf>,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn fmt_float(x: f64) -> String {
    format!("{x}")
}

/// Writes `summary.json`, `confusion.txt`, and one `scores_<label>.csv` per report.
pub fn emit_report(reports: &[EvalReport], dir: &Path, stamp: &RunStamp) -> Result<EmittedFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut score_csvs = Vec::new();
    for rep in reports {
        let mut csv = stamp.comment_line();
        csv.push_str("word,score,annotation\n");
        for row in &rep.rows {
            let ann = row.annotation.map(fmt_float).unwrap_or_default();
            let _ = writeln!(csv, "{},{},{}", row.word, fmt_float(row.score), ann);
        }
        let path = dir.join(format!("scores_{}.csv", rep.label()));
        write(&path, &csv)?;
        score_csvs.push(path);
    }

    let summary = Summary {
        config_hash: &stamp.config_hash,
        seed: stamp.seed,
        reports,
        frame_averages: frame_averages(reports),
        averaging_note: AVERAGING_NOTE,
    };
    let summary_path = dir.join("summary.json");
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    write(&summary_path, &json)?;

    let mut text = stamp.comment_line();
    for rep in reports {
        if let Some(m) = &rep.binary {
            let _ = writeln!(text, "[{}]", rep.label());
            text.push_str(&render_confusion(m));
        }
    }
    let confusion_path = dir.join("confusion.txt");
    write(&confusion_path, &text)?;

    Ok(EmittedFiles {
        summary: summary_path,
        confusion: confusion_path,
        score_csvs,
    })
}
