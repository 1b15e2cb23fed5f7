//! Corpus-level and instance-level evaluation.

mod binary;
mod report;
mod stats;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use binary::{binary_metrics, default_threshold_grid, optimize_threshold, BinaryMetrics, ThresholdChoice};
pub use report::{
    emit_report, frame_averages, render_confusion, EmittedFiles, EvalReport, FrameAverage, RunStamp, ScoreRow,
};
pub use stats::{ln_gamma, pearson, pearson_series, regularized_incomplete_beta, student_t_two_sided_p, PearsonResult};

use crate::corpus::AnnotationTable;
use crate::{Error, Result};

/// Change score per target word for one method and one time frame.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChangeScoreTable {
    pub method: String,
    pub frame: String,
    scores: BTreeMap<String, f64>,
}

impl ChangeScoreTable {
    pub fn new(method: impl Into<String>, frame: impl Into<String>) -> Self {
        ChangeScoreTable {
            method: method.into(),
            frame: frame.into(),
            scores: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, word: impl Into<String>, score: f64) -> Result<()> {
        let word = word.into();
        if !score.is_finite() {
            return Err(Error::Scoring {
                word,
                reason: format!("score {score} is not finite"),
            });
        }
        if self.scores.contains_key(&word) {
            return Err(Error::Duplicate {
                what: "scored word",
                key: word,
            });
        }
        self.scores.insert(word, score);
        Ok(())
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.scores.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.scores.iter().map(|(w, &s)| (w.as_str(), s))
    }

    /// `(word, score, annotation)` for every scored word, annotation when known.
    pub fn join(&self, annotations: &AnnotationTable) -> Vec<ScoreRow> {
        self.iter()
            .map(|(w, s)| ScoreRow {
                word: w.to_string(),
                score: s,
                annotation: annotations.get(w),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_invariants() {
        let mut t = ChangeScoreTable::new("ppmi", "2019-2020");
        t.insert("a", 0.5).unwrap();
        assert!(t.insert("a", 0.1).is_err());
        assert!(t.insert("b", f64::NAN).is_err());
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn join_marks_missing_annotations() {
        let mut t = ChangeScoreTable::new("m", "f");
        t.insert("a", 0.5).unwrap();
        t.insert("z", 0.7).unwrap();
        let ann = AnnotationTable::from_entries([("a", 0.2)]).unwrap();
        let rows = t.join(&ann);
        assert_eq!(rows[0].annotation, Some(0.2));
        assert_eq!(rows[1].annotation, None);
    }
}
