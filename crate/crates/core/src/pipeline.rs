//! Build → align → distance for the static embedding methods.

use crate::align::{build_overlap, procrustes_align, ProcrustesTransform};
use crate::corpus::{tokenize, Slice, TimeSlicedCorpus};
use crate::eval::ChangeScoreTable;
use crate::linalg::{cosine_distance, EmbeddingMatrix};
use crate::ppmi::{ppmi_embeddings, PpmiConfig};
use crate::sgns::{train, SgnsConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StaticMethod {
    Ppmi(PpmiConfig),
    Sgns(SgnsConfig),
}

impl StaticMethod {
    pub fn label(&self) -> &'static str {
        match self {
            StaticMethod::Ppmi(_) => "ppmi",
            StaticMethod::Sgns(_) => "sgns",
        }
    }
}

pub fn slice_embedding(slice: &Slice, method: &StaticMethod) -> Result<EmbeddingMatrix> {
    match method {
        StaticMethod::Ppmi(cfg) => ppmi_embeddings(slice.token_streams(), &slice.vocab, cfg),
        StaticMethod::Sgns(cfg) => train(slice.token_streams(), &slice.vocab, *cfg)?.embedding(),
    }
}

#[derive(Debug, Clone)]
pub struct FrameScores {
    pub table: ChangeScoreTable,
    /// Requested targets that could not be scored (absent or zero row in a slice).
    pub excluded: Vec<String>,
    pub overlap: usize,
    pub residual: f64,
    pub transform: ProcrustesTransform,
}

impl FrameScores {
    /// `(word, score)` sorted by descending score, then word.
    pub fn ranking(&self) -> Vec<(String, f64)> {
        let mut r: Vec<(String, f64)> = self.table.iter().map(|(w, s)| (w.to_string(), s)).collect();
        r.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        r
    }
}

/// Scores already-built embeddings for slices `a` (earlier) and `b` (later).
/// With `targets = None`, every word with nonzero rows in both is scored.
pub fn score_embeddings(
    a: &EmbeddingMatrix,
    b: &EmbeddingMatrix,
    method: &str,
    frame: &str,
    targets: Option<&[String]>,
) -> Result<FrameScores> {
    let overlap = build_overlap(a, b)?;
    let aligned = procrustes_align(a, b, &overlap)?;
    let words: Vec<String> = match targets {
        Some(t) => t.iter().map(|w| tokenize(w).join(" ")).collect(),
        None => overlap
            .pairs()
            .iter()
            .filter_map(|&(i, _)| b.words().word_of(i).map(str::to_string))
            .collect(),
    };
    let mut table = ChangeScoreTable::new(method, frame);
    let mut excluded = Vec::new();
    for word in words {
        let (Some(va), Some(vb)) = (aligned.a.vector(&word), aligned.b.vector(&word)) else {
            log::warn!("`{word}` is missing from a slice of {frame}; excluded");
            excluded.push(word);
            continue;
        };
        match cosine_distance(&va, &vb) {
            Ok(d) => table.insert(word, d)?,
            Err(Error::ZeroVector) => {
                log::warn!("`{word}` has a zero vector in {frame}; excluded");
                excluded.push(word);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(FrameScores {
        table,
        excluded,
        overlap: overlap.len(),
        residual: aligned.overlap_residual(),
        transform: aligned.transform,
    })
}

/// Trains both slices of a frame and scores the targets.
pub fn score_frame(
    corpus: &TimeSlicedCorpus,
    from: &str,
    to: &str,
    method: &StaticMethod,
    targets: Option<&[String]>,
) -> Result<FrameScores> {
    let slice = |label: &str| {
        corpus
            .slice(label)
            .ok_or_else(|| Error::invalid("slice", format!("no slice labelled `{label}`")))
    };
    let a = slice_embedding(slice(from)?, method)?;
    let b = slice_embedding(slice(to)?, method)?;
    score_embeddings(&a, &b, method.label(), &format!("{from}-{to}"), targets)
}

/// Scores every consecutive frame of the corpus.
pub fn score_corpus(
    corpus: &TimeSlicedCorpus,
    method: &StaticMethod,
    targets: Option<&[String]>,
) -> Result<Vec<FrameScores>> {
    let frames = corpus.frames();
    if frames.is_empty() {
        return Err(Error::InsufficientData("scoring needs at least two slices".into()));
    }
    frames
        .iter()
        .map(|(from, to)| score_frame(corpus, from, to, method, targets))
        .collect()
}
