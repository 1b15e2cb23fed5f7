//! Externally produced contextual vectors: ingestion, piece averaging, and
//! corpus-level / instance-level change scoring.
//!
//! Exchange format (newline-delimited JSON):
//!
//! ```text
//! {"dim": 3}
//! {"instance_id": "p1", "side": 1, "target": "delta", "vector": [0.1, 0.2, 0.3]}
//! {"instance_id": "p1", "side": 2, "target": "delta", "pieces": [[0.1, 0.0, 0.0], [0.3, 0.2, 0.0]]}
//! {"instance_id": "t7", "slice": "2020", "target": "delta", "vector": [0.0, 1.0, 0.0]}
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::corpus::tokenize;
use crate::eval::ChangeScoreTable;
use crate::linalg::cosine_distance;
use crate::{Error, Result};

/// Where an instance vector belongs: one side of a pair, or a corpus slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Placement {
    Side(u8),
    Slice(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Vector(Vec<f64>),
    Pieces(Vec<Vec<f64>>),
}

impl Representation {
    /// The word vector; pieces are averaged.
    pub fn vector(&self) -> Result<Vec<f64>> {
        match self {
            Representation::Vector(v) => Ok(v.clone()),
            Representation::Pieces(p) => average_pieces(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceEmbedding {
    pub instance_id: String,
    pub placement: Placement,
    /// Normalized (tokenized, space-joined) target word.
    pub target: String,
    pub representation: Representation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub dim: usize,
    pub records: Vec<InstanceEmbedding>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    dim: usize,
}

#[derive(Deserialize)]
struct Record {
    instance_id: String,
    #[serde(default)]
    side: Option<u8>,
    #[serde(default)]
    slice: Option<String>,
    target: String,
    #[serde(default)]
    vector: Option<Vec<f64>>,
    #[serde(default)]
    pieces: Option<Vec<Vec<f64>>>,
}

fn check_dim(v: &[f64], dim: usize) -> std::result::Result<(), String> {
    if v.len() != dim {
        return Err(format!("expected dimension {dim}, got {}", v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err("non-finite coordinate".into());
    }
    Ok(())
}

fn convert(rec: Record, dim: usize) -> std::result::Result<InstanceEmbedding, String> {
    let placement = match (rec.side, rec.slice) {
        (Some(s @ (1 | 2)), None) => Placement::Side(s),
        (Some(s), None) => return Err(format!("side must be 1 or 2, got {s}")),
        (None, Some(label)) if !label.is_empty() => Placement::Slice(label),
        (None, Some(_)) => return Err("empty slice label".into()),
        (Some(_), Some(_)) => return Err("record has both `side` and `slice`".into()),
        (None, None) => return Err("record needs `side` or `slice`".into()),
    };
    let representation = match (rec.vector, rec.pieces) {
        (Some(v), None) => {
            check_dim(&v, dim)?;
            Representation::Vector(v)
        }
        (None, Some(p)) => {
            if p.is_empty() {
                return Err("empty piece list".into());
            }
            for piece in &p {
                check_dim(piece, dim)?;
            }
            Representation::Pieces(p)
        }
        (Some(_), Some(_)) => return Err("record has both `vector` and `pieces`".into()),
        (None, None) => return Err("record needs `vector` or `pieces`".into()),
    };
    let target = tokenize(&rec.target).join(" ");
    if target.is_empty() {
        return Err("empty target".into());
    }
    Ok(InstanceEmbedding {
        instance_id: rec.instance_id,
        placement,
        target,
        representation,
    })
}

pub fn read_embeddings<R: BufRead>(reader: R, path: &Path) -> Result<EmbeddingFile> {
    let malformed = |line: usize, reason: String| Error::MalformedRecord {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut dim = None;
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let raw = line.map_err(|e| Error::io(path, e))?;
        if raw.trim().is_empty() {
            continue;
        }
        match dim {
            None => {
                let h: Header = serde_json::from_str(&raw)
                    .map_err(|e| malformed(line_no, format!("expected {{\"dim\": d}} header: {e}")))?;
                if h.dim == 0 {
                    return Err(malformed(line_no, "dim must be at least 1".into()));
                }
                dim = Some(h.dim);
            }
            Some(d) => {
                let rec: Record = serde_json::from_str(&raw).map_err(|e| malformed(line_no, e.to_string()))?;
                records.push(convert(rec, d).map_err(|r| malformed(line_no, r))?);
            }
        }
    }
    let dim = dim.ok_or_else(|| malformed(1, "missing {\"dim\": d} header".into()))?;
    Ok(EmbeddingFile { dim, records })
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingFile> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(BufReader::new(file), path)
}

/// Coordinate-wise mean of sub-token piece vectors.
pub fn average_pieces(pieces: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = pieces
        .first()
        .ok_or_else(|| Error::invalid("pieces", "cannot average an empty piece list"))?;
    let mut sum = vec![0.0; first.len()];
    for p in pieces {
        if p.len() != sum.len() {
            return Err(Error::DimensionMismatch {
                expected: sum.len(),
                actual: p.len(),
            });
        }
        for (s, x) in sum.iter_mut().zip(p) {
            *s += x;
        }
    }
    let m = pieces.len() as f64;
    Ok(sum.into_iter().map(|s| s / m).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceMeanVector {
    pub word: String,
    pub slice: String,
    pub mean: Vec<f64>,
    pub count: usize,
}

/// Mean of instance vectors for one word in one slice.
pub fn slice_mean(word: &str, slice: &str, vectors: &[Vec<f64>]) -> Result<SliceMeanVector> {
    if vectors.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no instances of `{word}` in slice {slice}"
        )));
    }
    Ok(SliceMeanVector {
        word: word.to_string(),
        slice: slice.to_string(),
        mean: average_pieces(vectors)?,
        count: vectors.len(),
    })
}

/// Slice means keyed by `(word, slice)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SliceMeans {
    means: BTreeMap<(String, String), SliceMeanVector>,
}

impl SliceMeans {
    pub fn get(&self, word: &str, slice: &str) -> Option<&SliceMeanVector> {
        self.means.get(&(word.to_string(), slice.to_string()))
    }

    pub fn words(&self) -> BTreeSet<&str> {
        self.means.keys().map(|(w, _)| w.as_str()).collect()
    }

    pub fn slices(&self) -> BTreeSet<&str> {
        self.means.keys().map(|(_, s)| s.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }
}

/// Groups slice-mode records by `(target, slice)` and averages each group.
/// Side-mode records are ignored.
pub fn slice_means(records: &[InstanceEmbedding]) -> Result<SliceMeans> {
    let mut groups: BTreeMap<(String, String), Vec<Vec<f64>>> = BTreeMap::new();
    for rec in records {
        if let Placement::Slice(label) = &rec.placement {
            groups
                .entry((rec.target.clone(), label.clone()))
                .or_default()
                .push(rec.representation.vector()?);
        }
    }
    let mut means = BTreeMap::new();
    for ((word, slice), vectors) in groups {
        let m = slice_mean(&word, &slice, &vectors)?;
        means.insert((word, slice), m);
    }
    Ok(SliceMeans { means })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusScores {
    pub table: ChangeScoreTable,
    /// Words seen in only one slice of the frame.
    pub excluded: Vec<String>,
}

/// Cosine distance between a word's slice means for the frame `(from, to)`.
pub fn corpus_change_scores(means: &SliceMeans, from: &str, to: &str) -> Result<CorpusScores> {
    let mut table = ChangeScoreTable::new("contextual", format!("{from}-{to}"));
    let mut excluded = Vec::new();
    for word in means.words() {
        match (means.get(word, from), means.get(word, to)) {
            (Some(a), Some(b)) => {
                let d = cosine_distance(&a.mean, &b.mean).map_err(|e| Error::Scoring {
                    word: word.to_string(),
                    reason: e.to_string(),
                })?;
                table.insert(word, d)?;
            }
            (a, _) => {
                let missing = if a.is_none() { from } else { to };
                log::warn!("`{word}` has no instances in slice {missing}; excluded");
                excluded.push(word.to_string());
            }
        }
    }
    Ok(CorpusScores { table, excluded })
}

/// Cosine distance between the two sides of one instance.
pub fn instance_distance(id: &str, side1: Option<&[f64]>, side2: Option<&[f64]>) -> Result<f64> {
    let v1 = side1.ok_or_else(|| Error::MissingSide(id.to_string(), 1))?;
    let v2 = side2.ok_or_else(|| Error::MissingSide(id.to_string(), 2))?;
    cosine_distance(v1, v2).map_err(|e| Error::Scoring {
        word: id.to_string(),
        reason: e.to_string(),
    })
}

/// Per-instance distances from side-mode records, sorted by instance id.
pub fn instance_distances(records: &[InstanceEmbedding]) -> Result<Vec<(String, f64)>> {
    let mut sides: BTreeMap<&str, [Option<Vec<f64>>; 2]> = BTreeMap::new();
    for rec in records {
        if let Placement::Side(s) = rec.placement {
            let slot = &mut sides.entry(&rec.instance_id).or_default()[usize::from(s - 1)];
            if slot.is_some() {
                return Err(Error::Duplicate {
                    what: "instance side",
                    key: format!("{}/{s}", rec.instance_id),
                });
            }
            *slot = Some(rec.representation.vector()?);
        }
    }
    sides
        .into_iter()
        .map(|(id, [a, b])| Ok((id.to_string(), instance_distance(id, a.as_deref(), b.as_deref())?)))
        .collect()
}

/// `0` (changed) when `distance > t`, else `1` (same). A tie counts as same.
pub fn classify_by_threshold(distances: &[f64], t: f64) -> Result<Vec<u8>> {
    if !(0.0..=2.0).contains(&t) {
        return Err(Error::invalid("threshold", format!("{t} is outside [0, 2]")));
    }
    Ok(distances.iter().map(|&d| u8::from(d <= t)).collect())
}
