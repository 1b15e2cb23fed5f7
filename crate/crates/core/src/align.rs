//! Mean-centered orthogonal Procrustes alignment of two embedding spaces.
//!
//! Over the overlap rows, both spaces are mean-centered and scaled to unit
//! Frobenius norm; the rotation is `W* = U Vᵀ` from the SVD of `B_csᵀ A_cs`.
//! Every row of B (overlap or not) is then mapped rigidly into A's frame:
//!
//! ```text
//! b ↦ s_a · ((b − μ_b) / s_b) · W* + μ_a
//! ```

use nalgebra::{DMatrix, RowDVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{cosine_distance, EmbeddingMatrix};
use crate::{Error, Result};

/// Row pairs `(row in B, row in A)` for words present in both spaces with nonzero rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapMap {
    pairs: Vec<(usize, usize)>,
}

impl OverlapMap {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyOverlap);
        }
        Ok(OverlapMap { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub fn build_overlap(a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> Result<OverlapMap> {
    let pairs = b
        .words()
        .words()
        .iter()
        .enumerate()
        .filter_map(|(i, word)| {
            let j = a.words().id_of(word)?;
            (!a.is_zero_row(j) && !b.is_zero_row(i)).then_some((i, j))
        })
        .collect();
    OverlapMap::new(pairs)
}

/// Everything needed to replay the alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcrustesTransform {
    pub center_a: Vec<f64>,
    pub center_b: Vec<f64>,
    pub scale_a: f64,
    pub scale_b: f64,
    /// `W*`, row-major `d × d`.
    pub rotation: Vec<Vec<f64>>,
}

impl ProcrustesTransform {
    pub fn rotation_matrix(&self) -> DMatrix<f64> {
        let d = self.rotation.len();
        DMatrix::from_fn(d, d, |i, j| self.rotation[i][j])
    }

    /// `‖W*ᵀW* − I‖_F`
    pub fn orthogonality_defect(&self) -> f64 {
        let w = self.rotation_matrix();
        (w.tr_mul(&w) - DMatrix::identity(w.nrows(), w.ncols())).norm()
    }

    /// Maps rows of B (one per matrix row) into A's frame.
    pub fn apply(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mu_b = RowDVector::from_row_slice(&self.center_b);
        let mu_a = RowDVector::from_row_slice(&self.center_a);
        let factor = self.scale_a / self.scale_b;
        let mut centered = b.clone();
        for mut row in centered.row_iter_mut() {
            row -= &mu_b;
        }
        let mut out = (centered * self.rotation_matrix()) * factor;
        for mut row in out.row_iter_mut() {
            row += &mu_a;
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transform serializes")
    }
}

#[derive(Debug, Clone)]
pub struct AlignedPair {
    /// A, unchanged.
    pub a: EmbeddingMatrix,
    /// B mapped into A's frame.
    pub b: EmbeddingMatrix,
    pub transform: ProcrustesTransform,
    pub overlap: OverlapMap,
}

impl AlignedPair {
    /// `Σ_overlap ‖B_op,i − A_j‖²`
    pub fn overlap_residual(&self) -> f64 {
        self.overlap
            .pairs()
            .iter()
            .map(|&(i, j)| (self.b.vectors().row(i) - self.a.vectors().row(j)).norm_squared())
            .sum()
    }

    /// Cosine distance between a word's vectors in the two aligned spaces.
    pub fn distance(&self, word: &str) -> Result<f64> {
        let va = self.a.vector(word).ok_or_else(|| Error::UnknownWord(word.into()))?;
        let vb = self.b.vector(word).ok_or_else(|| Error::UnknownWord(word.into()))?;
        cosine_distance(&va, &vb)
    }
}

fn overlap_rows(m: &DMatrix<f64>, rows: impl Iterator<Item = usize>) -> DMatrix<f64> {
    let rows: Vec<_> = rows.map(|r| m.row(r)).collect();
    DMatrix::from_rows(&rows)
}

fn center_and_scale(m: &mut DMatrix<f64>) -> Result<(Vec<f64>, f64)> {
    let mean = m.row_mean();
    for mut row in m.row_iter_mut() {
        row -= &mean;
    }
    let norm = m.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateAlignment("overlap rows have zero spread"));
    }
    *m /= norm;
    Ok((mean.iter().copied().collect(), norm))
}

pub fn procrustes_align(a: &EmbeddingMatrix, b: &EmbeddingMatrix, overlap: &OverlapMap) -> Result<AlignedPair> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    if overlap.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    let pairs = overlap.pairs();
    let mut a_cs = overlap_rows(a.vectors(), pairs.iter().map(|p| p.1));
    let mut b_cs = overlap_rows(b.vectors(), pairs.iter().map(|p| p.0));
    let (center_a, scale_a) = center_and_scale(&mut a_cs)?;
    let (center_b, scale_b) = center_and_scale(&mut b_cs)?;

    let cross = b_cs.tr_mul(&a_cs);
    if cross.iter().all(|&x| x == 0.0) {
        return Err(Error::DegenerateAlignment("cross-covariance is zero"));
    }
    let svd = cross.svd(true, true);
    let rotation = svd.u.expect("svd computed with u") * svd.v_t.expect("svd computed with v_t");

    let transform = ProcrustesTransform {
        center_a,
        center_b,
        scale_a,
        scale_b,
        rotation: rotation.row_iter().map(|r| r.iter().copied().collect()).collect(),
    };
    let moved = EmbeddingMatrix::new(b.words().clone(), transform.apply(b.vectors()))?;
    Ok(AlignedPair {
        a: a.clone(),
        b: moved,
        transform,
        overlap: overlap.clone(),
    })
}
