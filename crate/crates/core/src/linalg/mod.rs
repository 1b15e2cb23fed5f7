//! Matrix utilities shared by the embedding methods.

mod embedding;
mod sparse;
mod svd;

pub use embedding::{EmbeddingMatrix, EMBEDDING_FORMAT_VERSION, EMBEDDING_MAGIC};
pub use sparse::SparseMatrix;
pub use svd::{truncated_svd, LinearOperator, SvdResult, OVERSAMPLING, POWER_ITERATIONS};

use crate::{Error, Result};

/// `1 − x·y / (‖x‖‖y‖)`, in `[0, 2]`.
pub fn cosine_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    if xx == 0.0 || yy == 0.0 {
        return Err(Error::ZeroVector);
    }
    let cos = (xy / (xx * yy).sqrt()).clamp(-1.0, 1.0);
    Ok(1.0 - cos)
}
