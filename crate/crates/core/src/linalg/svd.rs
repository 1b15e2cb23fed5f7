//! Randomized truncated SVD (range finder + power iterations).

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SparseMatrix;
use crate::{Error, Result};

pub const OVERSAMPLING: usize = 10;
pub const POWER_ITERATIONS: usize = 2;

/// Anything that can multiply a dense block from the left, with or without transposition.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `A · x`
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    /// `Aᵀ · x`
    fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
}

impl LinearOperator for SparseMatrix {
    fn nrows(&self) -> usize {
        SparseMatrix::nrows(self)
    }
    fn ncols(&self) -> usize {
        SparseMatrix::ncols(self)
    }
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.mul_dense(x)
    }
    fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.tr_mul_dense(x)
    }
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }
    fn ncols(&self) -> usize {
        self.ncols()
    }
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self * x
    }
    fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.tr_mul(x)
    }
}

/// Rank-k factors `A ≈ U · diag(σ) · Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `rows × k`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Nonincreasing, nonnegative.
    pub singular_values: DVector<f64>,
    /// `cols × k`, orthonormal columns.
    pub v: DMatrix<f64>,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `U_k Σ_k`, the row embedding of the decomposed matrix.
    pub fn scaled_left(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.scaled_left() * self.v.transpose()
    }
}

fn orthonormal_basis(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

/// Seeded randomized SVD keeping the top `k` singular triplets.
///
/// The sketch has `k + OVERSAMPLING` columns (capped at `min(rows, cols)`, in
/// which case the result is exact up to rounding) and is refined by
/// `POWER_ITERATIONS` rounds of re-orthonormalized power iteration.
pub fn truncated_svd<A>(a: &A, k: usize, seed: u64) -> Result<SvdResult>
where
    A: LinearOperator + ?Sized,
{
    let (m, n) = (a.nrows(), a.ncols());
    let full = m.min(n);
    if k == 0 || k > full {
        return Err(Error::invalid(
            "k",
            format!("rank {k} outside 1..={full} for a {m}x{n} matrix"),
        ));
    }
    let width = (k + OVERSAMPLING).min(full);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut omega = DMatrix::zeros(n, width);
    for x in omega.iter_mut() {
        *x = StandardNormal.sample(&mut rng);
    }

    let mut q = orthonormal_basis(a.apply(&omega));
    for _ in 0..POWER_ITERATIONS {
        let z = orthonormal_basis(a.apply_transpose(&q));
        q = orthonormal_basis(a.apply(&z));
    }

    // B = Qᵀ A, formed as (Aᵀ Q)ᵀ so only operator products are needed.
    let b = a.apply_transpose(&q).transpose();
    let svd = b.svd(true, true);
    let small_u = svd.u.expect("svd computed with u");
    let v_t = svd.v_t.expect("svd computed with v_t");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    order.truncate(k);

    let lifted = q * small_u;
    let u = DMatrix::from_fn(m, k, |r, c| lifted[(r, order[c])]);
    let v = DMatrix::from_fn(n, k, |r, c| v_t[(order[c], r)]);
    let singular_values = DVector::from_fn(k, |i, _| svd.singular_values[order[i]].max(0.0));
    Ok(SvdResult { u, singular_values, v })
}
