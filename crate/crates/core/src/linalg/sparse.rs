use nalgebra::DMatrix;

use crate::{Error, Result};

/// Compressed-sparse-row matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets in any order.
    ///
    /// Rejects out-of-bounds indices, repeated cells and non-finite values.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut m = SparseMatrix::zeros(rows, cols);
        m.col_idx.reserve(triplets.len());
        m.values.reserve(triplets.len());
        let mut prev = None;
        for &(r, c, v) in &triplets {
            if r >= rows || c >= cols {
                return Err(Error::invalid(
                    "triplets",
                    format!("entry ({r}, {c}) outside {rows}x{cols}"),
                ));
            }
            if !v.is_finite() {
                return Err(Error::invalid("triplets", format!("entry ({r}, {c}) is {v}")));
            }
            if prev == Some((r, c)) {
                return Err(Error::invalid("triplets", format!("entry ({r}, {c}) repeated")));
            }
            prev = Some((r, c));
            m.row_ptr[r + 1] += 1;
            m.col_idx.push(c);
            m.values.push(v);
        }
        for r in 0..rows {
            m.row_ptr[r + 1] += m.row_ptr[r];
        }
        Ok(m)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (cols, vals) = self.row(row);
        match cols.binary_search(&col) {
            Ok(i) => vals[i],
            Err(_) => 0.0,
        }
    }

    /// Column indices (ascending) and values of one row.
    pub fn row(&self, row: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Applies `f` to every stored value, dropping cells that map to zero.
    pub fn filter_map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> SparseMatrix {
        let mut out = SparseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let nv = f(r, c, v);
                if nv != 0.0 {
                    out.col_idx.push(c);
                    out.values.push(nv);
                }
            }
            out.row_ptr[r + 1] = out.values.len();
        }
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).1.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for (_, c, v) in self.iter() {
            sums[c] += v;
        }
        sums
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            d[(r, c)] = v;
        }
        d
    }

    /// `self · x`
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(self.cols, x.nrows(), "sparse product shape mismatch");
        let mut out = DMatrix::zeros(self.rows, x.ncols());
        for j in 0..x.ncols() {
            let xj = x.column(j);
            for r in 0..self.rows {
                let (cols, vals) = self.row(r);
                out[(r, j)] = cols.iter().zip(vals).map(|(&c, &v)| v * xj[c]).sum();
            }
        }
        out
    }

    /// `selfᵀ · x`
    pub fn tr_mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(self.rows, x.nrows(), "sparse product shape mismatch");
        let mut out = DMatrix::zeros(self.cols, x.ncols());
        for j in 0..x.ncols() {
            for r in 0..self.rows {
                let xr = x[(r, j)];
                if xr == 0.0 {
                    continue;
                }
                let (cols, vals) = self.row(r);
                for (&c, &v) in cols.iter().zip(vals) {
                    out[(c, j)] += v * xr;
                }
            }
        }
        out
    }
}
