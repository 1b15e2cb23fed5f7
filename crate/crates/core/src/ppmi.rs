//! Adjacent-word co-occurrence counts and the smoothed, shifted PPMI transform.
//!
//! For word `w` and context `c`:
//!
//! ```text
//! PPMI(w, c) = max( ln( #(w,c) · Σ_c' #(c')^α / (#(w) · #(c)^α) ) − ln k, 0 )
//! ```
//!
//! where `#(w)` and `#(c)` are row and column totals of the pair counts, `α`
//! is the context smoothing exponent and `k` the shift. The normalizer is the
//! sum of *smoothed* context counts.

use std::collections::HashMap;

use crate::corpus::Vocabulary;
use crate::linalg::{truncated_svd, EmbeddingMatrix, SparseMatrix};
use crate::{Error, Result};

/// Dimensions swept for the PPMI → SVD reduction.
pub const SWEEP_DIMS: [usize; 5] = [100, 200, 300, 400, 500];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpmiParams {
    /// Context smoothing exponent, in `(0, 1]`.
    pub alpha: f64,
    /// Shift `k ≥ 1`; `ln k` is subtracted from every cell.
    pub shift: f64,
}

impl Default for PpmiParams {
    fn default() -> Self {
        PpmiParams {
            alpha: 0.75,
            shift: 1.0,
        }
    }
}

impl PpmiParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid("alpha", format!("{} is outside (0, 1]", self.alpha)));
        }
        if !(self.shift >= 1.0 && self.shift.is_finite()) {
            return Err(Error::invalid("shift", format!("{} must be >= 1", self.shift)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CooccurrenceCounts {
    /// `#(w, c)`, rows are words, columns contexts.
    pub pairs: SparseMatrix,
    pub word_totals: Vec<f64>,
    pub context_totals: Vec<f64>,
    /// `|D|`, the number of observed (word, context) pairs.
    pub total: f64,
    pub params: PpmiParams,
}

impl CooccurrenceCounts {
    pub fn with_params(mut self, params: PpmiParams) -> Result<Self> {
        params.validate()?;
        self.params = params;
        Ok(self)
    }
}

/// Counts each adjacent token pair in both directions, within documents only.
pub fn count_cooccurrence<'a, I>(docs: I, vocab: &Vocabulary) -> Result<CooccurrenceCounts>
where
    I: IntoIterator<Item = &'a [String]>,
{
    let n = vocab.len();
    let mut cells: HashMap<(usize, usize), u64> = HashMap::new();
    for doc in docs {
        let ids = doc
            .iter()
            .map(|t| vocab.id_of(t).ok_or_else(|| Error::UnknownWord(t.clone())))
            .collect::<Result<Vec<_>>>()?;
        for w in ids.windows(2) {
            *cells.entry((w[0], w[1])).or_default() += 1;
            *cells.entry((w[1], w[0])).or_default() += 1;
        }
    }
    let triplets = cells.into_iter().map(|((r, c), v)| (r, c, v as f64)).collect();
    let pairs = SparseMatrix::from_triplets(n, n, triplets)?;
    let word_totals = pairs.row_sums();
    let context_totals = pairs.col_sums();
    let total = word_totals.iter().sum();
    Ok(CooccurrenceCounts {
        pairs,
        word_totals,
        context_totals,
        total,
        params: PpmiParams::default(),
    })
}

pub fn ppmi_transform(counts: &CooccurrenceCounts) -> Result<SparseMatrix> {
    if counts.total <= 0.0 {
        return Err(Error::EmptyCounts);
    }
    counts.params.validate()?;
    let alpha = counts.params.alpha;
    let smoothed: Vec<f64> = counts.context_totals.iter().map(|c| c.powf(alpha)).collect();
    let smoothed_sum: f64 = smoothed.iter().sum();
    let log_shift = counts.params.shift.ln();
    Ok(counts.pairs.filter_map_values(|w, c, n| {
        let pmi = (n * smoothed_sum / (counts.word_totals[w] * smoothed[c])).ln();
        (pmi - log_shift).max(0.0)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpmiConfig {
    pub params: PpmiParams,
    pub dim: usize,
    pub seed: u64,
}

impl Default for PpmiConfig {
    fn default() -> Self {
        PpmiConfig {
            params: PpmiParams::default(),
            dim: 300,
            seed: 0,
        }
    }
}

/// Counts → PPMI → truncated SVD; returns the rows of `U_dim Σ_dim`.
///
/// Words whose PPMI row is empty get an exactly-zero embedding row.
pub fn ppmi_embeddings<'a, I>(docs: I, vocab: &Vocabulary, config: &PpmiConfig) -> Result<EmbeddingMatrix>
where
    I: IntoIterator<Item = &'a [String]>,
{
    if config.dim == 0 || config.dim > vocab.len() {
        return Err(Error::invalid(
            "dim",
            format!("{} must be in 1..={} (vocabulary size)", config.dim, vocab.len()),
        ));
    }
    let counts = count_cooccurrence(docs, vocab)?.with_params(config.params)?;
    let ppmi = ppmi_transform(&counts)?;
    let svd = truncated_svd(&ppmi, config.dim, config.seed)?;
    let mut vectors = svd.scaled_left();
    for r in 0..ppmi.nrows() {
        if ppmi.row(r).0.is_empty() {
            vectors.row_mut(r).fill(0.0);
        }
    }
    EmbeddingMatrix::new(vocab.index().clone(), vectors)
}

/// Rejects dimensions outside [`SWEEP_DIMS`] and empty or repeated grids.
pub fn validate_sweep_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::invalid("dims", "empty sweep"));
    }
    for (i, d) in dims.iter().enumerate() {
        if !SWEEP_DIMS.contains(d) {
            return Err(Error::invalid("dims", format!("{d} is not one of {SWEEP_DIMS:?}")));
        }
        if dims[..i].contains(d) {
            return Err(Error::invalid("dims", format!("{d} listed twice")));
        }
    }
    Ok(())
}

/// One embedding per swept dimension, all other settings from `base`.
pub fn ppmi_sweep(
    docs: &[&[String]],
    vocab: &Vocabulary,
    base: &PpmiConfig,
    dims: &[usize],
) -> Result<Vec<(usize, EmbeddingMatrix)>> {
    validate_sweep_dims(dims)?;
    dims.iter()
        .map(|&dim| {
            let cfg = PpmiConfig { dim, ..*base };
            Ok((dim, ppmi_embeddings(docs.iter().copied(), vocab, &cfg)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(raw: &[&[&str]]) -> Vec<Vec<String>> {
        raw.iter().map(|d| d.iter().map(|s| s.to_string()).collect()).collect()
    }

    fn counts_for(raw: &[&[&str]]) -> CooccurrenceCounts {
        let d = docs(raw);
        let v = Vocabulary::from_tokens(d.iter().map(Vec::as_slice));
        count_cooccurrence(d.iter().map(Vec::as_slice), &v).unwrap()
    }

    #[test]
    fn single_bigram() {
        let c = counts_for(&[&["a", "b"]]);
        assert_eq!(c.pairs.get(0, 1), 1.0);
        assert_eq!(c.pairs.get(1, 0), 1.0);
        assert_eq!(c.total, 2.0);
    }

    #[test]
    fn repeated_word() {
        let c = counts_for(&[&["a", "b", "a"]]);
        assert_eq!(c.pairs.get(0, 1), 2.0);
        assert_eq!(c.pairs.get(1, 0), 2.0);
        assert_eq!(c.total, 4.0);
    }

    #[test]
    fn no_counting_across_documents() {
        let c = counts_for(&[&["a"], &["b"]]);
        assert_eq!(c.pairs.nnz(), 0);
        assert_eq!(c.total, 0.0);
        assert!(matches!(ppmi_transform(&c), Err(Error::EmptyCounts)));
    }

    #[test]
    fn unknown_token_is_an_error() {
        let d = docs(&[&["a", "z"]]);
        let v = Vocabulary::from_tokens(std::iter::once(&["a".to_string()][..]));
        assert!(matches!(
            count_cooccurrence(d.iter().map(Vec::as_slice), &v),
            Err(Error::UnknownWord(_))
        ));
    }

    #[test]
    fn log_two_cell_and_shift() {
        let params = PpmiParams { alpha: 1.0, shift: 1.0 };
        let c = counts_for(&[&["a", "b", "a", "b"]]).with_params(params).unwrap();
        assert_eq!(c.pairs.get(0, 1), 3.0);
        let m = ppmi_transform(&c).unwrap();
        assert!((m.get(0, 1) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(m.get(0, 0), 0.0);

        let shifted = c.with_params(PpmiParams { alpha: 1.0, shift: 2.0 }).unwrap();
        assert_eq!(ppmi_transform(&shifted).unwrap().get(0, 1), 0.0);
    }

    #[test]
    fn params_validation() {
        let c = counts_for(&[&["a", "b"]]);
        assert!(c.clone().with_params(PpmiParams { alpha: 0.0, shift: 1.0 }).is_err());
        assert!(c.clone().with_params(PpmiParams { alpha: 1.1, shift: 1.0 }).is_err());
        assert!(c.with_params(PpmiParams { alpha: 0.5, shift: 0.9 }).is_err());
    }

    #[test]
    fn embedding_dim_bounds() {
        let d = docs(&[&["a", "b", "c"]]);
        let v = Vocabulary::from_tokens(d.iter().map(Vec::as_slice));
        let cfg = PpmiConfig {
            dim: 4,
            ..Default::default()
        };
        assert!(ppmi_embeddings(d.iter().map(Vec::as_slice), &v, &cfg).is_err());
        let empty: Vec<Vec<String>> = vec![vec![]];
        let cfg = PpmiConfig {
            dim: 1,
            ..Default::default()
        };
        assert!(ppmi_embeddings(empty.iter().map(Vec::as_slice), &Vocabulary::default(), &cfg).is_err());
    }

    #[test]
    fn isolated_word_gets_zero_row() {
        let d = docs(&[&["a", "b", "a", "c"], &["lonely"]]);
        let v = Vocabulary::from_tokens(d.iter().map(Vec::as_slice));
        let cfg = PpmiConfig {
            dim: 2,
            params: PpmiParams { alpha: 1.0, shift: 1.0 },
            seed: 3,
        };
        let e = ppmi_embeddings(d.iter().map(Vec::as_slice), &v, &cfg).unwrap();
        assert!(e.is_zero_row(v.id_of("lonely").unwrap()));
    }

    #[test]
    fn sweep_grid() {
        assert_eq!(SWEEP_DIMS, [100, 200, 300, 400, 500]);
        assert!(validate_sweep_dims(&SWEEP_DIMS).is_ok());
        assert!(validate_sweep_dims(&[300]).is_ok());
        for bad in [&[][..], &[50], &[150], &[600], &[100, 100]] {
            assert!(validate_sweep_dims(bad).is_err(), "{bad:?}");
        }
    }
}
