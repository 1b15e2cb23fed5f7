//! Skip-gram with negative sampling, trained from scratch per time slice.
//!
//! Each observed (word, context) pair within the window contributes
//! `ln σ(c·w) + Σ_neg ln σ(−n·w)` with `k` negatives drawn from the unigram
//! distribution. Training is plain SGD ascent with a linearly decaying rate.
//! The exported embedding is the word matrix `W`.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Vocabulary, WordIndex};
use crate::linalg::EmbeddingMatrix;
use crate::{Error, Result};

/// Final learning rate as a fraction of the initial one.
pub const MIN_LR_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgnsConfig {
    pub dim: usize,
    pub negatives: usize,
    pub window: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dim: 100,
            negatives: 10,
            window: 5,
            epochs: 50,
            learning_rate: 0.025,
            seed: 0,
        }
    }
}

impl SgnsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if self.negatives == 0 {
            return Err(Error::invalid("negatives", "must be at least 1"));
        }
        if self.window == 0 {
            return Err(Error::invalid("window", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate", "must be positive"));
        }
        Ok(())
    }
}

/// Unigram noise distribution `P(c) ∝ #(c)`. Zero-count entries are never drawn.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    dist: WeightedIndex<f64>,
}

impl NoiseSampler {
    pub fn new(counts: &[u64]) -> Result<Self> {
        let weights: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let dist = WeightedIndex::new(weights)
            .map_err(|e| Error::invalid("counts", format!("cannot build noise distribution: {e}")))?;
        Ok(NoiseSampler { dist })
    }

    pub fn from_vocabulary(vocab: &Vocabulary) -> Result<Self> {
        Self::new(vocab.counts())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }
}

pub fn noise_sample<R: Rng + ?Sized>(sampler: &NoiseSampler, rng: &mut R) -> usize {
    sampler.sample(rng)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)`, accurate for large `|x|`.
pub fn log_sigmoid(x: f64) -> f64 {
    -((-x).max(0.0) + (-x.abs()).exp().ln_1p())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ln σ(v_c·v_w) + Σ ln σ(−v_n·v_w)` for one observed pair.
pub fn pair_objective(word: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    log_sigmoid(dot(context, word)) + negatives.iter().map(|n| log_sigmoid(-dot(n, word))).sum::<f64>()
}

/// Partial derivatives of [`pair_objective`].
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub word: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn pair_gradient(word: &[f64], context: &[f64], negatives: &[&[f64]]) -> PairGradient {
    let pos = 1.0 - sigmoid(dot(context, word));
    let mut d_word: Vec<f64> = context.iter().map(|c| pos * c).collect();
    let d_context = word.iter().map(|w| pos * w).collect();
    let mut d_neg = Vec::with_capacity(negatives.len());
    for n in negatives {
        let s = sigmoid(dot(n, word));
        for (dw, nv) in d_word.iter_mut().zip(n.iter()) {
            *dw -= s * nv;
        }
        d_neg.push(word.iter().map(|w| -s * w).collect());
    }
    PairGradient {
        word: d_word,
        context: d_context,
        negatives: d_neg,
    }
}

#[derive(Debug, Clone)]
pub struct SgnsModel {
    pub words: WordIndex,
    /// `W`, one row per word.
    pub word_vectors: DMatrix<f64>,
    /// `C`, one row per context.
    pub context_vectors: DMatrix<f64>,
    pub config: SgnsConfig,
}

impl SgnsModel {
    pub fn embedding(&self) -> Result<EmbeddingMatrix> {
        EmbeddingMatrix::new(self.words.clone(), self.word_vectors.clone())
    }
}

/// One observed pair with a fixed set of negatives, for monitoring the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSample {
    pub word: usize,
    pub context: usize,
    pub negatives: Vec<usize>,
}

/// Epoch-by-epoch trainer. [`train`] drives it to completion.
pub struct SgnsTrainer {
    config: SgnsConfig,
    words: WordIndex,
    docs: Vec<Vec<usize>>,
    sampler: NoiseSampler,
    rng: ChaCha8Rng,
    w: Vec<f64>,
    c: Vec<f64>,
    step: u64,
    total_steps: u64,
    epochs_done: usize,
}

impl SgnsTrainer {
    pub fn new<'a, I>(docs: I, vocab: &Vocabulary, config: SgnsConfig) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        config.validate()?;
        let docs = docs
            .into_iter()
            .map(|d| {
                d.iter()
                    .map(|t| vocab.id_of(t).ok_or_else(|| Error::UnknownWord(t.clone())))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if docs.iter().all(Vec::is_empty) || vocab.is_empty() {
            return Err(Error::InsufficientData("SGNS needs a nonempty slice".into()));
        }
        let sampler = NoiseSampler::from_vocabulary(vocab)?;
        let pairs_per_epoch: u64 = docs.iter().map(|d| window_pairs(d.len(), config.window)).sum();

        let (n, dim) = (vocab.len(), config.dim);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let half = 0.5 / dim as f64;
        let w = (0..n * dim).map(|_| rng.random_range(-half..half)).collect();
        Ok(SgnsTrainer {
            config,
            words: vocab.index().clone(),
            docs,
            sampler,
            rng,
            w,
            c: vec![0.0; n * dim],
            step: 0,
            total_steps: pairs_per_epoch * config.epochs as u64,
            epochs_done: 0,
        })
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    fn learning_rate(&self) -> f64 {
        let progress = if self.total_steps == 0 {
            0.0
        } else {
            (self.step as f64 / self.total_steps as f64).min(1.0)
        };
        self.config.learning_rate * (1.0 - (1.0 - MIN_LR_FRACTION) * progress)
    }

    /// One pass over every (word, context) pair in document order.
    pub fn run_epoch(&mut self) {
        let dim = self.config.dim;
        let window = self.config.window;
        let mut neu = vec![0.0; dim];
        let docs = std::mem::take(&mut self.docs);
        for doc in &docs {
            for (i, &word) in doc.iter().enumerate() {
                let lo = i.saturating_sub(window);
                let hi = (i + window).min(doc.len() - 1);
                for (j, &context) in doc.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let lr = self.learning_rate();
                    neu.fill(0.0);
                    self.update(word, context, 1.0, lr, &mut neu);
                    for _ in 0..self.config.negatives {
                        let noise = self.sampler.sample(&mut self.rng);
                        if noise == context {
                            continue;
                        }
                        self.update(word, noise, 0.0, lr, &mut neu);
                    }
                    let wrow = &mut self.w[word * dim..(word + 1) * dim];
                    for (x, g) in wrow.iter_mut().zip(&neu) {
                        *x += g;
                    }
                    self.step += 1;
                }
            }
        }
        self.docs = docs;
        self.epochs_done += 1;
    }

    fn update(&mut self, word: usize, target: usize, label: f64, lr: f64, neu: &mut [f64]) {
        let dim = self.config.dim;
        let wrow = &self.w[word * dim..(word + 1) * dim];
        let crow = &mut self.c[target * dim..(target + 1) * dim];
        let g = (label - sigmoid(dot(wrow, crow))) * lr;
        for k in 0..dim {
            neu[k] += g * crow[k];
            crow[k] += g * wrow[k];
        }
    }

    /// Draws `count` observed pairs with `negatives` noise contexts each.
    pub fn objective_sample(&self, count: usize, seed: u64) -> Vec<ObjectiveSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let window = self.config.window as i64;
        let nonempty: Vec<&Vec<usize>> = self.docs.iter().filter(|d| d.len() > 1).collect();
        if nonempty.is_empty() {
            return Vec::new();
        }
        (0..count)
            .map(|_| {
                let doc = nonempty[rng.random_range(0..nonempty.len())];
                let i = rng.random_range(0..doc.len());
                let j = loop {
                    let off = rng.random_range(-window..=window);
                    let j = i as i64 + off;
                    if off != 0 && j >= 0 && (j as usize) < doc.len() {
                        break j as usize;
                    }
                };
                ObjectiveSample {
                    word: doc[i],
                    context: doc[j],
                    // training skips noise draws that hit the observed context
                    negatives: (0..self.config.negatives)
                        .map(|_| self.sampler.sample(&mut rng))
                        .filter(|&n| n != doc[j])
                        .collect(),
                }
            })
            .collect()
    }

    /// Mean [`pair_objective`] over a fixed sample under the current parameters.
    pub fn mean_objective(&self, sample: &[ObjectiveSample]) -> f64 {
        let dim = self.config.dim;
        let w = |i: usize| &self.w[i * dim..(i + 1) * dim];
        let c = |i: usize| &self.c[i * dim..(i + 1) * dim];
        let total: f64 = sample
            .iter()
            .map(|s| {
                let negs: Vec<&[f64]> = s.negatives.iter().map(|&n| c(n)).collect();
                pair_objective(w(s.word), c(s.context), &negs)
            })
            .sum();
        total / sample.len().max(1) as f64
    }

    pub fn into_model(self) -> SgnsModel {
        let n = self.words.len();
        let dim = self.config.dim;
        SgnsModel {
            words: self.words,
            word_vectors: DMatrix::from_row_slice(n, dim, &self.w),
            context_vectors: DMatrix::from_row_slice(n, dim, &self.c),
            config: self.config,
        }
    }
}

fn window_pairs(len: usize, window: usize) -> u64 {
    (0..len)
        .map(|i| (i.min(window) + (len - 1 - i).min(window)) as u64)
        .sum()
}

pub fn train<'a, I>(docs: I, vocab: &Vocabulary, config: SgnsConfig) -> Result<SgnsModel>
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut trainer = SgnsTrainer::new(docs, vocab, config)?;
    for _ in 0..config.epochs {
        trainer.run_epoch();
    }
    Ok(trainer.into_model())
}
