//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.
#![allow(clippy::needless_range_loop)]

mod common;

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use semshift::align::{build_overlap, procrustes_align};
use semshift::corpus::{load_annotations, InstancePair, Vocabulary, WordIndex};
use semshift::eval::{binary_metrics, pearson_series};
use semshift::linalg::{truncated_svd, EmbeddingMatrix, SparseMatrix};
use semshift::llm::{
    change_factors, corpus_change_factor, cross_slice_pairs, judge_pairs, render_prompt, JudgeOptions, MockBackend,
    PromptTemplate,
};
use semshift::pipeline::{score_frame, StaticMethod};
use semshift::ppmi::{count_cooccurrence, ppmi_sweep, ppmi_transform, PpmiConfig, PpmiParams, SWEEP_DIMS};
use semshift::sgns::{pair_gradient, pair_objective, SgnsConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2} s, budget {limit_s} s", elapsed.as_secs_f64())
    })
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

// ---------------------------------------------------------------------------
// 1. PPMI against a brute-force recomputation

/// Naive recomputation straight from the token lists.
fn ppmi_oracle(docs: &[Vec<String>], words: &[String], alpha: f64, k: f64) -> Vec<Vec<f64>> {
    let n = words.len();
    let mut pair = vec![vec![0.0f64; n]; n];
    for (wi, w) in words.iter().enumerate() {
        for (ci, c) in words.iter().enumerate() {
            for doc in docs {
                for t in 0..doc.len().saturating_sub(1) {
                    if &doc[t] == w && &doc[t + 1] == c {
                        pair[wi][ci] += 1.0;
                    }
                    if &doc[t + 1] == w && &doc[t] == c {
                        pair[wi][ci] += 1.0;
                    }
                }
            }
        }
    }
    let word_total: Vec<f64> = (0..n).map(|w| (0..n).map(|c| pair[w][c]).sum()).collect();
    let ctx_total: Vec<f64> = (0..n).map(|c| (0..n).map(|w| pair[w][c]).sum()).collect();
    let norm: f64 = ctx_total.iter().map(|c| c.powf(alpha)).sum();
    let mut out = vec![vec![0.0; n]; n];
    for w in 0..n {
        for c in 0..n {
            if pair[w][c] > 0.0 {
                let v = (pair[w][c] * norm / (word_total[w] * ctx_total[c].powf(alpha))).ln() - k.ln();
                out[w][c] = v.max(0.0);
            }
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    let mut corpora = 0;
    while corpora < 50 {
        let types = rng.random_range(2..=20);
        let budget = rng.random_range(2..=200);
        let mut docs = Vec::new();
        let mut used = 0;
        while used < budget {
            let len = rng.random_range(1..=(budget - used).min(30));
            docs.push(
                (0..len)
                    .map(|_| format!("t{}", rng.random_range(0..types)))
                    .collect::<Vec<String>>(),
            );
            used += len;
        }
        let vocab = Vocabulary::from_tokens(docs.iter().map(Vec::as_slice));
        let counts = count_cooccurrence(docs.iter().map(Vec::as_slice), &vocab).map_err(|e| e.to_string())?;
        if counts.total == 0.0 {
            continue;
        }
        let alpha = [0.75, 1.0, rng.random_range(0.1..1.0)][corpora % 3];
        let shift = [1.0, 2.0, rng.random_range(1.0..5.0)][corpora % 3];
        let counts = counts
            .with_params(PpmiParams { alpha, shift })
            .map_err(|e| e.to_string())?;
        let m = ppmi_transform(&counts).map_err(|e| e.to_string())?;
        let words = vocab.index().words().to_vec();
        let oracle = ppmi_oracle(&docs, &words, alpha, shift);
        for (w, row) in oracle.iter().enumerate() {
            for (c, &expected) in row.iter().enumerate() {
                worst = worst.max((m.get(w, c) - expected).abs());
            }
        }
        corpora += 1;
    }
    ensure(worst <= 1e-9, || format!("max cell error {worst:.3e} > 1e-9"))?;
    within_budget(start.elapsed(), 5.0)?;
    Ok(format!(
        "50 corpora, max cell error {worst:.1e}, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// 2. SGNS gradient check

fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-8 {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let h = 1e-5;
    let d = 10;
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for _ in 0..100 {
        let vec10 = |rng: &mut ChaCha8Rng| (0..d).map(|_| 0.5 * gaussian(rng)).collect::<Vec<f64>>();
        let w = vec10(&mut rng);
        let c = vec10(&mut rng);
        let k = rng.random_range(1..=10);
        let negs: Vec<Vec<f64>> = (0..k).map(|_| vec10(&mut rng)).collect();
        let neg_refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let g = pair_gradient(&w, &c, &neg_refs);

        let f = |w: &[f64], c: &[f64], n: &[Vec<f64>]| {
            let refs: Vec<&[f64]> = n.iter().map(Vec::as_slice).collect();
            pair_objective(w, c, &refs)
        };
        for i in 0..d {
            let (mut p, mut m) = (w.clone(), w.clone());
            p[i] += h;
            m[i] -= h;
            let fd = (f(&p, &c, &negs) - f(&m, &c, &negs)) / (2.0 * h);
            worst = worst.max(relative_error(g.word[i], fd));

            let (mut p, mut m) = (c.clone(), c.clone());
            p[i] += h;
            m[i] -= h;
            let fd = (f(&w, &p, &negs) - f(&w, &m, &negs)) / (2.0 * h);
            worst = worst.max(relative_error(g.context[i], fd));

            for j in 0..k {
                let (mut p, mut m) = (negs.clone(), negs.clone());
                p[j][i] += h;
                m[j][i] -= h;
                let fd = (f(&w, &c, &p) - f(&w, &c, &m)) / (2.0 * h);
                worst = worst.max(relative_error(g.negatives[j][i], fd));
                checked += 1;
            }
            checked += 2;
        }
    }
    ensure(worst < 1e-4, || format!("max relative error {worst:.3e} >= 1e-4"))?;
    within_budget(start.elapsed(), 2.0)?;
    Ok(format!(
        "100 configurations, {checked} coordinates, max relative error {worst:.1e}, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// 3. Procrustes recovery of planted maps

fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn words(n: usize) -> WordIndex {
    WordIndex::from((0..n).map(|i| format!("w{i}")).collect::<Vec<_>>())
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (d, n) = (10, 50);
    let (mut worst_residual, mut worst_defect, mut min_margin) = (0.0f64, 0.0f64, f64::INFINITY);
    for trial in 0..20 {
        let a = DMatrix::from_fn(n, d, |_, _| gaussian(&mut rng));
        let r = random_orthogonal(d, &mut rng);
        let scale = rng.random_range(0.5..3.0);
        let shift = DMatrix::from_fn(1, d, |_, _| gaussian(&mut rng));
        let mut b = &a * &r * scale;
        for mut row in b.row_iter_mut() {
            row += &shift;
        }
        let ea = EmbeddingMatrix::new(words(n), a).map_err(|e| e.to_string())?;
        let eb = EmbeddingMatrix::new(words(n), b.clone()).map_err(|e| e.to_string())?;
        let overlap = build_overlap(&ea, &eb).map_err(|e| e.to_string())?;
        let aligned = procrustes_align(&ea, &eb, &overlap).map_err(|e| e.to_string())?;
        worst_residual = worst_residual.max(aligned.overlap_residual());
        worst_defect = worst_defect.max(aligned.transform.orthogonality_defect());

        // objective on centered, scaled overlap rows
        let t = &aligned.transform;
        let standardize = |m: &DMatrix<f64>, center: &[f64], s: f64| {
            DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] - center[j]) / s)
        };
        let a_cs = standardize(ea.vectors(), &t.center_a, t.scale_a);
        let b_cs = standardize(&b, &t.center_b, t.scale_b);
        let objective = |q: &DMatrix<f64>| (&b_cs * q - &a_cs).norm_squared();
        let best = objective(&t.rotation_matrix());
        for _ in 0..1000 {
            let q = random_orthogonal(d, &mut rng);
            let margin = objective(&q) - best;
            if margin < 0.0 {
                return Err(format!(
                    "trial {trial}: a random orthogonal matrix beat W* by {:.3e}",
                    -margin
                ));
            }
            min_margin = min_margin.min(margin);
        }
    }
    ensure(worst_residual < 1e-8, || {
        format!("residual {worst_residual:.3e} >= 1e-8")
    })?;
    ensure(worst_defect < 1e-8, || {
        format!("orthogonality defect {worst_defect:.3e} >= 1e-8")
    })?;
    within_budget(start.elapsed(), 30.0)?;
    Ok(format!(
        "20 trials, residual {worst_residual:.1e}, defect {worst_defect:.1e}, W* best vs 20000 random (min margin {min_margin:.2e}), {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// 4. Truncated SVD

/// One-sided Jacobi: singular values as column norms after orthogonalization.
fn jacobi_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| m[(i, j)]).collect()).collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = a[p].iter().map(|x| x * x).sum();
                let beta: f64 = a[q].iter().map(|x| x * x).sum();
                let gamma: f64 = a[p].iter().zip(&a[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (x, y) = (a[p][i], a[q][i]);
                    a[p][i] = c * x - s * y;
                    a[q][i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = a
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst_sv = 0.0f64;
    let mut cases = 0;

    // generic 30×30 inputs: the sketch spans the full space once k ≥ 20
    for &k in &[20, 25, 30] {
        for _ in 0..5 {
            let a = DMatrix::from_fn(30, 30, |_, _| gaussian(&mut rng));
            let oracle = jacobi_singular_values(&a);
            let svd = truncated_svd(&a, k, rng.random()).map_err(|e| e.to_string())?;
            for i in 0..k {
                worst_sv = worst_sv.max((svd.singular_values[i] - oracle[i]).abs());
            }
            cases += 1;
        }
    }
    // small k on 30×30 inputs with decaying spectra
    for &k in &[1, 3, 5, 10] {
        for _ in 0..5 {
            let u = random_orthogonal(30, &mut rng);
            let v = random_orthogonal(30, &mut rng);
            let sigma = DMatrix::from_fn(30, 30, |i, j| if i == j { 10.0 * 0.5f64.powi(i as i32) } else { 0.0 });
            let a = &u * sigma * v.transpose();
            let oracle = jacobi_singular_values(&a);
            let svd = truncated_svd(&a, k, rng.random()).map_err(|e| e.to_string())?;
            for i in 0..k {
                worst_sv = worst_sv.max((svd.singular_values[i] - oracle[i]).abs());
            }
            cases += 1;
        }
    }
    // sparse 30×30 input, full k
    let cells: BTreeMap<(usize, usize), f64> = (0..120)
        .map(|_| ((rng.random_range(0..30), rng.random_range(0..30)), gaussian(&mut rng)))
        .collect();
    let sparse = SparseMatrix::from_triplets(30, 30, cells.into_iter().map(|((r, c), v)| (r, c, v)).collect())
        .map_err(|e| e.to_string())?;
    let oracle = jacobi_singular_values(&sparse.to_dense());
    let svd = truncated_svd(&sparse, 30, 7).map_err(|e| e.to_string())?;
    for i in 0..30 {
        worst_sv = worst_sv.max((svd.singular_values[i] - oracle[i]).abs());
    }
    cases += 1;

    // rank-r reconstruction with r ≤ k
    let mut worst_rec = 0.0f64;
    for &(r, k) in &[(1, 1), (2, 2), (2, 5), (3, 10), (5, 5), (5, 20)] {
        let x = DMatrix::from_fn(50, r, |_, _| gaussian(&mut rng));
        let y = DMatrix::from_fn(40, r, |_, _| gaussian(&mut rng));
        let a = &x * y.transpose();
        let svd = truncated_svd(&a, k, rng.random()).map_err(|e| e.to_string())?;
        worst_rec = worst_rec.max((svd.reconstruct() - &a).norm());
    }
    ensure(worst_sv <= 1e-6, || {
        format!("singular value error {worst_sv:.3e} > 1e-6")
    })?;
    ensure(worst_rec < 1e-8, || {
        format!("reconstruction error {worst_rec:.3e} >= 1e-8")
    })?;
    Ok(format!(
        "{cases} matrices, max singular value error {worst_sv:.1e}; rank-r reconstruction error {worst_rec:.1e}; {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// 5. Planted change, end to end

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    for seed in 0..5u64 {
        let (corpus, planted) = common::planted_change_corpus(seed, 600);
        let methods = [
            StaticMethod::Ppmi(PpmiConfig {
                dim: 10,
                seed,
                ..Default::default()
            }),
            StaticMethod::Sgns(SgnsConfig {
                dim: 20,
                negatives: 5,
                window: 2,
                epochs: 10,
                seed,
                ..Default::default()
            }),
        ];
        for method in &methods {
            let scores = score_frame(&corpus, "2019", "2020", method, None).map_err(|e| e.to_string())?;
            ensure(scores.table.len() == 30, || {
                format!(
                    "seed {seed} {}: scored {} words, expected 30",
                    method.label(),
                    scores.table.len()
                )
            })?;
            let ranking = scores.ranking();
            ensure(ranking[0].0 == planted, || {
                format!(
                    "seed {seed} {}: planted `{planted}` not first; top is {:?}",
                    method.label(),
                    &ranking[..3]
                )
            })?;
            notes.push(ranking[0].1 - ranking[1].1);
        }
    }
    within_budget(start.elapsed(), 120.0)?;
    let margin = notes.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(format!(
        "PPMI and SGNS rank the planted word first for 5 seeds (min gap to runner-up {margin:.3}), {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// 6. Statistics

/// Pearson r with compensated sums over the centered series.
fn pearson_r_oracle(x: &[f64], y: &[f64]) -> f64 {
    fn kahan(it: impl Iterator<Item = f64>) -> f64 {
        let (mut s, mut c) = (0.0f64, 0.0f64);
        for v in it {
            let t = v - c;
            let u = s + t;
            c = (u - s) - t;
            s = u;
        }
        s
    }
    let n = x.len() as f64;
    let mx = kahan(x.iter().copied()) / n;
    let my = kahan(y.iter().copied()) / n;
    let sxy = kahan(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let sxx = kahan(x.iter().map(|a| (a - mx) * (a - mx)));
    let syy = kahan(y.iter().map(|b| (b - my) * (b - my)));
    sxy / (sxx.sqrt() * syy.sqrt())
}

/// Two-sided p from numerical integration of the t density. With
/// `t = √ν tan θ` the density becomes proportional to `cos^(ν−1) θ`, so
/// `p = ∫_{θ₀}^{π/2} cos^(ν−1) / ∫_0^{π/2} cos^(ν−1)`, `θ₀ = atan(|t|/√ν)`.
fn p_value_oracle(r: f64, n: usize) -> f64 {
    let nu = (n - 2) as f64;
    let t = r * (nu / (1.0 - r * r)).sqrt();
    let theta0 = (t.abs() / nu.sqrt()).atan();
    let f = |th: f64| th.cos().powf(nu - 1.0);
    let simpson = |a: f64, b: f64| {
        let steps = 20_000;
        let h = (b - a) / steps as f64;
        let mut s = f(a) + f(b);
        for i in 1..steps {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let half = std::f64::consts::FRAC_PI_2;
    simpson(theta0, half) / simpson(0.0, half)
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (mut worst_r, mut worst_p) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let rho = rng.random_range(-0.95..0.95);
        let x: Vec<f64> = (0..16).map(|_| gaussian(&mut rng)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|xi| rho * xi + (1.0 - rho * rho).sqrt() * gaussian(&mut rng))
            .collect();
        let got = pearson_series(&x, &y).map_err(|e| e.to_string())?;
        let r = pearson_r_oracle(&x, &y);
        worst_r = worst_r.max((got.r - r).abs());
        worst_p = worst_p.max((got.p - p_value_oracle(r, 16)).abs());
    }
    ensure(worst_r <= 1e-10, || format!("r error {worst_r:.3e} > 1e-10"))?;
    ensure(worst_p <= 1e-6, || format!("p error {worst_p:.3e} > 1e-6"))?;

    // hand-counted confusion matrices
    let cases: [(&[u8], &[u8], [usize; 4]); 3] = [
        (&[0, 0, 1, 1], &[0, 1, 0, 1], [1, 1, 1, 1]),
        (&[0, 1, 0], &[0, 1, 0], [2, 0, 0, 1]),
        (&[0, 0, 0, 1, 1, 0, 1], &[0, 1, 1, 1, 0, 0, 0], [2, 2, 2, 1]),
    ];
    for (pred, gold, [tp, fp, fn_, tn]) in cases {
        let m = binary_metrics(pred, gold).map_err(|e| e.to_string())?;
        ensure((m.tp, m.fp, m.fn_, m.tn) == (tp, fp, fn_, tn), || {
            format!("confusion for {pred:?}/{gold:?}: got {m:?}")
        })?;
        let f1 = if 2 * tp + fp + fn_ == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
        };
        ensure(m.f1 == f1 && m.accuracy == (tp + tn) as f64 / pred.len() as f64, || {
            format!("F1/accuracy for {pred:?}/{gold:?}: got {m:?}")
        })?;
    }

    // majority class: all-1 predictions on 60% gold-1
    let gold: Vec<u8> = (0..100).map(|i| u8::from(i < 60)).collect();
    let m = binary_metrics(&[1; 100], &gold).map_err(|e| e.to_string())?;
    ensure((m.accuracy - 0.60).abs() < 1e-12 && m.f1 == 0.0, || {
        format!("majority class: {m:?}")
    })?;
    Ok(format!(
        "100 series n=16: r error {worst_r:.1e}, p error {worst_p:.1e}; confusion counts exact; majority class accuracy {:.2} F1 {:.2}",
        m.accuracy, m.f1
    ))
}

// ---------------------------------------------------------------------------
// 7. LLM pipeline with the mock backend

fn criterion_7() -> Outcome {
    let (corpus, truth) = common::graded_change_corpus(707, 10, 20);
    let mut pairs = Vec::new();
    for (word, _) in &truth {
        pairs.extend(cross_slice_pairs(&corpus, "2020", "2021", word, 500, 7).map_err(|e| e.to_string())?);
    }
    let opts = |parallelism| JudgeOptions {
        parallelism,
        max_retries: 0,
        backoff_base_ms: 0,
        seed: 7,
    };

    // determinism over 200 pairs
    let subset: Vec<InstancePair> = pairs.iter().step_by(pairs.len() / 200).take(200).cloned().collect();
    ensure(subset.len() == 200, || {
        format!("built {} pairs, expected 200", subset.len())
    })?;
    let serial = judge_pairs(&subset, PromptTemplate::Date, &MockBackend, &opts(1)).map_err(|e| e.to_string())?;
    let parallel = judge_pairs(&subset, PromptTemplate::Date, &MockBackend, &opts(8)).map_err(|e| e.to_string())?;
    let multiset = |o: &semshift::llm::JudgeOutcome| {
        let mut v: Vec<(String, u8)> = o.verdicts.iter().map(|v| (v.instance_id.clone(), v.value)).collect();
        v.sort();
        v
    };
    ensure(serial.verdicts.len() == 200 && serial.failures.is_empty(), || {
        format!("{} verdicts, {} failures", serial.verdicts.len(), serial.failures.len())
    })?;
    ensure(multiset(&serial) == multiset(&parallel), || {
        "verdicts differ between parallelism 1 and 8".into()
    })?;

    // change factor equals the hand-counted fraction
    let all = judge_pairs(&pairs, PromptTemplate::Date, &MockBackend, &opts(4)).map_err(|e| e.to_string())?;
    let factors = change_factors(&pairs, &all.verdicts, "2020-2021").map_err(|e| e.to_string())?;
    let target_of: HashMap<&str, &str> = pairs.iter().map(|p| (p.id.as_str(), p.target.as_str())).collect();
    let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for v in &all.verdicts {
        let e = tally.entry(target_of[v.instance_id.as_str()]).or_default();
        e.0 += usize::from(v.value == 1);
        e.1 += 1;
    }
    for (word, (same, total)) in &tally {
        let hand = *same as f64 / *total as f64;
        let got = factors.table.get(word).ok_or_else(|| format!("no factor for {word}"))?;
        ensure(got == hand, || format!("{word}: S = {got}, hand count {hand}"))?;
    }
    let values: Vec<u8> = all.verdicts.iter().map(|v| v.value).collect();
    let pooled = corpus_change_factor(&values).map_err(|e| e.to_string())?;
    let hand = values.iter().filter(|&&v| v == 1).count() as f64 / values.len() as f64;
    ensure(pooled == hand, || format!("pooled S {pooled} vs hand {hand}"))?;

    // sign convention on graded data
    let s: Vec<f64> = truth.iter().map(|(w, _)| factors.table.get(w).unwrap()).collect();
    let g: Vec<f64> = truth.iter().map(|(_, g)| *g).collect();
    let corr = pearson_series(&s, &g).map_err(|e| e.to_string())?;
    ensure(corr.r < 0.0, || format!("corr(S, g) = {} is not negative", corr.r))?;
    Ok(format!(
        "200 pairs identical at parallelism 1 and 8; S matches hand counts for {} words; corr(S, g) = {:.3} (p = {:.1e})",
        tally.len(),
        corr.r,
        corr.p
    ))
}

// ---------------------------------------------------------------------------
// 8. Prompt fidelity

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

fn criterion_8() -> Outcome {
    let pair = InstancePair::new(
        "fixture",
        "Just saw a delta variant headline, stay safe everyone",
        "Flying delta to Atlanta tomorrow morning",
        common::date(2020, 6, 14),
        common::date(2021, 8, 2),
        "delta",
        None,
    )
    .map_err(|e| e.to_string())?;
    let read = |name: String| std::fs::read_to_string(fixture(&name)).map_err(|e| format!("{name}: {e}"));
    for t in PromptTemplate::ALL {
        let rendered = render_prompt(t, &pair).map_err(|e| e.to_string())?;
        ensure(
            read(format!("prompts/{}.context.txt", t.name()))? == t.context(),
            || format!("{t}: context differs from fixture"),
        )?;
        ensure(read(format!("prompts/{}.query.txt", t.name()))? == t.query(), || {
            format!("{t}: query template differs from fixture")
        })?;
        ensure(
            read(format!("prompts/{}.rendered.txt", t.name()))? == rendered.query,
            || format!("{t}: rendered query differs from fixture"),
        )?;
        ensure(rendered.context == t.context(), || {
            format!("{t}: rendered context altered")
        })?;
    }
    Ok("no_date, date and qiq contexts, templates and renderings byte-identical".into())
}

// ---------------------------------------------------------------------------
// 9. Published-score fixtures

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let table = load_annotations(fixture("annotations.csv")).map_err(|e| e.to_string())?;
    ensure(table.len() == 34, || {
        format!("{} annotated words, expected 34", table.len())
    })?;
    ensure(table.get("delta") == Some(1.00), || {
        format!("delta = {:?}", table.get("delta"))
    })?;
    ensure(table.get("pogrom") == Some(0.05), || {
        format!("pogrom = {:?}", table.get("pogrom"))
    })?;

    ensure(SWEEP_DIMS == [100, 200, 300, 400, 500], || {
        format!("sweep grid {SWEEP_DIMS:?}")
    })?;
    let corpus = common::wide_corpus(909, 520, 2_000);
    let slice = corpus.slice("2019").ok_or("missing slice")?;
    let docs: Vec<&[String]> = slice.token_streams().collect();
    let base = PpmiConfig::default();
    let out = ppmi_sweep(&docs, &slice.vocab, &base, &SWEEP_DIMS).map_err(|e| e.to_string())?;
    let dims: Vec<usize> = out
        .iter()
        .map(|(d, e)| {
            assert_eq!(*d, e.dim());
            e.dim()
        })
        .collect();
    ensure(dims == SWEEP_DIMS, || format!("sweep produced dims {dims:?}"))?;
    for bad in [&[50][..], &[150], &[600], &[]] {
        ensure(ppmi_sweep(&docs, &slice.vocab, &base, bad).is_err(), || {
            format!("sweep accepted {bad:?}")
        })?;
    }
    Ok(format!(
        "34 words, delta 1.00, pogrom 0.05; sweep ran dims {dims:?} on {} types and rejects others, {:.2} s",
        slice.vocab.len(),
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------

fn main() {
    let start = Instant::now();
    let criteria: [Criterion; 9] = [
        ("PPMI oracle equivalence", criterion_1),
        ("SGNS gradient check", criterion_2),
        ("Procrustes recovery", criterion_3),
        ("Truncated SVD", criterion_4),
        ("Planted-change end-to-end", criterion_5),
        ("Statistics", criterion_6),
        ("LLM pipeline determinism", criterion_7),
        ("Prompt fidelity", criterion_8),
        ("Published-score fixtures", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {} [{name}]: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} [{name}]: FAIL ({why})", i + 1);
            }
        }
    }
    let total = start.elapsed().as_secs_f64();
    if total < 300.0 {
        println!(
            "criterion 10 [Runtime, mock backend only]: PASS (acceptance run {total:.1} s < 300 s, no network used)"
        );
    } else {
        failed += 1;
        println!("criterion 10 [Runtime, mock backend only]: FAIL (acceptance run {total:.1} s >= 300 s)");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
