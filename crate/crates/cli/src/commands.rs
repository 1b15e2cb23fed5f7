//! Subcommand implementations.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use semshift::contextual::classify_by_threshold;
use semshift::contextual::{corpus_change_scores, instance_distances, load_embeddings, slice_means, Placement};
use semshift::corpus::{
    load_annotations, load_corpus, load_instance_pairs, AnnotationTable, Granularity, InstancePair, TimeSlicedCorpus,
};
use semshift::eval::{binary_metrics, default_threshold_grid, emit_report, optimize_threshold, pearson, EvalReport};
use semshift::linalg::EmbeddingMatrix;
use semshift::llm::{
    change_factors, cross_slice_pairs, judge_resumable, HttpBackend, JudgeOptions, JudgeOutcome, LlmBackend,
    MockBackend, PromptTemplate, VerdictLog,
};
use semshift::pipeline::{score_embeddings, slice_embedding, StaticMethod};
use semshift::ppmi::{validate_sweep_dims, PpmiConfig, PpmiParams, SWEEP_DIMS};
use semshift::sgns::SgnsConfig;

use crate::settings::Settings;
use crate::tables::{read_distances, read_scores, safe_label, write_distances, write_file, write_scores};

fn corpus(s: &Settings) -> Result<TimeSlicedCorpus> {
    let path = s.require_path("corpus")?;
    let granularity: Granularity = s.require("granularity")?;
    load_corpus(&path, granularity).with_context(|| format!("loading corpus {}", path.display()))
}

fn annotations(s: &Settings) -> Result<Option<AnnotationTable>> {
    s.path("annotations")
        .map(|p| load_annotations(&p).with_context(|| format!("loading annotations {}", p.display())))
        .transpose()
}

fn pairs(s: &Settings, key: &str) -> Result<Vec<InstancePair>> {
    let path = s.require_path(key)?;
    let load = load_instance_pairs(&path).with_context(|| format!("loading pairs {}", path.display()))?;
    for w in &load.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(load.pairs)
}

/// Explicit `targets`, else the annotated words, else none (score everything).
fn targets(s: &Settings, ann: Option<&AnnotationTable>) -> Option<Vec<String>> {
    let explicit = s.list("targets");
    if !explicit.is_empty() {
        return Some(explicit);
    }
    ann.map(|a| a.words().map(String::from).collect())
}

fn ppmi_config(s: &Settings, dim: usize) -> Result<PpmiConfig> {
    let params = PpmiParams {
        alpha: s.require("alpha")?,
        shift: s.require("shift_k")?,
    };
    params.validate()?;
    Ok(PpmiConfig {
        params,
        dim,
        seed: s.seed()?,
    })
}

fn sgns_config(s: &Settings, dim: usize, negatives: usize) -> Result<SgnsConfig> {
    let cfg = SgnsConfig {
        dim,
        negatives,
        window: s.require("window")?,
        epochs: s.require("epochs")?,
        learning_rate: s.require("lr")?,
        seed: s.seed()?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn static_method(s: &Settings, method: &str) -> Result<StaticMethod> {
    match method {
        "ppmi" => Ok(StaticMethod::Ppmi(ppmi_config(s, s.get("dim")?.unwrap_or(300))?)),
        "sgns" => Ok(StaticMethod::Sgns(sgns_config(
            s,
            s.get("dim")?.unwrap_or(100),
            s.require("negatives")?,
        )?)),
        other => bail!("`{other}` is not a static embedding method"),
    }
}

fn backend(s: &Settings) -> Result<Box<dyn LlmBackend>> {
    match s.require::<String>("backend")?.as_str() {
        "mock" => Ok(Box::new(MockBackend)),
        "http" => Ok(Box::new(HttpBackend::new(s.backend_config()?)?)),
        other => bail!("unknown backend `{other}` (expected mock or http)"),
    }
}

fn judge_options(s: &Settings) -> Result<JudgeOptions> {
    let opts = JudgeOptions {
        parallelism: s.require("parallelism")?,
        max_retries: s.require("max_retries")?,
        backoff_base_ms: s.require("backoff_ms")?,
        seed: s.seed()?,
    };
    if opts.parallelism == 0 {
        bail!("parallelism must be at least 1");
    }
    Ok(opts)
}

fn finish_judging(outcome: &JudgeOutcome, log: &VerdictLog) -> Result<()> {
    if let Some(reason) = &outcome.aborted {
        bail!(
            "judging aborted: {reason}; {} verdicts saved to {}, rerun to resume",
            outcome.verdicts.len(),
            log.path().display()
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------

pub fn ingest(s: &Settings) -> Result<()> {
    let mut any = false;
    if s.raw("corpus").is_some() {
        any = true;
        let c = corpus(s)?;
        println!("corpus: {} documents in {} slices", c.document_count(), c.len());
        for (label, slice) in c.slices() {
            println!(
                "  slice {label}: {} documents, {} tokens, {} types",
                slice.documents.len(),
                slice.token_count(),
                slice.vocab.len()
            );
        }
    }
    for key in ["pairs", "train_pairs"] {
        if let Some(path) = s.path(key) {
            any = true;
            let load = load_instance_pairs(&path)?;
            let gold: Vec<u8> = load.pairs.iter().filter_map(|p| p.gold).collect();
            let changed = gold.iter().filter(|&&g| g == 0).count();
            println!(
                "{key}: {} pairs loaded, {} rejected; {} labelled ({} changed, {} same)",
                load.pairs.len(),
                load.warnings.len(),
                gold.len(),
                changed,
                gold.len() - changed
            );
            for w in &load.warnings {
                println!("  rejected {w}");
            }
        }
    }
    if let Some(ann) = annotations(s)? {
        any = true;
        println!("annotations: {} words", ann.len());
    }
    if !any {
        bail!("nothing to ingest: pass --corpus, --pairs, --train-pairs or --annotations");
    }
    Ok(())
}

// ---------------------------------------------------------------------------

pub fn score(s: &Settings, method: &str, save_embeddings: bool) -> Result<()> {
    let out = s.out_dir();
    let stamp = s.stamp()?;
    match method {
        "ppmi" | "sgns" => {
            let c = corpus(s)?;
            let ann = annotations(s)?;
            let targets = targets(s, ann.as_ref());
            let m = static_method(s, method)?;
            let frames = c.frames();
            if frames.is_empty() {
                bail!("scoring needs at least two time slices; the corpus has {}", c.len());
            }
            let mut built: BTreeMap<String, EmbeddingMatrix> = BTreeMap::new();
            for label in c.labels() {
                let slice = c.slice(label).expect("label from corpus");
                if let StaticMethod::Ppmi(cfg) = &m {
                    if cfg.dim > slice.vocab.len() {
                        bail!(
                            "--dim {} exceeds the {} word types of slice {label}; choose a smaller --dim",
                            cfg.dim,
                            slice.vocab.len()
                        );
                    }
                }
                let emb = slice_embedding(slice, &m).with_context(|| format!("building {method} for slice {label}"))?;
                if save_embeddings {
                    let path = out.join(format!("emb_{method}_{}.sems", safe_label(label)));
                    std::fs::create_dir_all(&out)?;
                    emb.save(&path)?;
                }
                built.insert(label.to_string(), emb);
            }
            for (from, to) in frames {
                let frame = format!("{from}-{to}");
                let fs = score_embeddings(&built[&from], &built[&to], method, &frame, targets.as_deref())?;
                let path = write_scores(&out, &fs.table, &fs.excluded, 0, &stamp)?;
                let transform = json!({
                    "config_hash": stamp.config_hash,
                    "seed": stamp.seed,
                    "method": method,
                    "frame": frame,
                    "overlap": fs.overlap,
                    "residual": fs.residual,
                    "transform": fs.transform,
                });
                write_file(
                    &out.join(format!("transform_{method}_{}.json", safe_label(&frame))),
                    &(serde_json::to_string_pretty(&transform)? + "\n"),
                )?;
                let top: Vec<String> = fs
                    .ranking()
                    .iter()
                    .take(5)
                    .map(|(w, d)| format!("{w} {d:.4}"))
                    .collect();
                println!(
                    "{method} {frame}: {} words scored -> {} (top: {})",
                    fs.table.len(),
                    path.display(),
                    top.join(", ")
                );
            }
        }
        "contextual" => {
            let path = s.require_path("embeddings")?;
            let file = load_embeddings(&path)?;
            let has_slices = file.records.iter().any(|r| matches!(r.placement, Placement::Slice(_)));
            let has_sides = file.records.iter().any(|r| matches!(r.placement, Placement::Side(_)));
            if has_slices {
                let means = slice_means(&file.records)?;
                let labels: Vec<String> = means.slices().into_iter().map(String::from).collect();
                if labels.len() < 2 {
                    bail!("corpus-mode contextual scoring needs at least two slices");
                }
                for w in labels.windows(2) {
                    let scores = corpus_change_scores(&means, &w[0], &w[1])?;
                    let p = write_scores(&out, &scores.table, &scores.excluded, 0, &stamp)?;
                    println!(
                        "contextual {}: {} words scored -> {}",
                        scores.table.frame,
                        scores.table.len(),
                        p.display()
                    );
                }
            }
            if has_sides {
                let d = instance_distances(&file.records)?;
                let p = out.join("distances_contextual.csv");
                write_distances(&p, &d, &stamp)?;
                println!("contextual instances: {} distances -> {}", d.len(), p.display());
            }
            if !has_slices && !has_sides {
                bail!("{} contains no embedding records", path.display());
            }
        }
        "llm" => {
            let template: PromptTemplate = s.require("template")?;
            let backend = backend(s)?;
            let opts = judge_options(s)?;
            // (frame label, pairs)
            let mut groups: Vec<(String, Vec<InstancePair>)> = Vec::new();
            if s.raw("pairs").is_some() {
                groups.push(("pairs".into(), pairs(s, "pairs")?));
            } else {
                let c = corpus(s)?;
                let ann = annotations(s)?;
                let targets = targets(s, ann.as_ref())
                    .ok_or_else(|| anyhow!("llm scoring over a corpus needs --targets or --annotations"))?;
                let cap: usize = s.require("pair_cap")?;
                for (from, to) in c.frames() {
                    let mut ps = Vec::new();
                    for t in &targets {
                        ps.extend(cross_slice_pairs(&c, &from, &to, t, cap, s.seed()?)?);
                    }
                    groups.push((format!("{from}-{to}"), ps));
                }
                if groups.is_empty() {
                    bail!("scoring needs at least two time slices; the corpus has {}", c.len());
                }
            }
            for (frame, ps) in groups {
                let log = VerdictLog::new(out.join(format!("verdicts_llm_{template}_{}.ndjson", safe_label(&frame))));
                std::fs::create_dir_all(&out)?;
                let outcome = judge_resumable(&ps, template, backend.as_ref(), &opts, &log)?;
                finish_judging(&outcome, &log)?;
                let factors = change_factors(&ps, &outcome.verdicts, &frame)?;
                let p = write_scores(&out, &factors.table, &factors.excluded, outcome.failures.len(), &stamp)?;
                println!(
                    "llm {frame}: {} pairs, {} verdicts, {} failed; S for {} words -> {}",
                    ps.len(),
                    outcome.verdicts.len(),
                    outcome.failures.len(),
                    factors.table.len(),
                    p.display()
                );
            }
        }
        other => bail!("unknown method `{other}` (expected ppmi, sgns, contextual or llm)"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------

fn gold_by_id(ps: &[InstancePair]) -> BTreeMap<&str, u8> {
    ps.iter().filter_map(|p| p.gold.map(|g| (p.id.as_str(), g))).collect()
}

/// Distances and golds for the labelled pairs that have a distance.
fn aligned(distances: &BTreeMap<String, f64>, gold: &BTreeMap<&str, u8>) -> (Vec<f64>, Vec<u8>, usize) {
    let (mut d, mut g, mut missing) = (Vec::new(), Vec::new(), 0);
    for (id, &label) in gold {
        match distances.get(*id) {
            Some(&x) => {
                d.push(x);
                g.push(label);
            }
            None => missing += 1,
        }
    }
    (d, g, missing)
}

pub fn eval(
    s: &Settings,
    scores: &[PathBuf],
    distances: Option<&Path>,
    train_distances: Option<&Path>,
    verdicts: Option<&Path>,
) -> Result<()> {
    if scores.is_empty() && distances.is_none() && verdicts.is_none() {
        bail!("nothing to evaluate: pass --scores, --distances or --verdicts");
    }
    let mut reports = Vec::new();

    if !scores.is_empty() {
        let ann = annotations(s)?.ok_or_else(|| anyhow!("--scores needs --annotations"))?;
        for path in scores {
            let file = read_scores(path)?;
            let mut rep = EvalReport::new(file.table.method.clone(), file.table.frame.clone());
            rep.pearson = Some(pearson(&file.table, &ann).with_context(|| format!("correlating {}", path.display()))?);
            rep.rows = file.table.join(&ann);
            rep.excluded = file.excluded;
            rep.excluded.extend(
                rep.rows
                    .iter()
                    .filter(|r| r.annotation.is_none())
                    .map(|r| r.word.clone()),
            );
            rep.failed_instances = file.failed_instances;
            let pr = rep.pearson.expect("set above");
            println!(
                "{} {}: r = {:.4}, p = {:.3e}, n = {}",
                rep.method, rep.frame, pr.r, pr.p, pr.n
            );
            reports.push(rep);
        }
    }

    if let Some(path) = distances {
        let test_pairs = pairs(s, "pairs")?;
        let gold = gold_by_id(&test_pairs);
        let (d, g, missing) = aligned(&read_distances(path)?, &gold);
        if d.is_empty() {
            bail!("no labelled pair in {} has a distance", path.display());
        }
        let threshold = if let Some(t) = s.get::<f64>("threshold")? {
            t
        } else if let Some(train_path) = train_distances {
            let train = pairs(s, "train_pairs")?;
            let (td, tg, _) = aligned(&read_distances(train_path)?, &gold_by_id(&train));
            optimize_threshold(&td, &tg, &default_threshold_grid())?.threshold
        } else {
            log::warn!("no --threshold or --train-distances; optimizing the threshold on the evaluated pairs");
            optimize_threshold(&d, &g, &default_threshold_grid())?.threshold
        };
        let m = binary_metrics(&classify_by_threshold(&d, threshold)?, &g)?;
        let mut rep = EvalReport::new("contextual", "instances");
        rep.binary = Some(m);
        rep.threshold = Some(threshold);
        rep.failed_instances = missing;
        println!(
            "contextual instances (t = {threshold}): F1 = {:.4}, accuracy = {:.4}",
            m.f1, m.accuracy
        );
        reports.push(rep);
    }

    if let Some(path) = verdicts {
        let test_pairs = pairs(s, "pairs")?;
        let gold = gold_by_id(&test_pairs);
        let by_id: BTreeMap<String, u8> = VerdictLog::new(path)
            .load()?
            .into_iter()
            .map(|v| (v.instance_id, v.value))
            .collect();
        let (mut p, mut g, mut failed) = (Vec::new(), Vec::new(), 0);
        for (id, &label) in &gold {
            match by_id.get(*id) {
                Some(&v) => {
                    p.push(v);
                    g.push(label);
                }
                None => failed += 1,
            }
        }
        if p.is_empty() {
            bail!("no labelled pair has a verdict in {}", path.display());
        }
        let m = binary_metrics(&p, &g)?;
        let stem = path.file_stem().and_then(|x| x.to_str()).unwrap_or("verdicts");
        let mut rep = EvalReport::new("llm", stem);
        rep.binary = Some(m);
        rep.failed_instances = failed;
        println!(
            "llm {stem}: F1 = {:.4}, accuracy = {:.4}, {failed} without verdict",
            m.f1, m.accuracy
        );
        reports.push(rep);
    }

    let files = emit_report(&reports, &s.out_dir(), &s.stamp()?)?;
    println!("report -> {}", files.summary.display());
    Ok(())
}

// ---------------------------------------------------------------------------

pub fn sweep(s: &Settings, method: &str, dims: &[usize], negatives_grid: &[usize]) -> Result<()> {
    let c = corpus(s)?;
    let ann = annotations(s)?;
    let targets = targets(s, ann.as_ref());
    let frames = c.frames();
    if frames.is_empty() {
        bail!("sweeping needs at least two time slices; the corpus has {}", c.len());
    }
    let stamp = s.stamp()?;
    let mut configs: Vec<(String, StaticMethod)> = Vec::new();
    match method {
        "ppmi" => {
            let dims = if dims.is_empty() {
                SWEEP_DIMS.to_vec()
            } else {
                dims.to_vec()
            };
            validate_sweep_dims(&dims)?;
            for d in dims {
                configs.push((format!("{d},"), StaticMethod::Ppmi(ppmi_config(s, d)?)));
            }
        }
        "sgns" => {
            let dims = if dims.is_empty() {
                vec![s.get("dim")?.unwrap_or(100)]
            } else {
                dims.to_vec()
            };
            let negs = if negatives_grid.is_empty() {
                vec![s.require("negatives")?]
            } else {
                negatives_grid.to_vec()
            };
            for &d in &dims {
                for &k in &negs {
                    configs.push((format!("{d},{k}"), StaticMethod::Sgns(sgns_config(s, d, k)?)));
                }
            }
        }
        other => bail!("sweep supports ppmi and sgns, not `{other}`"),
    }
    let mut csv = stamp.comment_line();
    csv.push_str("dim,negatives,frame,n,r,p\n");
    for (key, m) in &configs {
        let mut built: BTreeMap<&str, EmbeddingMatrix> = BTreeMap::new();
        let needed: BTreeSet<&str> = frames.iter().flat_map(|(a, b)| [a.as_str(), b.as_str()]).collect();
        for label in needed {
            let slice = c.slice(label).expect("label from corpus");
            if let StaticMethod::Ppmi(cfg) = m {
                if cfg.dim > slice.vocab.len() {
                    bail!(
                        "dim {} exceeds the {} word types of slice {label}",
                        cfg.dim,
                        slice.vocab.len()
                    );
                }
            }
            built.insert(label, slice_embedding(slice, m)?);
        }
        for (from, to) in &frames {
            let frame = format!("{from}-{to}");
            let fs = score_embeddings(
                &built[from.as_str()],
                &built[to.as_str()],
                method,
                &frame,
                targets.as_deref(),
            )?;
            let (n, r, p) = match &ann {
                Some(a) => {
                    let pr = pearson(&fs.table, a)?;
                    (pr.n, pr.r.to_string(), pr.p.to_string())
                }
                None => (fs.table.len(), String::new(), String::new()),
            };
            csv.push_str(&format!("{key},{frame},{n},{r},{p}\n"));
            println!("{method} {key} {frame}: n = {n} r = {r}");
        }
    }
    let path = s.out_dir().join(format!("sweep_{method}.csv"));
    write_file(&path, &csv)?;
    println!("sweep -> {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------

pub fn judge(s: &Settings, log_path: Option<&Path>) -> Result<()> {
    let ps = pairs(s, "pairs")?;
    let template: PromptTemplate = s.require("template")?;
    let backend = backend(s)?;
    let opts = judge_options(s)?;
    let path = log_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| s.out_dir().join(format!("verdicts_{template}.ndjson")));
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let log = VerdictLog::new(&path);
    let outcome = judge_resumable(&ps, template, backend.as_ref(), &opts, &log)?;
    for f in &outcome.failures {
        eprintln!("warning: {}: {}", f.instance_id, f.reason);
    }
    finish_judging(&outcome, &log)?;
    let same = outcome.verdicts.iter().filter(|v| v.value == 1).count();
    println!(
        "judged {} of {} pairs ({} same, {} changed, {} failed) -> {}",
        outcome.verdicts.len(),
        ps.len(),
        same,
        outcome.verdicts.len() - same,
        outcome.failures.len(),
        path.display()
    );
    Ok(())
}
