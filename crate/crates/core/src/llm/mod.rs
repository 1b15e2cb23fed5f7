//! Zero-shot LLM judging of instance pairs and the corpus-level change factor.

mod backend;
mod judge;
mod prompt;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use backend::{
    extract_completion, jaccard, target_neighborhood, BackendConfig, BackendError, BackendResponse, HttpBackend,
    LlmBackend, LlmRequest, MockBackend, MOCK_MODEL, MOCK_RADIUS, MOCK_THRESHOLD,
};
pub use judge::{
    judge_pairs, judge_pairs_with, judge_resumable, FailedInstance, JudgeOptions, JudgeOutcome, VerdictLog,
};
pub use prompt::{render_fields, render_prompt, PromptFields, PromptTemplate, RenderedPrompt};

use crate::corpus::{find_subsequence, tokenize, InstancePair, TimeSlicedCorpus};
use crate::eval::ChangeScoreTable;
use crate::{Error, Result};

/// One parsed answer: `1` = same meaning, `0` = changed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmVerdict {
    pub instance_id: String,
    pub value: u8,
    pub raw: String,
    pub model: String,
    pub ms: u64,
}

/// Accepts exactly `0` or `1` after trimming whitespace and quotes.
pub fn parse_verdict(raw: &str) -> Option<u8> {
    let trimmed = raw.trim_matches(|c: char| c.is_whitespace() || matches!(c, '"' | '\'' | '`'));
    match trimmed {
        "0" => Some(0),
        "1" => Some(1),
        _ => None,
    }
}

/// Fraction of verdicts equal to `1`.
pub fn corpus_change_factor(values: &[u8]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("no successful verdicts".into()));
    }
    if let Some(v) = values.iter().find(|&&v| v > 1) {
        return Err(Error::invalid("verdict", format!("value {v} is not 0 or 1")));
    }
    let same = values.iter().filter(|&&v| v == 1).count();
    Ok(same as f64 / values.len() as f64)
}

pub const DEFAULT_PAIR_CAP: usize = 500;

/// Stable 64-bit FNV-1a, used to derive per-word seeds.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Index pairs `(i, j)` into an `n × m` grid: all of them when there are at
/// most `cap`, otherwise `cap` distinct cells sampled with `seed`. Row-major order.
pub fn sample_cross_pairs(n: usize, m: usize, cap: usize, seed: u64) -> Vec<(usize, usize)> {
    let total = n * m;
    let cells: Vec<usize> = if total <= cap {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, total, cap).into_vec();
        picked.sort_unstable();
        picked
    };
    cells.into_iter().map(|c| (c / m, c % m)).collect()
}

/// Instance pairs for `target` between slices `from` and `to`, one text
/// from each, capped per word. Ids are `target|doc_from|doc_to`.
pub fn cross_slice_pairs(
    corpus: &TimeSlicedCorpus,
    from: &str,
    to: &str,
    target: &str,
    cap: usize,
    seed: u64,
) -> Result<Vec<InstancePair>> {
    let target_tokens = tokenize(target);
    if target_tokens.is_empty() {
        return Err(Error::invalid("target", "empty target word"));
    }
    let usages = |label: &str| -> Result<Vec<_>> {
        let slice = corpus
            .slice(label)
            .ok_or_else(|| Error::invalid("slice", format!("no slice labelled `{label}`")))?;
        Ok(slice
            .documents
            .iter()
            .filter(|d| find_subsequence(&d.tokens, &target_tokens).is_some())
            .collect())
    };
    let (a, b) = (usages(from)?, usages(to)?);
    let word = target_tokens.join(" ");
    sample_cross_pairs(a.len(), b.len(), cap, seed ^ fnv1a(&word))
        .into_iter()
        .map(|(i, j)| {
            let (x, y) = (a[i], b[j]);
            InstancePair::new(
                format!("{word}|{}|{}", x.id, y.id),
                x.text.clone(),
                y.text.clone(),
                x.date,
                y.date,
                &word,
                None,
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangeFactors {
    pub table: ChangeScoreTable,
    /// Targets without a single successful verdict.
    pub excluded: Vec<String>,
}

/// Change factor per target word from verdicts on its cross-slice pairs.
/// Pairs without a verdict are ignored (failed instances are never imputed).
pub fn change_factors(pairs: &[InstancePair], verdicts: &[LlmVerdict], frame: &str) -> Result<ChangeFactors> {
    let by_id: BTreeMap<&str, u8> = verdicts.iter().map(|v| (v.instance_id.as_str(), v.value)).collect();
    let mut per_word: BTreeMap<&str, Vec<u8>> = BTreeMap::new();
    for p in pairs {
        let entry = per_word.entry(&p.target).or_default();
        if let Some(&v) = by_id.get(p.id.as_str()) {
            entry.push(v);
        }
    }
    let mut table = ChangeScoreTable::new("llm", frame);
    let mut excluded = Vec::new();
    for (word, values) in per_word {
        if values.is_empty() {
            log::warn!("`{word}`: no successful verdicts; excluded");
            excluded.push(word.to_string());
            continue;
        }
        table.insert(word, corpus_change_factor(&values)?)?;
    }
    Ok(ChangeFactors { table, excluded })
}
