//! Bounded-parallel judging with retries and a resumable verdict log.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{parse_verdict, render_prompt, BackendError, LlmBackend, LlmRequest, LlmVerdict, PromptTemplate};
use crate::corpus::InstancePair;
use crate::{Error, Result};

/// Cap on a single backoff sleep.
const MAX_BACKOFF_MS: u64 = 60_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JudgeOptions {
    pub parallelism: usize,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    /// Seeds the per-instance backoff jitter.
    pub seed: u64,
}

impl Default for JudgeOptions {
    fn default() -> Self {
        JudgeOptions {
            parallelism: 4,
            max_retries: 3,
            backoff_base_ms: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailedInstance {
    pub instance_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JudgeOutcome {
    /// Sorted by instance id.
    pub verdicts: Vec<LlmVerdict>,
    /// Instances whose responses never parsed; excluded from aggregates.
    pub failures: Vec<FailedInstance>,
    /// Set when the run stopped early; `verdicts` then holds partial results.
    pub aborted: Option<String>,
}

enum Attempt {
    Verdict(LlmVerdict),
    Failed(String),
    Abort(String),
}

fn backoff_ms(base: u64, attempt: u32, rng: &mut ChaCha8Rng) -> u64 {
    if base == 0 {
        return 0;
    }
    let exp = base.saturating_mul(1u64 << attempt.min(16)).min(MAX_BACKOFF_MS);
    exp + rng.random_range(0..=exp / 2)
}

fn judge_one(
    index: usize,
    pair: &InstancePair,
    template: PromptTemplate,
    backend: &dyn LlmBackend,
    opts: &JudgeOptions,
) -> Attempt {
    let prompt = match render_prompt(template, pair) {
        Ok(p) => p,
        Err(e) => return Attempt::Failed(e.to_string()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut last = String::new();
    for attempt in 0..=opts.max_retries {
        if attempt > 0 {
            std::thread::sleep(Duration::from_millis(backoff_ms(
                opts.backoff_base_ms,
                attempt - 1,
                &mut rng,
            )));
        }
        match backend.complete(LlmRequest { pair, prompt: &prompt }) {
            Ok(resp) => match parse_verdict(&resp.raw) {
                Some(value) => {
                    return Attempt::Verdict(LlmVerdict {
                        instance_id: pair.id.clone(),
                        value,
                        raw: resp.raw,
                        model: resp.model,
                        ms: resp.ms,
                    })
                }
                None => last = format!("unparseable response {:?}", resp.raw),
            },
            Err(BackendError::Transient(m)) => last = format!("transport: {m}"),
            Err(BackendError::Fatal(m)) => return Attempt::Abort(m),
        }
        log::debug!("instance {}: attempt {} failed: {last}", pair.id, attempt + 1);
    }
    if last.starts_with("transport:") {
        Attempt::Abort(format!(
            "instance {}: endpoint unreachable after {} attempts ({last})",
            pair.id,
            opts.max_retries + 1
        ))
    } else {
        Attempt::Failed(last)
    }
}

/// Judges every pair with at most `opts.parallelism` requests in flight.
///
/// Each verdict is handed to `on_verdict` as soon as it arrives (used for
/// persistence). A fatal backend error, or transport errors outlasting the
/// retries, stops new work and returns the partial results.
pub fn judge_pairs_with(
    pairs: &[InstancePair],
    template: PromptTemplate,
    backend: &dyn LlmBackend,
    opts: &JudgeOptions,
    on_verdict: &(dyn Fn(&LlmVerdict) -> Result<()> + Sync),
) -> Result<JudgeOutcome> {
    if opts.parallelism == 0 {
        return Err(Error::invalid("parallelism", "must be at least 1"));
    }
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let outcome = Mutex::new(JudgeOutcome::default());
    let sink_error: Mutex<Option<Error>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..opts.parallelism.min(pairs.len()) {
            scope.spawn(|| loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(pair) = pairs.get(i) else { break };
                let attempt = judge_one(i, pair, template, backend, opts);
                let mut out = outcome.lock().expect("results lock");
                match attempt {
                    Attempt::Verdict(v) => {
                        if let Err(e) = on_verdict(&v) {
                            sink_error.lock().expect("error lock").get_or_insert(e);
                            stop.store(true, Ordering::SeqCst);
                        }
                        out.verdicts.push(v);
                    }
                    Attempt::Failed(reason) => {
                        log::warn!("instance {}: no usable verdict: {reason}", pair.id);
                        out.failures.push(FailedInstance {
                            instance_id: pair.id.clone(),
                            reason,
                        });
                    }
                    Attempt::Abort(reason) => {
                        out.aborted.get_or_insert(reason);
                        stop.store(true, Ordering::SeqCst);
                    }
                }
            });
        }
    });

    if let Some(e) = sink_error.into_inner().expect("error lock") {
        return Err(e);
    }
    let mut out = outcome.into_inner().expect("results lock");
    out.verdicts.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    out.failures.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    Ok(out)
}

pub fn judge_pairs(
    pairs: &[InstancePair],
    template: PromptTemplate,
    backend: &dyn LlmBackend,
    opts: &JudgeOptions,
) -> Result<JudgeOutcome> {
    judge_pairs_with(pairs, template, backend, opts, &|_| Ok(()))
}

/// Newline-delimited JSON file of verdicts, appended as they arrive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerdictLog {
    path: PathBuf,
}

impl VerdictLog {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        VerdictLog { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Existing verdicts; a missing file is an empty log.
    pub fn load(&self) -> Result<Vec<LlmVerdict>> {
        let file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(&self.path, e)),
        };
        let mut out = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&self.path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let v: LlmVerdict = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                path: self.path.clone(),
                line: i + 1,
                reason: e.to_string(),
            })?;
            if v.value > 1 {
                return Err(Error::MalformedRecord {
                    path: self.path.clone(),
                    line: i + 1,
                    reason: "verdict value must be 0 or 1".into(),
                });
            }
            out.push(v);
        }
        Ok(out)
    }

    pub fn append(&self, verdict: &LlmVerdict) -> Result<()> {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::io(&self.path, e))?;
        let mut line = serde_json::to_string(verdict).expect("verdict serializes");
        line.push('\n');
        file.write_all(line.as_bytes()).map_err(|e| Error::io(&self.path, e))
    }
}

/// Judges only pairs absent from `log`, appending new verdicts to it.
/// The returned verdicts include the ones already logged for `pairs`.
pub fn judge_resumable(
    pairs: &[InstancePair],
    template: PromptTemplate,
    backend: &dyn LlmBackend,
    opts: &JudgeOptions,
    log: &VerdictLog,
) -> Result<JudgeOutcome> {
    let wanted: HashSet<&str> = pairs.iter().map(|p| p.id.as_str()).collect();
    let previous: Vec<LlmVerdict> = log
        .load()?
        .into_iter()
        .filter(|v| wanted.contains(v.instance_id.as_str()))
        .collect();
    let done: HashSet<&str> = previous.iter().map(|v| v.instance_id.as_str()).collect();
    let todo: Vec<InstancePair> = pairs
        .iter()
        .filter(|p| !done.contains(p.id.as_str()))
        .cloned()
        .collect();
    if !done.is_empty() {
        log::info!("{} of {} pairs already judged", done.len(), pairs.len());
    }
    let writer = Mutex::new(());
    let mut outcome = judge_pairs_with(&todo, template, backend, opts, &|v| {
        let _guard = writer.lock().expect("log lock");
        log.append(v)
    })?;
    outcome.verdicts.extend(previous);
    outcome.verdicts.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    outcome.verdicts.dedup_by(|a, b| a.instance_id == b.instance_id);
    Ok(outcome)
}
