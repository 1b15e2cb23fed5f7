//! Reading and writing the CLI's CSV artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use semshift::eval::{ChangeScoreTable, RunStamp};

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

pub fn safe_label(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn score_path(dir: &Path, table: &ChangeScoreTable) -> PathBuf {
    dir.join(format!(
        "scores_{}_{}.csv",
        safe_label(&table.method),
        safe_label(&table.frame)
    ))
}

/// `key=value` pairs from `#` comment lines plus the data rows.
struct Commented {
    meta: BTreeMap<String, String>,
    rows: Vec<(usize, String)>,
}

fn read_commented(path: &Path, header: &str) -> Result<Commented> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut meta = BTreeMap::new();
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        if let Some(comment) = line.strip_prefix('#') {
            for tok in comment.split_whitespace() {
                if let Some((k, v)) = tok.split_once('=') {
                    meta.insert(k.to_string(), v.to_string());
                }
            }
        } else if line.trim().is_empty() {
            continue;
        } else if !seen_header {
            if line.trim() != header {
                bail!("{}:{}: expected header `{header}`", path.display(), i + 1);
            }
            seen_header = true;
        } else {
            rows.push((i + 1, line.to_string()));
        }
    }
    if !seen_header {
        bail!("{}: missing header `{header}`", path.display());
    }
    Ok(Commented { meta, rows })
}

pub struct ScoreFile {
    pub table: ChangeScoreTable,
    pub excluded: Vec<String>,
    pub failed_instances: usize,
}

pub fn write_scores(
    dir: &Path,
    table: &ChangeScoreTable,
    excluded: &[String],
    failed_instances: usize,
    stamp: &RunStamp,
) -> Result<PathBuf> {
    let mut s = stamp.comment_line();
    let _ = writeln!(s, "# method={} frame={}", table.method, table.frame);
    if !excluded.is_empty() {
        let _ = writeln!(s, "# excluded={}", excluded.join(","));
    }
    if failed_instances > 0 {
        let _ = writeln!(s, "# failed_instances={failed_instances}");
    }
    s.push_str("word,score\n");
    for (w, v) in table.iter() {
        let _ = writeln!(s, "{w},{v}");
    }
    let path = score_path(dir, table);
    write_file(&path, &s)?;
    Ok(path)
}

pub fn read_scores(path: &Path) -> Result<ScoreFile> {
    let c = read_commented(path, "word,score")?;
    let method = c.meta.get("method").cloned().unwrap_or_else(|| "unknown".into());
    let frame = c.meta.get("frame").cloned().unwrap_or_default();
    let mut table = ChangeScoreTable::new(method, frame);
    for (line, row) in c.rows {
        let (w, v) = row
            .rsplit_once(',')
            .ok_or_else(|| anyhow!("{}:{line}: expected `word,score`", path.display()))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|e| anyhow!("{}:{line}: bad score `{v}`: {e}", path.display()))?;
        table.insert(w.trim(), v)?;
    }
    let excluded = c
        .meta
        .get("excluded")
        .map(|v| v.split(',').map(String::from).collect())
        .unwrap_or_default();
    let failed_instances = c
        .meta
        .get("failed_instances")
        .map(|v| v.parse())
        .transpose()
        .context("bad failed_instances comment")?
        .unwrap_or(0);
    Ok(ScoreFile {
        table,
        excluded,
        failed_instances,
    })
}

pub fn write_distances(path: &Path, distances: &[(String, f64)], stamp: &RunStamp) -> Result<()> {
    let mut s = stamp.comment_line();
    s.push_str("instance_id,distance\n");
    for (id, d) in distances {
        let _ = writeln!(s, "{id},{d}");
    }
    write_file(path, &s)
}

pub fn read_distances(path: &Path) -> Result<BTreeMap<String, f64>> {
    let c = read_commented(path, "instance_id,distance")?;
    let mut out = BTreeMap::new();
    for (line, row) in c.rows {
        let (id, v) = row
            .rsplit_once(',')
            .ok_or_else(|| anyhow!("{}:{line}: expected `instance_id,distance`", path.display()))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|e| anyhow!("{}:{line}: bad distance `{v}`: {e}", path.display()))?;
        if out.insert(id.to_string(), v).is_some() {
            bail!("{}:{line}: duplicate instance `{id}`", path.display());
        }
    }
    Ok(out)
}
