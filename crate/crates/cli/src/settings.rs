//! Resolved run settings: defaults, then the config file, then flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};

use semshift::eval::RunStamp;
use semshift::llm::BackendConfig;

/// Every recognized key with its default (empty = unset).
const KEYS: &[(&str, &str)] = &[
    ("corpus", ""),
    ("pairs", ""),
    ("train_pairs", ""),
    ("annotations", ""),
    ("embeddings", ""),
    ("out", "out"),
    ("seed", "0"),
    ("granularity", "year"),
    ("targets", ""),
    ("method", ""),
    ("dim", ""),
    ("alpha", "0.75"),
    ("shift_k", "1"),
    ("negatives", "10"),
    ("window", "5"),
    ("epochs", "50"),
    ("lr", "0.025"),
    ("template", "date"),
    ("backend", "mock"),
    ("endpoint", "https://api.openai.com/v1/chat/completions"),
    ("model", "gpt-4"),
    ("api_key_env", "SEMSHIFT_API_KEY"),
    ("max_retries", "3"),
    ("backoff_ms", "500"),
    ("parallelism", "4"),
    ("timeout_ms", "60000"),
    ("pair_cap", "500"),
    ("threshold", ""),
];

const PATH_KEYS: &[&str] = &["corpus", "pairs", "train_pairs", "annotations", "embeddings"];

fn normalize_key(raw: &str) -> String {
    raw.trim().to_ascii_lowercase().replace('-', "_")
}

fn is_known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected `key = value`", origin.display(), i + 1))?;
        let key = normalize_key(k);
        if !is_known(&key) {
            bail!("{}:{}: unknown setting `{key}`", origin.display(), i + 1);
        }
        if out.iter().any(|(k, _)| *k == key) {
            bail!("{}:{}: `{key}` set twice", origin.display(), i + 1);
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

impl Settings {
    pub fn resolve(config: Option<&Path>, overrides: Vec<(&str, String)>) -> Result<Self> {
        let mut values: BTreeMap<String, String> = KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        if let Some(path) = config {
            let text =
                std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
            values.extend(parse_config(&text, path)?);
        }
        for (k, v) in overrides {
            debug_assert!(is_known(k), "flag for unknown key {k}");
            values.insert(k.to_string(), v);
        }
        let settings = Settings { values };
        for key in PATH_KEYS {
            if let Some(p) = settings.path(key) {
                if !p.exists() {
                    bail!("{key} file `{}` does not exist", p.display());
                }
            }
        }
        Ok(settings)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow!("invalid value `{v}` for `{key}`: {e}"))
            })
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| {
            anyhow!(
                "`{key}` is required here (flag --{} or config key `{key}`)",
                key.replace('_', "-")
            )
        })
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(PathBuf::from)
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf> {
        self.path(key).ok_or_else(|| {
            anyhow!(
                "`{key}` is required here (flag --{} or config key `{key}`)",
                key.replace('_', "-")
            )
        })
    }

    pub fn out_dir(&self) -> PathBuf {
        self.path("out").unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn seed(&self) -> Result<u64> {
        Ok(self.get("seed")?.unwrap_or(0))
    }

    pub fn list(&self, key: &str) -> Vec<String> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Hex SHA-256 prefix over every effective `key=value` except `out`, sorted by key.
    pub fn config_hash(&self) -> String {
        let mut canonical = String::new();
        for (k, v) in self.values.iter().filter(|(k, _)| k.as_str() != "out") {
            let _ = writeln!(canonical, "{k}={v}");
        }
        hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
    }

    pub fn stamp(&self) -> Result<RunStamp> {
        Ok(RunStamp {
            config_hash: self.config_hash(),
            seed: self.seed()?,
        })
    }

    pub fn backend_config(&self) -> Result<BackendConfig> {
        let cfg = BackendConfig {
            endpoint: self.require("endpoint")?,
            model: self.require("model")?,
            api_key_env: self.require("api_key_env")?,
            max_retries: self.require("max_retries")?,
            backoff_base_ms: self.require("backoff_ms")?,
            parallelism: self.require("parallelism")?,
            timeout_ms: self.require("timeout_ms")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
