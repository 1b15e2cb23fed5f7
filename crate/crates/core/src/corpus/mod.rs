//! Documents, time slices, instance pairs and annotation tables.

mod tokenize;
mod vocab;

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

pub use tokenize::{find_subsequence, tokenize, URL_TOKEN, USER_TOKEN};
pub use vocab::{Vocabulary, WordIndex};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedDocument {
    pub id: String,
    pub date: NaiveDate,
    pub text: String,
    pub tokens: Vec<String>,
}

/// How documents are grouped into slices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Granularity {
    #[default]
    Year,
    Month,
}

impl Granularity {
    pub fn label(self, date: NaiveDate) -> String {
        match self {
            Granularity::Year => format!("{:04}", date.year()),
            Granularity::Month => format!("{:04}-{:02}", date.year(), date.month()),
        }
    }
}

impl std::str::FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "year" => Ok(Granularity::Year),
            "month" => Ok(Granularity::Month),
            other => Err(Error::invalid(
                "granularity",
                format!("expected `year` or `month`, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Slice {
    pub documents: Vec<TokenizedDocument>,
    pub vocab: Vocabulary,
}

impl Slice {
    pub fn token_streams(&self) -> impl Iterator<Item = &[String]> {
        self.documents.iter().map(|d| d.tokens.as_slice())
    }

    pub fn token_count(&self) -> usize {
        self.documents.iter().map(|d| d.tokens.len()).sum()
    }
}

/// Tokenized documents grouped by period label, in label order.
#[derive(Debug, Clone, Default)]
pub struct TimeSlicedCorpus {
    slices: BTreeMap<String, Slice>,
}

impl TimeSlicedCorpus {
    /// Tokenizes and slices `docs`. Document ids must be nonempty and unique.
    pub fn from_documents(docs: Vec<Document>, granularity: Granularity) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut grouped: BTreeMap<String, Vec<TokenizedDocument>> = BTreeMap::new();
        for doc in docs {
            if doc.id.is_empty() {
                return Err(Error::invalid("id", "document id must be nonempty"));
            }
            if !seen.insert(doc.id.clone()) {
                return Err(Error::Duplicate {
                    what: "document id",
                    key: doc.id,
                });
            }
            let tokens = tokenize(&doc.text);
            grouped
                .entry(granularity.label(doc.date))
                .or_default()
                .push(TokenizedDocument {
                    id: doc.id,
                    date: doc.date,
                    text: doc.text,
                    tokens,
                });
        }
        let slices = grouped
            .into_iter()
            .map(|(label, documents)| {
                let vocab = Vocabulary::from_tokens(documents.iter().map(|d| d.tokens.as_slice()));
                (label, Slice { documents, vocab })
            })
            .collect();
        Ok(TimeSlicedCorpus { slices })
    }

    pub fn slice(&self, label: &str) -> Option<&Slice> {
        self.slices.get(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.slices.keys().map(String::as_str)
    }

    pub fn slices(&self) -> impl Iterator<Item = (&str, &Slice)> {
        self.slices.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn document_count(&self) -> usize {
        self.slices.values().map(|s| s.documents.len()).sum()
    }

    /// Consecutive slice pairs, e.g. `("2019","2020"), ("2020","2021")`.
    pub fn frames(&self) -> Vec<(String, String)> {
        let labels: Vec<&String> = self.slices.keys().collect();
        labels.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect()
    }
}

/// Parses `YYYY-MM-DD`, also accepting a trailing time part (`T…` or ` …`).
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    let day = match s.get(10..11) {
        Some("T") | Some(" ") => &s[..10],
        _ => s,
    };
    NaiveDate::parse_from_str(day, "%Y-%m-%d").ok()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn malformed(path: &Path, line: usize, reason: impl ToString) -> Error {
    Error::MalformedRecord {
        path: path.to_path_buf(),
        line,
        reason: reason.to_string(),
    }
}

/// Iterates nonblank lines with 1-based line numbers.
fn numbered_lines<'a, R: BufRead + 'a>(
    reader: R,
    path: &'a Path,
) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    reader.lines().enumerate().filter_map(move |(i, line)| match line {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((i + 1, l))),
        Err(e) => Some(Err(Error::io(path, e))),
    })
}

#[derive(Deserialize)]
struct DocumentRecord {
    id: String,
    text: String,
    date: String,
}

/// Reads newline-delimited JSON documents (`id`, `text`, `date`).
pub fn read_documents<R: BufRead>(reader: R, path: &Path) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for item in numbered_lines(reader, path) {
        let (line, raw) = item?;
        let rec: DocumentRecord = serde_json::from_str(&raw).map_err(|e| malformed(path, line, e))?;
        let date = parse_date(&rec.date).ok_or_else(|| Error::BadDate {
            id: rec.id.clone(),
            value: rec.date.clone(),
        })?;
        docs.push(Document {
            id: rec.id,
            text: rec.text,
            date,
        });
    }
    Ok(docs)
}

pub fn load_corpus(path: impl AsRef<Path>, granularity: Granularity) -> Result<TimeSlicedCorpus> {
    let path = path.as_ref();
    let docs = read_documents(open(path)?, path)?;
    TimeSlicedCorpus::from_documents(docs, granularity)
}

/// Two usages of a target word, optionally with a gold label
/// (`1` = same meaning, `0` = meaning changed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstancePair {
    pub id: String,
    pub text1: String,
    pub text2: String,
    pub date1: NaiveDate,
    pub date2: NaiveDate,
    /// Normalized (tokenized, space-joined) target.
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<u8>,
}

impl InstancePair {
    /// Builds a pair, normalizing the target and checking that it occurs in both texts.
    pub fn new(
        id: impl Into<String>,
        text1: impl Into<String>,
        text2: impl Into<String>,
        date1: NaiveDate,
        date2: NaiveDate,
        target: &str,
        gold: Option<u8>,
    ) -> Result<Self> {
        let id = id.into();
        let (text1, text2) = (text1.into(), text2.into());
        if matches!(gold, Some(g) if g > 1) {
            return Err(Error::invalid("gold", "gold label must be 0 or 1"));
        }
        let target_tokens = tokenize(target);
        if target_tokens.is_empty() {
            return Err(Error::invalid("target", format!("pair `{id}`: empty target")));
        }
        for (side, text) in [(1, &text1), (2, &text2)] {
            if find_subsequence(&tokenize(text), &target_tokens).is_none() {
                return Err(Error::invalid(
                    "target",
                    format!("pair `{id}`: target `{target}` not found in text{side}"),
                ));
            }
        }
        Ok(InstancePair {
            id,
            text1,
            text2,
            date1,
            date2,
            target: target_tokens.join(" "),
            gold,
        })
    }

    pub fn target_tokens(&self) -> Vec<String> {
        self.target.split(' ').map(str::to_string).collect()
    }
}

#[derive(Debug, Default)]
pub struct PairLoad {
    pub pairs: Vec<InstancePair>,
    /// One message per rejected record.
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
struct PairRecord {
    id: String,
    text1: String,
    text2: String,
    date1: String,
    date2: String,
    target: String,
    #[serde(default)]
    gold: Option<u8>,
}

/// Reads newline-delimited JSON instance pairs.
///
/// Records whose target is missing from either text are skipped with a
/// warning; syntax errors, bad dates and bad gold labels are fatal.
pub fn read_instance_pairs<R: BufRead>(reader: R, path: &Path) -> Result<PairLoad> {
    let mut load = PairLoad::default();
    let mut seen = HashSet::new();
    for item in numbered_lines(reader, path) {
        let (line, raw) = item?;
        let rec: PairRecord = serde_json::from_str(&raw).map_err(|e| malformed(path, line, e))?;
        if !seen.insert(rec.id.clone()) {
            return Err(malformed(path, line, format!("duplicate pair id `{}`", rec.id)));
        }
        if matches!(rec.gold, Some(g) if g > 1) {
            return Err(malformed(path, line, "gold must be 0 or 1"));
        }
        let parse = |s: &str| {
            parse_date(s).ok_or_else(|| Error::BadDate {
                id: rec.id.clone(),
                value: s.to_string(),
            })
        };
        let (date1, date2) = (parse(&rec.date1)?, parse(&rec.date2)?);
        match InstancePair::new(
            rec.id.clone(),
            rec.text1,
            rec.text2,
            date1,
            date2,
            &rec.target,
            rec.gold,
        ) {
            Ok(pair) => load.pairs.push(pair),
            Err(e) => {
                log::warn!("{}:{line}: rejected: {e}", path.display());
                load.warnings.push(format!("line {line}: {e}"));
            }
        }
    }
    Ok(load)
}

pub fn load_instance_pairs(path: impl AsRef<Path>) -> Result<PairLoad> {
    let path = path.as_ref();
    read_instance_pairs(open(path)?, path)
}

/// Graded change score in `[0, 1]` per target word (1 = most change).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationTable {
    scores: BTreeMap<String, f64>,
}

impl AnnotationTable {
    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut scores = BTreeMap::new();
        for (word, score) in entries {
            let word = word.into().trim().to_lowercase();
            if !(0.0..=1.0).contains(&score) {
                return Err(Error::invalid("score", format!("`{word}`: {score} is outside [0, 1]")));
            }
            if scores.insert(word.clone(), score).is_some() {
                return Err(Error::Duplicate {
                    what: "annotated word",
                    key: word,
                });
            }
        }
        Ok(AnnotationTable { scores })
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.scores.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.scores.iter().map(|(w, &s)| (w.as_str(), s))
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.scores.keys().map(String::as_str)
    }
}

/// Reads a `word,score` CSV with a header row.
pub fn read_annotations<R: Read>(reader: R, path: &Path) -> Result<AnnotationTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut entries = Vec::new();
    for (i, rec) in rdr.deserialize::<(String, f64)>().enumerate() {
        // header is line 1
        let (word, score) = rec.map_err(|e| malformed(path, i + 2, e))?;
        entries.push((word, score));
    }
    AnnotationTable::from_entries(entries)
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<AnnotationTable> {
    let path = path.as_ref();
    read_annotations(open(path)?, path)
}
