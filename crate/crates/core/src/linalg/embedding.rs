//! Dense per-word embeddings and their on-disk container.
//!
//! Binary layout (little-endian): magic `SEMS`, `u32` format version, `u64`
//! row count N, `u64` dimension d, then N·d `f64` values row-major. The word
//! list lives in a UTF-8 sidecar (`<path>.words`), one word per line, line i
//! naming row i.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::corpus::WordIndex;
use crate::{Error, Result};

pub const EMBEDDING_MAGIC: &[u8; 4] = b"SEMS";
pub const EMBEDDING_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    words: WordIndex,
    vectors: DMatrix<f64>,
}

impl EmbeddingMatrix {
    pub fn new(words: WordIndex, vectors: DMatrix<f64>) -> Result<Self> {
        if vectors.nrows() != words.len() {
            return Err(Error::DimensionMismatch {
                expected: words.len(),
                actual: vectors.nrows(),
            });
        }
        if vectors.ncols() == 0 {
            return Err(Error::invalid("vectors", "embedding dimension must be at least 1"));
        }
        if vectors.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("vectors", "embedding contains non-finite values"));
        }
        Ok(EmbeddingMatrix { words, vectors })
    }

    pub fn words(&self) -> &WordIndex {
        &self.words
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.vectors.row(i).iter().copied().collect()
    }

    pub fn vector(&self, word: &str) -> Option<Vec<f64>> {
        self.words.id_of(word).map(|i| self.row(i))
    }

    pub fn is_zero_row(&self, i: usize) -> bool {
        self.vectors.row(i).iter().all(|&x| x == 0.0)
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".words");
        PathBuf::from(s)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(EMBEDDING_MAGIC)?;
        w.write_all(&EMBEDDING_FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&(self.dim() as u64).to_le_bytes())?;
        for r in 0..self.len() {
            for x in self.vectors.row(r).iter() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()
    }

    pub fn write_words<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for word in self.words.words() {
            writeln!(w, "{word}")?;
        }
        w.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let side = Self::sidecar_path(path);
        let bin = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_binary(BufWriter::new(bin)).map_err(|e| Error::io(path, e))?;
        let words = File::create(&side).map_err(|e| Error::io(&side, e))?;
        self.write_words(BufWriter::new(words)).map_err(|e| Error::io(&side, e))
    }

    pub fn read_from<R: Read, S: BufRead>(mut bin: R, words: S) -> Result<Self> {
        let mut header = [0u8; 24];
        bin.read_exact(&mut header)
            .map_err(|_| Error::Format("truncated header".into()))?;
        if &header[..4] != EMBEDDING_MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != EMBEDDING_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
        let d = u64::from_le_bytes(header[16..24].try_into().unwrap()) as usize;
        let mut body = Vec::new();
        bin.read_to_end(&mut body).map_err(|e| Error::Format(e.to_string()))?;
        if body.len() != n * d * 8 {
            return Err(Error::Format(format!(
                "expected {} payload bytes for {n}x{d}, found {}",
                n * d * 8,
                body.len()
            )));
        }
        let values: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let word_list = words
            .lines()
            .collect::<std::io::Result<Vec<String>>>()
            .map_err(|e| Error::Format(e.to_string()))?;
        let index = WordIndex::from(word_list.clone());
        if index.len() != word_list.len() {
            return Err(Error::Format("word list contains duplicates".into()));
        }
        Self::new(index, DMatrix::from_row_slice(n, d, &values))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let side = Self::sidecar_path(path);
        let bin = File::open(path).map_err(|e| Error::io(path, e))?;
        let words = File::open(&side).map_err(|e| Error::io(&side, e))?;
        Self::read_from(BufReader::new(bin), BufReader::new(words))
    }
}
