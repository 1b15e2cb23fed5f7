use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Bidirectional word ↔ dense index map.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct WordIndex {
    words: Vec<String>,
    ids: HashMap<String, usize>,
}

impl WordIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `word`, inserting it at the end if absent.
    pub fn intern(&mut self, word: &str) -> usize {
        if let Some(&id) = self.ids.get(word) {
            return id;
        }
        let id = self.words.len();
        self.words.push(word.to_string());
        self.ids.insert(word.to_string(), id);
        id
    }

    pub fn id_of(&self, word: &str) -> Option<usize> {
        self.ids.get(word).copied()
    }

    pub fn word_of(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.ids.contains_key(word)
    }
}

/// Builds an index from a word list. Later duplicates are ignored.
impl From<Vec<String>> for WordIndex {
    fn from(words: Vec<String>) -> Self {
        let mut index = WordIndex::new();
        for w in &words {
            index.intern(w);
        }
        index
    }
}

impl From<WordIndex> for Vec<String> {
    fn from(index: WordIndex) -> Self {
        index.words
    }
}

/// Word index plus occurrence count per word. Every count is at least 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    index: WordIndex,
    counts: Vec<u64>,
}

impl Vocabulary {
    /// Builds a vocabulary in first-occurrence order.
    pub fn from_tokens<'a, I, S>(token_streams: I) -> Self
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut vocab = Vocabulary::default();
        for stream in token_streams {
            for tok in stream {
                vocab.add(tok.as_ref());
            }
        }
        vocab
    }

    fn add(&mut self, word: &str) {
        let id = self.index.intern(word);
        if id == self.counts.len() {
            self.counts.push(1);
        } else {
            self.counts[id] += 1;
        }
    }

    pub fn index(&self) -> &WordIndex {
        &self.index
    }

    pub fn id_of(&self, word: &str) -> Option<usize> {
        self.index.id_of(word)
    }

    pub fn word_of(&self, id: usize) -> Option<&str> {
        self.index.word_of(id)
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}
