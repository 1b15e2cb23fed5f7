//! Synthetic corpora shared by the integration tests.
#![allow(dead_code)]

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semshift::corpus::{Document, Granularity, TimeSlicedCorpus};

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub const PLANTED_WORDS: usize = 30;
pub const PLANTED_TOPICS: usize = 5;

/// Two yearly slices over 30 words in 5 topics of 6. Documents draw their
/// tokens from a single topic. The planted word belongs to topic 0 in 2019
/// and to topic 1 in 2020; every other word keeps its topic.
pub fn planted_change_corpus(seed: u64, docs_per_slice: usize) -> (TimeSlicedCorpus, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted = rng.random_range(0..PLANTED_WORDS);
    let per_topic = PLANTED_WORDS / PLANTED_TOPICS;
    let word = |i: usize| format!("w{i:02}");
    let mut docs = Vec::new();
    for (year, planted_topic) in [
        (2019, planted / per_topic),
        (2020, (planted / per_topic + 1) % PLANTED_TOPICS),
    ] {
        let members: Vec<Vec<usize>> = (0..PLANTED_TOPICS)
            .map(|t| {
                (0..PLANTED_WORDS)
                    .filter(|&i| {
                        if i == planted {
                            t == planted_topic
                        } else {
                            i / per_topic == t
                        }
                    })
                    .collect()
            })
            .collect();
        for k in 0..docs_per_slice {
            let topic = &members[k % PLANTED_TOPICS];
            let text: Vec<String> = (0..8).map(|_| word(topic[rng.random_range(0..topic.len())])).collect();
            docs.push(Document {
                id: format!("{year}-{k}"),
                text: text.join(" "),
                date: date(year, 1 + (k % 12) as u32, 1),
            });
        }
    }
    let corpus = TimeSlicedCorpus::from_documents(docs, Granularity::Year).unwrap();
    (corpus, word(planted))
}

/// Target words `t0..t{k-1}`; word `i` changes meaning in a fraction
/// `g_i = i / (k − 1)` of its 2021 usages and in none of its 2020 usages.
pub fn graded_change_corpus(seed: u64, words: usize, usages: usize) -> (TimeSlicedCorpus, Vec<(String, f64)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    let mut truth = Vec::new();
    let context = |rng: &mut ChaCha8Rng, sense: &str, w: usize| -> String {
        let pick = |rng: &mut ChaCha8Rng| format!("{sense}{w}x{}", rng.random_range(0..6));
        let left: Vec<String> = (0..5).map(|_| pick(rng)).collect();
        let right: Vec<String> = (0..5).map(|_| pick(rng)).collect();
        format!("{} t{w} {}", left.join(" "), right.join(" "))
    };
    for w in 0..words {
        let g = w as f64 / (words - 1) as f64;
        let changed = (g * usages as f64).round() as usize;
        truth.push((format!("t{w}"), changed as f64 / usages as f64));
        for u in 0..usages {
            docs.push(Document {
                id: format!("a{w}-{u}"),
                text: context(&mut rng, "old", w),
                date: date(2020, 3, 1),
            });
            let sense = if u < changed { "new" } else { "old" };
            docs.push(Document {
                id: format!("b{w}-{u}"),
                text: context(&mut rng, sense, w),
                date: date(2021, 3, 1),
            });
        }
    }
    let corpus = TimeSlicedCorpus::from_documents(docs, Granularity::Year).unwrap();
    (corpus, truth)
}

/// Random documents over `types` words (`v0000`...) where every word occurs.
pub fn wide_corpus(seed: u64, types: usize, docs: usize) -> TimeSlicedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for k in 0..docs {
        let mut tokens: Vec<String> = (0..12).map(|_| format!("v{:04}", rng.random_range(0..types))).collect();
        if k < types {
            tokens[0] = format!("v{k:04}");
        }
        out.push(Document {
            id: format!("d{k}"),
            text: tokens.join(" "),
            date: date(2019, 6, 1),
        });
    }
    TimeSlicedCorpus::from_documents(out, Granularity::Year).unwrap()
}
