//! Reference selectors: uniform random, TF-IDF nearest neighbour and Okapi
//! BM25. All of them rank demonstration problem text only.
//!
//! Tokens are lowercased runs of alphanumeric characters; digits are kept.

use std::collections::HashMap;

use thiserror::Error;

use crate::bundle::DemonstrationPool;
use crate::rng::{sample_indices, seeded};

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("k = {k} exceeds pool size {m}")]
    KExceedsPool { k: usize, m: usize },
    #[error("demonstration pool is empty")]
    EmptyPool,
    #[error("invalid BM25 parameters k1={k1}, b={b}")]
    InvalidParams { k1: f64, b: f64 },
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn term_counts(tokens: &[String]) -> HashMap<&str, usize> {
    let mut counts = HashMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    counts
}

/// A ranked pick: pool index and the score that ranked it.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranked {
    pub index: usize,
    pub score: f64,
}

/// Top `k` by descending score, ties by pool index.
fn top_k(scores: &[f64], k: usize) -> Vec<Ranked> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .take(k)
        .map(|index| Ranked {
            index,
            score: scores[index],
        })
        .collect()
}

fn check_k(pool: &DemonstrationPool, k: usize) -> Result<(), BaselineError> {
    if pool.is_empty() {
        return Err(BaselineError::EmptyPool);
    }
    if k > pool.len() {
        return Err(BaselineError::KExceedsPool { k, m: pool.len() });
    }
    Ok(())
}

/// `k` distinct demonstration ids drawn uniformly without replacement.
pub fn select_random(pool: &DemonstrationPool, k: usize, seed: u64) -> Result<Vec<String>, BaselineError> {
    select_random_stream(pool, k, seed, 0)
}

/// As [`select_random`], drawing from stream `stream` of the seeded generator
/// so that each test item gets its own independent draw.
pub fn select_random_stream(
    pool: &DemonstrationPool,
    k: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<String>, BaselineError> {
    if k > pool.len() {
        return Err(BaselineError::KExceedsPool { k, m: pool.len() });
    }
    let mut rng = seeded(seed, stream);
    Ok(sample_indices(&mut rng, pool.len(), k)
        .into_iter()
        .map(|i| pool.items[i].id.clone())
        .collect())
}

/// TF-IDF index over the demonstration problems.
///
/// Raw term frequency times smoothed idf `ln((1 + N) / (1 + df)) + 1`,
/// L2-normalized; similarity is the cosine.
#[derive(Debug, Clone)]
pub struct TfIdfIndex {
    n_docs: usize,
    df: HashMap<String, usize>,
    docs: Vec<HashMap<String, f64>>,
}

impl TfIdfIndex {
    pub fn new<S: AsRef<str>>(docs: &[S]) -> Self {
        let tokenized: Vec<Vec<String>> = docs.iter().map(|d| tokenize(d.as_ref())).collect();
        let mut df: HashMap<String, usize> = HashMap::new();
        for toks in &tokenized {
            for t in term_counts(toks).keys() {
                *df.entry((*t).to_string()).or_insert(0) += 1;
            }
        }
        let mut index = Self {
            n_docs: docs.len(),
            df,
            docs: Vec::new(),
        };
        index.docs = tokenized.iter().map(|t| index.vectorize(t)).collect();
        index
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0) as f64;
        ((1.0 + self.n_docs as f64) / (1.0 + df)).ln() + 1.0
    }

    fn vectorize(&self, tokens: &[String]) -> HashMap<String, f64> {
        let mut v: HashMap<String, f64> = term_counts(tokens)
            .into_iter()
            .map(|(t, c)| (t.to_string(), c as f64 * self.idf(t)))
            .collect();
        let norm = v.values().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.values_mut().for_each(|x| *x /= norm);
        }
        v
    }

    /// Cosine similarity of `query` against every document, in pool order.
    /// `None` when the query has no tokens.
    pub fn similarities(&self, query: &str) -> Option<Vec<f64>> {
        let toks = tokenize(query);
        if toks.is_empty() {
            return None;
        }
        let q = self.vectorize(&toks);
        Some(
            self.docs
                .iter()
                .map(|doc| q.iter().map(|(t, w)| w * doc.get(t).copied().unwrap_or(0.0)).sum())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfSelection {
    pub picks: Vec<Ranked>,
    /// The query tokenized to nothing; `picks` is the pool-order prefix.
    pub fallback: bool,
}

pub fn select_tfidf(pool: &DemonstrationPool, query: &str, k: usize) -> Result<TfIdfSelection, BaselineError> {
    check_k(pool, k)?;
    let problems: Vec<&str> = pool.items.iter().map(|it| it.problem.as_str()).collect();
    let index = TfIdfIndex::new(&problems);
    Ok(match index.similarities(query) {
        Some(sims) => TfIdfSelection {
            picks: top_k(&sims, k),
            fallback: false,
        },
        None => TfIdfSelection {
            picks: (0..k).map(|index| Ranked { index, score: 0.0 }).collect(),
            fallback: true,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.5, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self, BaselineError> {
        if !(k1.is_finite() && k1 > 0.0 && (0.0..=1.0).contains(&b)) {
            return Err(BaselineError::InvalidParams { k1, b });
        }
        Ok(Self { k1, b })
    }
}

/// Document lengths, average length and document frequencies.
#[derive(Debug, Clone)]
pub struct CorpusStats {
    pub doc_lens: Vec<usize>,
    pub avgdl: f64,
    pub df: HashMap<String, usize>,
    term_freqs: Vec<HashMap<String, usize>>,
}

impl CorpusStats {
    pub fn new<S: AsRef<str>>(docs: &[S]) -> Self {
        let tokenized: Vec<Vec<String>> = docs.iter().map(|d| tokenize(d.as_ref())).collect();
        let doc_lens: Vec<usize> = tokenized.iter().map(Vec::len).collect();
        let avgdl = if docs.is_empty() {
            0.0
        } else {
            doc_lens.iter().sum::<usize>() as f64 / docs.len() as f64
        };
        let term_freqs: Vec<HashMap<String, usize>> = tokenized
            .iter()
            .map(|t| term_counts(t).into_iter().map(|(k, v)| (k.to_string(), v)).collect())
            .collect();
        let mut df = HashMap::new();
        for tf in &term_freqs {
            for t in tf.keys() {
                *df.entry(t.clone()).or_insert(0) += 1;
            }
        }
        Self {
            doc_lens,
            avgdl,
            df,
            term_freqs,
        }
    }

    pub fn n_docs(&self) -> usize {
        self.doc_lens.len()
    }

    /// `ln(1 + (N − df + 0.5) / (df + 0.5))`.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.n_docs() as f64;
        let df = self.df.get(term).copied().unwrap_or(0) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    pub fn term_freq(&self, doc: usize, term: &str) -> usize {
        self.term_freqs[doc].get(term).copied().unwrap_or(0)
    }
}

/// One term's contribution for frequency `tf` in a document of length `doc_len`.
pub fn bm25_term(idf: f64, tf: f64, doc_len: f64, avgdl: f64, params: &Bm25Params) -> f64 {
    if tf == 0.0 {
        return 0.0;
    }
    let norm = 1.0 - params.b + params.b * doc_len / avgdl;
    idf * tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
}

/// Okapi BM25 of `query` against document `doc`. Repeated query tokens each
/// contribute.
pub fn bm25_score(query: &str, doc: usize, stats: &CorpusStats, params: &Bm25Params) -> f64 {
    let dl = stats.doc_lens[doc] as f64;
    tokenize(query)
        .iter()
        .map(|t| bm25_term(stats.idf(t), stats.term_freq(doc, t) as f64, dl, stats.avgdl, params))
        .sum()
}

pub fn select_bm25(
    pool: &DemonstrationPool,
    query: &str,
    k: usize,
    params: &Bm25Params,
) -> Result<Vec<Ranked>, BaselineError> {
    check_k(pool, k)?;
    let problems: Vec<&str> = pool.items.iter().map(|it| it.problem.as_str()).collect();
    let stats = CorpusStats::new(&problems);
    let scores: Vec<f64> = (0..stats.n_docs())
        .map(|i| bm25_score(query, i, &stats, params))
        .collect();
    Ok(top_k(&scores, k))
}
