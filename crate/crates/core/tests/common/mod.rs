#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::process::{Command, Output};

use lms3::bundle::{Bundle, Demonstration, DemonstrationPool, ProjectionBundle, TestItem};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gauss<R: Rng>(r: usize, c: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

pub fn gauss_vec<R: Rng>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

const WORDS: [&str; 10] = ["alpha", "beta", "gamma", "sum", "root", "area", "mod", "x", "7", "42"];

pub fn random_text<R: Rng>(rng: &mut R) -> String {
    let n = rng.random_range(0..8);
    let mut words: Vec<String> = (0..n).map(|_| WORDS[rng.random_range(0..WORDS.len())].to_string()).collect();
    if rng.random_bool(0.2) {
        words.push("ünïcode \"quoted\"\ttab".into());
    }
    words.join(" ")
}

/// A bundle with random sizes, values spanning many magnitudes and awkward text.
pub fn random_bundle<R: Rng>(rng: &mut R, m: usize, n: usize, d: usize, dp: usize) -> Bundle {
    let wild = |rng: &mut R| {
        let g: f64 = StandardNormal.sample(rng);
        g * 10f64.powi(rng.random_range(-300..300))
    };
    let w_kq = DMatrix::from_fn(d, d, |_, _| wild(rng));
    let w_v = DMatrix::from_fn(dp, d, |_, _| wild(rng));
    let projection = ProjectionBundle::new(w_kq, w_v, "random").unwrap();
    let items = (0..m)
        .map(|i| Demonstration {
            id: format!("d{i}-{}", rng.random_range(0..1000)),
            problem: random_text(rng),
            solution: random_text(rng),
            embedding: DVector::from_fn(d, |_, _| wild(rng)),
        })
        .collect();
    let tests = (0..n)
        .map(|i| TestItem {
            id: format!("t{i}"),
            problem: random_text(rng),
            embedding: DVector::from_fn(d, |_, _| wild(rng)),
        })
        .collect();
    Bundle::new(projection, DemonstrationPool::new(d, items).unwrap(), tests).unwrap()
}

/// Bit-level equality of two bundles' numeric content plus text equality.
pub fn bundles_bit_equal(a: &Bundle, b: &Bundle) -> bool {
    let bits = |m: &DMatrix<f64>| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let vbits = |v: &DVector<f64>| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    a.projection.d == b.projection.d
        && a.projection.d_prime == b.projection.d_prime
        && a.projection.w_kq.shape() == b.projection.w_kq.shape()
        && bits(&a.projection.w_kq) == bits(&b.projection.w_kq)
        && bits(&a.projection.w_v) == bits(&b.projection.w_v)
        && a.pool.items.len() == b.pool.items.len()
        && a.pool.items.iter().zip(&b.pool.items).all(|(x, y)| {
            x.id == y.id && x.problem == y.problem && x.solution == y.solution && vbits(&x.embedding) == vbits(&y.embedding)
        })
        && a.tests.len() == b.tests.len()
        && a
            .tests
            .iter()
            .zip(&b.tests)
            .all(|(x, y)| x.id == y.id && x.problem == y.problem && vbits(&x.embedding) == vbits(&y.embedding))
}

pub fn lms3(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lms3"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn lms3_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lms3"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

// Direct-formula retrieval oracles, written against the documented
// conventions without sharing code with the library.

pub fn oracle_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn counts(tokens: &[String]) -> HashMap<String, f64> {
    let mut m = HashMap::new();
    for t in tokens {
        *m.entry(t.clone()).or_insert(0.0) += 1.0;
    }
    m
}

fn doc_freq(docs: &[Vec<String>], term: &str) -> f64 {
    docs.iter().filter(|d| d.iter().any(|t| t == term)).count() as f64
}

pub fn oracle_tfidf_cosines(docs: &[&str], query: &str) -> Vec<f64> {
    let toks: Vec<Vec<String>> = docs.iter().map(|d| oracle_tokens(d)).collect();
    let n = docs.len() as f64;
    let idf = |t: &str| ((1.0 + n) / (1.0 + doc_freq(&toks, t))).ln() + 1.0;
    let weigh = |tokens: &[String]| -> HashMap<String, f64> {
        let c = counts(tokens);
        let mut w: HashMap<String, f64> = c.into_iter().map(|(t, tf)| {
            let v = tf * idf(&t);
            (t, v)
        }).collect();
        let norm = w.values().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            w.values_mut().for_each(|v| *v /= norm);
        }
        w
    };
    let q = weigh(&oracle_tokens(query));
    toks.iter()
        .map(|d| {
            let w = weigh(d);
            q.iter().map(|(t, v)| v * w.get(t).copied().unwrap_or(0.0)).sum()
        })
        .collect()
}

pub fn oracle_bm25(docs: &[&str], query: &str, k1: f64, b: f64) -> Vec<f64> {
    let toks: Vec<Vec<String>> = docs.iter().map(|d| oracle_tokens(d)).collect();
    let n = docs.len() as f64;
    let avgdl = toks.iter().map(|t| t.len() as f64).sum::<f64>() / n;
    let q = oracle_tokens(query);
    toks.iter()
        .map(|d| {
            let dl = d.len() as f64;
            q.iter()
                .map(|term| {
                    let tf = d.iter().filter(|t| *t == term).count() as f64;
                    let df = doc_freq(&toks, term);
                    let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                    idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl))
                })
                .sum()
        })
        .collect()
}

/// Rank vector (0-based dense ordering positions) by ascending value, ties by index.
pub fn argsort(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    idx
}

pub fn id_set(ids: impl IntoIterator<Item = String>) -> HashSet<String> {
    ids.into_iter().collect()
}
