//! Per-demonstration scores.
//!
//! `sim` is the distance between the test embedding and the demonstration
//! embedding pushed through the merged key-query matrix; `stab` is the norm of
//! the scaled value projection of the demonstration. Both are "smaller is
//! better" and are combined by product (default) or weighted sum.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{DemonstrationPool, ProjectionBundle, TestItem};

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("demonstration pool is empty; use zero-shot")]
    EmptyPool,
    #[error("lambda1 must be finite and non-negative, got {0}")]
    InvalidLambda1(f64),
    #[error("z-score normalization needs at least 2 values, got {0}")]
    TooFewValues(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreVariant {
    #[default]
    Product,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub variant: ScoreVariant,
    /// Weight on `stab` for the sum variant; ignored by the product variant.
    pub lambda1: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            variant: ScoreVariant::Product,
            lambda1: 1.0,
        }
    }
}

impl ScoreConfig {
    pub fn new(variant: ScoreVariant, lambda1: f64) -> Result<Self, ScoreError> {
        if !lambda1.is_finite() || lambda1 < 0.0 {
            return Err(ScoreError::InvalidLambda1(lambda1));
        }
        Ok(Self { variant, lambda1 })
    }

    pub fn combine(&self, sim: f64, stab: f64) -> f64 {
        match self.variant {
            ScoreVariant::Product => sim * stab,
            ScoreVariant::Sum => sim + self.lambda1 * stab,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDemonstration {
    pub id: String,
    pub sim: f64,
    pub stab: f64,
    pub score: f64,
    /// Min-rank of `sim` in ascending order over the pool, divided by pool size.
    pub sim_rank_fraction: f64,
}

/// `‖h_test − w_kq·h‖`.
pub fn sim(h_test: &DVector<f64>, h: &DVector<f64>, w_kq: &DMatrix<f64>) -> Result<f64, ScoreError> {
    let d = h_test.len();
    if h.len() != d || w_kq.shape() != (d, d) {
        return Err(ScoreError::DimensionMismatch(format!(
            "h_test has length {d}, h has length {}, w_kq is {:?}",
            h.len(),
            w_kq.shape()
        )));
    }
    Ok((h_test - w_kq * h).norm())
}

/// `‖w_v·h‖ / √d`.
pub fn stab(h: &DVector<f64>, w_v: &DMatrix<f64>, d: usize) -> Result<f64, ScoreError> {
    if h.len() != d || w_v.ncols() != d || d == 0 {
        return Err(ScoreError::DimensionMismatch(format!(
            "h has length {}, w_v is {:?}, d = {d}",
            h.len(),
            w_v.shape()
        )));
    }
    Ok((w_v * h).norm() / (d as f64).sqrt())
}

/// Min-rank fractions: `(1 + #{j : v_j < v_i}) / n`.
pub fn rank_fractions(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    values
        .iter()
        .map(|v| {
            let below = sorted.partition_point(|x| x.total_cmp(v).is_lt());
            (below + 1) as f64 / n as f64
        })
        .collect()
}

/// Score every demonstration in `pool` against `test`, in pool order.
///
/// Each embedding is encoded on its own, so a run over `N` tests touches each
/// of the `M` precomputed demonstration embeddings once per test and never
/// re-encodes pairs.
pub fn score_pool(
    projection: &ProjectionBundle,
    pool: &DemonstrationPool,
    test: &TestItem,
    cfg: &ScoreConfig,
) -> Result<Vec<ScoredDemonstration>, ScoreError> {
    if pool.is_empty() {
        return Err(ScoreError::EmptyPool);
    }
    let d = projection.d;
    if test.embedding.len() != d || pool.d != d {
        return Err(ScoreError::DimensionMismatch(format!(
            "test embedding length {}, pool dimension {}, projection dimension {d}",
            test.embedding.len(),
            pool.d
        )));
    }

    let pairs: Vec<(f64, f64)> = pool
        .items
        .par_iter()
        .map(|item| {
            Ok((
                sim(&test.embedding, &item.embedding, &projection.w_kq)?,
                stab(&item.embedding, &projection.w_v, d)?,
            ))
        })
        .collect::<Result<_, ScoreError>>()?;

    let sims: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ranks = rank_fractions(&sims);
    Ok(pool
        .items
        .iter()
        .zip(pairs)
        .zip(ranks)
        .map(|((item, (sim, stab)), rank)| ScoredDemonstration {
            id: item.id.clone(),
            sim,
            stab,
            score: cfg.combine(sim, stab),
            sim_rank_fraction: rank,
        })
        .collect())
}

/// Standardize with the sample standard deviation (n − 1); constant input
/// maps to all zeros.
pub fn zscore_normalize(values: &[f64]) -> Result<Vec<f64>, ScoreError> {
    let n = values.len();
    if n < 2 {
        return Err(ScoreError::TooFewValues(n));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd == 0.0 {
        return Ok(vec![0.0; n]);
    }
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}
