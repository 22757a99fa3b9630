//! Top-k selection with relative-rank rejection.
//!
//! Candidates are visited in score order (ascending by default, ties by pool
//! index). Each of the first `k` is kept only if its similarity rank fraction
//! is within `lambda`; rejected candidates are not replaced. When nothing
//! survives the result is a zero-shot verdict.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scoring::ScoredDemonstration;

#[derive(Debug, Error, PartialEq)]
pub enum SelectionError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("lambda must lie in (0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("no test items to aggregate")]
    NoTests,
}

/// Which end of the score order counts as best.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// Smallest score first.
    #[default]
    Min,
    /// Largest score first.
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub k: usize,
    pub lambda: f64,
    pub polarity: Polarity,
}

impl SelectionConfig {
    pub fn new(k: usize, lambda: f64, polarity: Polarity) -> Result<Self, SelectionError> {
        if k == 0 {
            return Err(SelectionError::InvalidK);
        }
        check_lambda(lambda)?;
        Ok(Self { k, lambda, polarity })
    }
}

fn check_lambda(lambda: f64) -> Result<(), SelectionError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(SelectionError::InvalidLambda(lambda));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedDemonstration {
    pub id: String,
    pub sim_rank_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Best candidate first.
    pub chosen: Vec<ScoredDemonstration>,
    pub rejected: Vec<RejectedDemonstration>,
    pub zero_shot: bool,
    pub pool_size: usize,
}

/// Pool indices in candidate order for `polarity`, ties broken by index.
pub fn candidate_order(scored: &[ScoredDemonstration], polarity: Polarity) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| {
        let ord = scored[a].score.total_cmp(&scored[b].score);
        match polarity {
            Polarity::Min => ord,
            Polarity::Max => ord.reverse(),
        }
        .then(a.cmp(&b))
    });
    order
}

pub fn select_lms3(scored: &[ScoredDemonstration], cfg: &SelectionConfig) -> SelectionResult {
    let mut chosen = Vec::new();
    let mut rejected = Vec::new();
    for idx in candidate_order(scored, cfg.polarity).into_iter().take(cfg.k) {
        let cand = &scored[idx];
        if cand.sim_rank_fraction <= cfg.lambda {
            chosen.push(cand.clone());
        } else {
            rejected.push(RejectedDemonstration {
                id: cand.id.clone(),
                sim_rank_fraction: cand.sim_rank_fraction,
            });
        }
    }
    SelectionResult {
        zero_shot: chosen.is_empty(),
        chosen,
        rejected,
        pool_size: scored.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub mean_chosen: f64,
    pub zero_shot_rate: f64,
}

/// Selection statistics across tests for each rejection threshold.
pub fn sweep_lambda(
    scored_per_test: &[Vec<ScoredDemonstration>],
    lambdas: &[f64],
    k: usize,
    polarity: Polarity,
) -> Result<Vec<SweepRow>, SelectionError> {
    if scored_per_test.is_empty() {
        return Err(SelectionError::NoTests);
    }
    if k == 0 {
        return Err(SelectionError::InvalidK);
    }
    lambdas.iter().try_for_each(|&l| check_lambda(l))?;

    let orders: Vec<Vec<usize>> = scored_per_test
        .iter()
        .map(|s| candidate_order(s, polarity))
        .collect();
    let n = scored_per_test.len() as f64;

    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let mut total_chosen = 0usize;
            let mut zero_shot = 0usize;
            for (scored, order) in scored_per_test.iter().zip(&orders) {
                let kept = order
                    .iter()
                    .take(k)
                    .filter(|&&i| scored[i].sim_rank_fraction <= lambda)
                    .count();
                total_chosen += kept;
                if kept == 0 {
                    zero_shot += 1;
                }
            }
            SweepRow {
                lambda,
                mean_chosen: total_chosen as f64 / n,
                zero_shot_rate: zero_shot as f64 / n,
            }
        })
        .collect())
}
