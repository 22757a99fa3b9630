//! Monte-Carlo verification runs.
//!
//! Each trial `i` draws its instance from `rng::seeded(seed, i)`, so reports
//! are byte-identical for a given configuration regardless of thread count.

use rayon::prelude::*;
use serde::Serialize;

use super::conditions::{bound_chain, check_theorem1, check_theorem2, BoundChain, ConditionReport, RhsForm};
use super::generate::{condition_trial, influence_trial, LabDims};
use super::influence::influence;
use super::task::{point_loss, pretrain, retrain_oracle};
use super::LabError;
use crate::rng::seeded;

/// Relative error allowed between the first-order prediction and the exact
/// loss change at `ε = 1/|D_pre|`.
pub const INFLUENCE_REL_TOL: f64 = 1e-3;
/// Accepted range for `err(ε) / err(ε/2)`, a second-order remainder.
pub const HALVING_RATIO_RANGE: (f64, f64) = (3.5, 4.5);
/// Allowed gap between the joint k-shot prediction and the sum of singles.
pub const ADDITIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyMode {
    Theorem1,
    Theorem2,
    Bounds,
    Influence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub mode: VerifyMode,
    pub trials: usize,
    pub d: usize,
    pub d_prime: usize,
    pub n_pretrain: usize,
    pub ridge: f64,
    pub seed: u64,
    /// Demonstrations per trial in k-shot mode.
    pub k: usize,
    pub rhs_form: RhsForm,
}

impl VerifyConfig {
    pub fn new(mode: VerifyMode, trials: usize, seed: u64) -> Self {
        let dims = LabDims::default();
        Self {
            mode,
            trials,
            d: dims.d,
            d_prime: dims.d_prime,
            n_pretrain: dims.n_pretrain,
            ridge: dims.ridge,
            seed,
            k: 3,
            rhs_form: RhsForm::Derived,
        }
    }

    pub fn dims(&self) -> LabDims {
        LabDims {
            d: self.d,
            d_prime: self.d_prime,
            n_pretrain: self.n_pretrain,
            ridge: self.ridge,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Aggregate {
    pub trials: usize,
    pub holds_count: usize,
    /// Trials where the condition holds but the predicted change is not negative.
    pub taylor_violations: usize,
    pub oracle_sign_agreements: usize,
    pub chain_violations: usize,
    pub additivity_violations: usize,
    pub influence_failures: usize,
    /// Trials that could not be evaluated (singular or ill-conditioned draws).
    pub failed_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfluenceCheck {
    pub influence: f64,
    pub eps: f64,
    pub predicted_delta: f64,
    pub oracle_delta: f64,
    pub rel_error: f64,
    pub rel_error_half_eps: f64,
    /// `|err(ε)| / |err(ε/2)|`.
    pub halving_ratio: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TrialRecord {
    Condition {
        trial: usize,
        report: ConditionReport,
        chains: Vec<BoundChain>,
    },
    KShot {
        trial: usize,
        report: ConditionReport,
        single_predicted_deltas: Vec<f64>,
        additivity_error: f64,
        chains: Vec<BoundChain>,
    },
    Bounds {
        trial: usize,
        chain: BoundChain,
    },
    Influence {
        trial: usize,
        check: InfluenceCheck,
    },
    Failed {
        trial: usize,
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub aggregate: Aggregate,
    pub per_trial: Vec<TrialRecord>,
}

impl VerifyReport {
    /// No soundness invariant was violated and every trial was evaluated.
    pub fn sound(&self) -> bool {
        let a = &self.aggregate;
        a.taylor_violations == 0
            && a.chain_violations == 0
            && a.additivity_violations == 0
            && a.influence_failures == 0
            && a.failed_trials == 0
    }
}

fn same_sign(a: f64, b: f64) -> bool {
    (a < 0.0 && b < 0.0) || (a > 0.0 && b > 0.0) || (a == 0.0 && b == 0.0)
}

fn run_trial(cfg: &VerifyConfig, trial: usize) -> Result<TrialRecord, LabError> {
    let mut rng = seeded(cfg.seed, trial as u64);
    let dims = cfg.dims();
    match cfg.mode {
        VerifyMode::Theorem1 => {
            let t = condition_trial(&dims, 1, &mut rng)?;
            let setting = t.setting.with_rhs_form(cfg.rhs_form);
            let report = check_theorem1(&setting, &t.demos[0])?;
            let chain = bound_chain(&setting, &t.demos[0])?;
            Ok(TrialRecord::Condition {
                trial,
                report,
                chains: vec![chain],
            })
        }
        VerifyMode::Theorem2 => {
            let t = condition_trial(&dims, cfg.k, &mut rng)?;
            let setting = t.setting.with_rhs_form(cfg.rhs_form);
            let report = check_theorem2(&setting, &t.demos)?;
            let mut singles = Vec::with_capacity(t.demos.len());
            let mut chains = Vec::with_capacity(t.demos.len());
            for h in &t.demos {
                singles.push(check_theorem1(&setting, h)?.predicted_delta);
                chains.push(bound_chain(&setting, h)?);
            }
            let additivity_error = (report.predicted_delta - singles.iter().sum::<f64>()).abs();
            Ok(TrialRecord::KShot {
                trial,
                report,
                single_predicted_deltas: singles,
                additivity_error,
                chains,
            })
        }
        VerifyMode::Bounds => {
            let t = condition_trial(&dims, 1, &mut rng)?;
            let chain = bound_chain(&t.setting, &t.demos[0])?;
            Ok(TrialRecord::Bounds { trial, chain })
        }
        VerifyMode::Influence => {
            let t = influence_trial(&dims, &mut rng)?;
            Ok(TrialRecord::Influence {
                trial,
                check: influence_check(&t.task, &t.test, &t.upweighted)?,
            })
        }
    }
}

/// Compare the first-order prediction with exact retraining at
/// `ε = 1/|D_pre|` and `ε/2`.
pub fn influence_check(
    task: &super::task::SyntheticTask,
    test: &super::task::LabPoint,
    upweighted: &super::task::LabPoint,
) -> Result<InfluenceCheck, LabError> {
    let pre = pretrain(task)?;
    let infl = influence(&pre, test, std::slice::from_ref(upweighted))?;
    let base = point_loss(&pre.w_hat, &test.input, &test.target);
    let eps = 1.0 / pre.n_pretrain as f64;
    let gap = |e: f64| -> Result<(f64, f64), LabError> {
        let (_, loss) = retrain_oracle(task, std::slice::from_ref(upweighted), e, test)?;
        let oracle = loss - base;
        Ok((oracle, oracle - e * infl))
    };
    let (oracle_delta, err) = gap(eps)?;
    let (oracle_half, err_half) = gap(eps / 2.0)?;
    let rel_error = (err / oracle_delta).abs();
    let rel_error_half_eps = (err_half / oracle_half).abs();
    let halving_ratio = (err / err_half).abs();
    let (lo, hi) = HALVING_RATIO_RANGE;
    Ok(InfluenceCheck {
        influence: infl,
        eps,
        predicted_delta: eps * infl,
        oracle_delta,
        rel_error,
        rel_error_half_eps,
        halving_ratio,
        ok: rel_error <= INFLUENCE_REL_TOL && (lo..=hi).contains(&halving_ratio),
    })
}

fn tally(agg: &mut Aggregate, report: &ConditionReport) {
    if report.holds {
        agg.holds_count += 1;
        if report.predicted_delta >= 0.0 {
            agg.taylor_violations += 1;
        }
    }
    if same_sign(report.predicted_delta, report.oracle_delta) {
        agg.oracle_sign_agreements += 1;
    }
}

pub fn run_verify(cfg: &VerifyConfig) -> VerifyReport {
    let per_trial: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            run_trial(cfg, trial).unwrap_or_else(|e| TrialRecord::Failed {
                trial,
                error: e.to_string(),
            })
        })
        .collect();

    let mut agg = Aggregate {
        trials: cfg.trials,
        ..Aggregate::default()
    };
    for rec in &per_trial {
        match rec {
            TrialRecord::Condition { report, chains, .. } => {
                tally(&mut agg, report);
                agg.chain_violations += chains.iter().filter(|c| !c.chain_ok).count();
            }
            TrialRecord::KShot {
                report,
                additivity_error,
                chains,
                ..
            } => {
                tally(&mut agg, report);
                agg.chain_violations += chains.iter().filter(|c| !c.chain_ok).count();
                if additivity_error.is_nan() || *additivity_error > ADDITIVITY_TOL {
                    agg.additivity_violations += 1;
                }
            }
            TrialRecord::Bounds { chain, .. } => {
                if !chain.chain_ok {
                    agg.chain_violations += 1;
                }
            }
            TrialRecord::Influence { check, .. } => {
                if !check.ok {
                    agg.influence_failures += 1;
                }
                if same_sign(check.predicted_delta, check.oracle_delta) {
                    agg.oracle_sign_agreements += 1;
                }
            }
            TrialRecord::Failed { .. } => agg.failed_trials += 1,
        }
    }

    VerifyReport {
        config: *cfg,
        aggregate: agg,
        per_trial,
    }
}
