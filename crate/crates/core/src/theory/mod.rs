//! Numerical lab for the influence-function analysis of in-context
//! demonstrations.
//!
//! Linear attention over a demonstration reads as one gradient step of a
//! linear model `F(z) = W z` on the sample `z0 = w_kq·h`. The lab instantiates
//! that model with squared loss so the pretrained parameters, the Hessian and
//! the upweighted minimizers all have closed forms, then checks the
//! sufficient condition and its bound chain against exact retraining.

pub mod attention;
pub mod conditions;
pub mod generate;
pub mod influence;
pub mod task;
pub mod verify;

use thiserror::Error;

pub use attention::{linear_attention, linear_attention_unsplit, softmax_attention};
pub use conditions::{bound_chain, check_theorem1, check_theorem2, BoundChain, ConditionReport, LabSetting, RhsForm};
pub use influence::{influence, predict_test_loss};
pub use task::{pretrain, retrain_oracle, HessianSpectrum, LabPoint, Pretrained, SyntheticTask};

#[derive(Debug, Error, PartialEq)]
pub enum LabError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular system: the Hessian is not positive definite")]
    Singular,
    #[error("Hessian condition number {0:e} exceeds 1e12")]
    IllConditioned(f64),
    #[error("invalid task: {0}")]
    InvalidTask(String),
}
