//! Seeded random instances for the Monte-Carlo checks.
//!
//! Entries of pretraining inputs, projections and test embeddings are i.i.d.
//! standard normal (projections scaled by `1/√d`), targets come from a
//! planted matrix plus Gaussian noise of scale [`NOISE_SCALE`], and the
//! ridge defaults to `1e-6`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::attention::initial_parameters;
use super::conditions::LabSetting;
use super::task::{output_gradient, solve_normal_equations, LabPoint, SyntheticTask};
use super::LabError;

pub const NOISE_SCALE: f64 = 0.1;
pub const DEFAULT_RIDGE: f64 = 1e-6;

/// Demonstrations are placed at `w_kq⁻¹(h_test + δ·ξ)` with `log10 δ`
/// uniform on this range, so trials cover both near and far samples.
pub const OFFSET_LOG10_RANGE: (f64, f64) = (-3.0, 0.5);

/// Scale of the test and upweighted inputs in influence trials, relative to
/// the unit-variance pretraining inputs.
pub const PROBE_SCALE: f64 = 0.05;

/// Influence trials whose test and upweighted residuals are closer to
/// orthogonal than this (absolute cosine) are redrawn: there the
/// first-order change vanishes and its relative error is meaningless.
pub const MIN_RESIDUAL_COSINE: f64 = 0.2;

/// Merged key-query draws with a larger condition number are redrawn.
/// Demonstrations sit at `w_kq⁻¹(h_test + δ·ξ)`, so a nearly singular
/// `w_kq` would put them, and every loss term, at extreme magnitudes.
pub const MAX_KQ_CONDITION: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabDims {
    pub d: usize,
    pub d_prime: usize,
    pub n_pretrain: usize,
    pub ridge: f64,
}

impl Default for LabDims {
    fn default() -> Self {
        Self {
            d: 8,
            d_prime: 4,
            n_pretrain: 256,
            ridge: DEFAULT_RIDGE,
        }
    }
}

impl LabDims {
    pub fn validate(&self) -> Result<(), LabError> {
        if self.d == 0 || self.d_prime == 0 {
            return Err(LabError::InvalidTask("dimensions must be positive".into()));
        }
        if self.n_pretrain < self.d.max(2) {
            return Err(LabError::InvalidTask(format!(
                "need at least max(d, 2) = {} pretraining points, got {}",
                self.d.max(2),
                self.n_pretrain
            )));
        }
        Ok(())
    }
}

fn gauss<R: Rng>(r: usize, c: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

fn gauss_vec<R: Rng>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Pretraining set whose ridge minimizer is exactly `planted`.
///
/// Gaussian noise is drawn per target, its component in the column space of
/// the inputs is replaced by the one correction that cancels the ridge
/// shrinkage, so `TᵀZ/n = planted·(ZᵀZ/n + ρI)`.
pub fn task_with_minimizer<R: Rng>(
    planted: &DMatrix<f64>,
    n: usize,
    ridge: f64,
    rng: &mut R,
) -> Result<SyntheticTask, LabError> {
    let (dp, d) = planted.shape();
    let z = gauss(n, d, rng);
    let noise = gauss(n, dp, rng) * NOISE_SCALE;
    let gram_inv = (z.transpose() * &z).try_inverse().ok_or(LabError::Singular)?;
    let proj_noise = &z * (&gram_inv * (z.transpose() * &noise));
    let shrink = &z * (&gram_inv * planted.transpose()) * (n as f64 * ridge);
    let targets = &z * planted.transpose() + noise - proj_noise + shrink;
    SyntheticTask::new(z, targets, ridge)
}

/// One sufficient-condition trial: a lab setting and `k` demonstration
/// embeddings.
#[derive(Debug, Clone)]
pub struct ConditionTrial {
    pub setting: LabSetting,
    pub demos: Vec<DVector<f64>>,
}

/// Draw a setting in which every identification the condition relies on
/// holds exactly:
///
/// - the pretrained parameters equal the initial parameters
///   `(w_v/√d)·h_test·(w_kq·h_test)ᵀ` implied by linear attention;
/// - each demonstration's sample has output gradient `(w_v/√d)·h_i`, which
///   fixes the shared target `τ = (Ŵ·w_kq − w_v/√d)·h_1`;
/// - further demonstrations differ from the first by vectors in the null
///   space of `Ŵ·w_kq − w_v/√d` (they coincide when that space is trivial).
pub fn condition_trial<R: Rng>(dims: &LabDims, k: usize, rng: &mut R) -> Result<ConditionTrial, LabError> {
    dims.validate()?;
    let (d, dp) = (dims.d, dims.d_prime);
    let scale = 1.0 / (d as f64).sqrt();
    let w_kq = loop {
        let m = gauss(d, d, rng) * scale;
        if condition_number(&m) <= MAX_KQ_CONDITION {
            break m;
        }
    };
    let w_v = gauss(dp, d, rng) * scale;
    let h_test = gauss_vec(d, rng);
    let w0 = initial_parameters(&h_test, &w_kq, &w_v);
    let task = task_with_minimizer(&w0, dims.n_pretrain, dims.ridge, rng)?;

    let kq_inv = w_kq.clone().try_inverse().ok_or(LabError::Singular)?;
    let offset = |rng: &mut R| {
        let (lo, hi) = OFFSET_LOG10_RANGE;
        let delta = 10f64.powf(rng.random_range(lo..hi));
        &kq_inv * (gauss_vec(d, rng) * delta)
    };

    let h1 = &kq_inv * &h_test + offset(rng);
    let coupling = &w0 * &w_kq - &w_v * scale;
    let target = &coupling * &h1;
    let null_proj = null_space_projector(&coupling);
    let mut demos = vec![h1.clone()];
    for _ in 1..k.max(1) {
        let step = offset(rng);
        demos.push(match &null_proj {
            Some(p) => &h1 + p * step,
            None => h1.clone(),
        });
    }
    demos.truncate(k.max(1));

    let setting = LabSetting::new(task, w_kq, w_v, h_test, target)?;
    Ok(ConditionTrial { setting, demos })
}

/// Ratio of extreme singular values; infinite for singular matrices.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let (lo, hi) = (sv.min(), sv.max());
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Orthogonal projector onto the null space of a full-row-rank wide matrix;
/// `None` when the null space is trivial or the matrix is rank deficient.
fn null_space_projector(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (rows, cols) = m.shape();
    if cols <= rows {
        return None;
    }
    let gram_inv = (m * m.transpose()).try_inverse()?;
    Some(DMatrix::identity(cols, cols) - m.transpose() * gram_inv * m)
}

/// One influence-vs-retraining trial on a generic planted regression task.
#[derive(Debug, Clone)]
pub struct InfluenceTrial {
    pub task: SyntheticTask,
    pub test: LabPoint,
    pub upweighted: LabPoint,
}

pub fn influence_trial<R: Rng>(dims: &LabDims, rng: &mut R) -> Result<InfluenceTrial, LabError> {
    dims.validate()?;
    let (d, dp, n) = (dims.d, dims.d_prime, dims.n_pretrain);
    let planted = gauss(dp, d, rng);
    let z = gauss(n, d, rng);
    let targets = &z * planted.transpose() + gauss(n, dp, rng) * NOISE_SCALE;
    let task = SyntheticTask::new(z, targets, dims.ridge)?;
    let w_hat = solve_normal_equations(&task, &[], 0.0)?;
    loop {
        let point = |rng: &mut R| {
            let x = gauss_vec(d, rng) * PROBE_SCALE;
            let t = &planted * &x + gauss_vec(dp, rng) * NOISE_SCALE;
            LabPoint::new(x, t)
        };
        let test = point(rng);
        let upweighted = point(rng);
        let r_test = output_gradient(&w_hat, &test.input, &test.target);
        let r_up = output_gradient(&w_hat, &upweighted.input, &upweighted.target);
        let denom = r_test.norm() * r_up.norm();
        if denom == 0.0 || (r_test.dot(&r_up) / denom).abs() < MIN_RESIDUAL_COSINE {
            continue;
        }
        return Ok(InfluenceTrial {
            task,
            test,
            upweighted,
        });
    }
}
