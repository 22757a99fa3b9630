//! Influence of upweighting training points on a test loss, and the
//! first-order loss prediction built from it.

use nalgebra::DMatrix;

use super::task::{point_gradient, vectorize, LabPoint, Pretrained};
use super::LabError;

/// Condition numbers above this are refused.
pub const MAX_CONDITION: f64 = 1e12;

/// `−vec(g_test)ᵀ H⁻¹ vec(g_up)` for parameter-space gradients.
pub fn influence_of_gradients(
    pre: &Pretrained,
    grad_test: &DMatrix<f64>,
    grad_up: &DMatrix<f64>,
) -> Result<f64, LabError> {
    let cond = pre.spectrum.condition_number();
    if cond.is_nan() || cond > MAX_CONDITION {
        return Err(LabError::IllConditioned(cond));
    }
    if grad_test.shape() != pre.w_hat.shape() || grad_up.shape() != pre.w_hat.shape() {
        return Err(LabError::DimensionMismatch(format!(
            "gradients {:?} / {:?}, parameters {:?}",
            grad_test.shape(),
            grad_up.shape(),
            pre.w_hat.shape()
        )));
    }
    let x = pre.solve(&vectorize(grad_up));
    Ok(-vectorize(grad_test).dot(&x))
}

/// Derivative of the test loss with respect to the weight on `upweighted`,
/// at zero weight. Several points are upweighted jointly.
pub fn influence(pre: &Pretrained, test: &LabPoint, upweighted: &[LabPoint]) -> Result<f64, LabError> {
    let w = &pre.w_hat;
    let g_test = point_gradient(w, &test.input, &test.target);
    let mut g_up = DMatrix::zeros(w.nrows(), w.ncols());
    for p in upweighted {
        if p.input.len() != w.ncols() || p.target.len() != w.nrows() {
            return Err(LabError::DimensionMismatch(format!(
                "point input {} / target {}, parameters {:?}",
                p.input.len(),
                p.target.len(),
                w.shape()
            )));
        }
        g_up += point_gradient(w, &p.input, &p.target);
    }
    influence_of_gradients(pre, &g_test, &g_up)
}

/// First-order test loss after upweighting by `1 / pretrain_size`.
pub fn predict_test_loss(base_loss: f64, influence_value: f64, pretrain_size: usize) -> f64 {
    assert!(pretrain_size >= 1, "pretrain_size must be positive");
    base_loss + influence_value / pretrain_size as f64
}
