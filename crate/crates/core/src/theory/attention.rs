//! Single-layer attention over `[h_1, .., h_k, h_test]` with the merged
//! key-query matrix, in softmax form and in its linearized form.
//!
//! Logit of column `x` is `(w_kq·x)·h_test / √d`. The linear form drops the
//! softmax and splits into a test-only term plus one term per demonstration,
//! which reads as one gradient step of `F(z) = W z` from `W0` on the samples
//! `z_i = w_kq·h_i`.

use nalgebra::{DMatrix, DVector};

use super::LabError;

fn check(
    hs: &[DVector<f64>],
    h_test: &DVector<f64>,
    w_kq: &DMatrix<f64>,
    w_v: &DMatrix<f64>,
) -> Result<usize, LabError> {
    let d = h_test.len();
    if d == 0 || w_kq.shape() != (d, d) || w_v.ncols() != d || hs.iter().any(|h| h.len() != d) {
        return Err(LabError::DimensionMismatch(format!(
            "h_test length {d}, w_kq {:?}, w_v {:?}, demonstration lengths {:?}",
            w_kq.shape(),
            w_v.shape(),
            hs.iter().map(|h| h.len()).collect::<Vec<_>>()
        )));
    }
    Ok(d)
}

/// Columns `[h_1, .., h_k, h_test]`.
fn context(hs: &[DVector<f64>], h_test: &DVector<f64>) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = hs.iter().cloned().chain(std::iter::once(h_test.clone())).collect();
    DMatrix::from_columns(&cols)
}

pub fn softmax_attention(
    hs: &[DVector<f64>],
    h_test: &DVector<f64>,
    w_kq: &DMatrix<f64>,
    w_v: &DMatrix<f64>,
) -> Result<DVector<f64>, LabError> {
    let d = check(hs, h_test, w_kq, w_v)?;
    let x = context(hs, h_test);
    let logits = (w_kq * &x).transpose() * h_test / (d as f64).sqrt();
    let max = logits.max();
    let exp = logits.map(|l| (l - max).exp());
    let weights = &exp / exp.sum();
    Ok(w_v * (x * weights))
}

/// Linear attention evaluated term by term:
/// `(w_v/√d)·h_test·((w_kq h_test)·h_test) + Σ_i (w_v/√d)·h_i·((w_kq h_i)·h_test)`.
pub fn linear_attention(
    hs: &[DVector<f64>],
    h_test: &DVector<f64>,
    w_kq: &DMatrix<f64>,
    w_v: &DMatrix<f64>,
) -> Result<DVector<f64>, LabError> {
    check(hs, h_test, w_kq, w_v)?;
    let mut out = linear_term(h_test, h_test, w_kq, w_v);
    for h in hs {
        out += linear_term(h, h_test, w_kq, w_v);
    }
    Ok(out)
}

/// Contribution of one context column `h` to the linear attention output.
pub fn linear_term(
    h: &DVector<f64>,
    h_test: &DVector<f64>,
    w_kq: &DMatrix<f64>,
    w_v: &DMatrix<f64>,
) -> DVector<f64> {
    meta_gradient(h, w_v) * (w_kq * h).dot(h_test)
}

/// Linear attention in matrix form: `w_v·X·((w_kq·X)^T·h_test) / √d`.
pub fn linear_attention_unsplit(
    hs: &[DVector<f64>],
    h_test: &DVector<f64>,
    w_kq: &DMatrix<f64>,
    w_v: &DMatrix<f64>,
) -> Result<DVector<f64>, LabError> {
    let d = check(hs, h_test, w_kq, w_v)?;
    let x = context(hs, h_test);
    let logits = (w_kq * &x).transpose() * h_test;
    Ok(w_v * (x * logits) / (d as f64).sqrt())
}

/// Initial parameters of the equivalent linear model:
/// `W0 = (w_v/√d)·h_test·(w_kq·h_test)^T`.
pub fn initial_parameters(h_test: &DVector<f64>, w_kq: &DMatrix<f64>, w_v: &DMatrix<f64>) -> DMatrix<f64> {
    meta_gradient(h_test, w_v) * (w_kq * h_test).transpose()
}

/// Output-side gradient attributed to a demonstration: `(w_v/√d)·h`.
pub fn meta_gradient(h: &DVector<f64>, w_v: &DMatrix<f64>) -> DVector<f64> {
    w_v * h / (h.len() as f64).sqrt()
}
