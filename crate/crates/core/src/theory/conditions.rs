//! Sufficient conditions for demonstrations to lower the test loss, and the
//! chain of inequalities they rest on.
//!
//! A [`LabSetting`] fixes the pretrained linear model, the attention
//! projections and the test embedding. Demonstrations enter as samples
//! `z_i = w_kq·h_i`. The test point and the demonstration samples share one
//! output-side loss `L(F) = ½‖F − τ‖²`, so `∇_F L` is 1-Lipschitz in `F`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::attention::meta_gradient;
use super::influence::influence;
use super::task::{output_gradient, point_gradient, point_loss, pretrain, retrain_oracle, vectorize, LabPoint, Pretrained, SyntheticTask};
use super::LabError;

/// Which right-hand side decides `holds`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RhsForm {
    /// `Σ‖h_test − z_i‖·(stab_i + μ·C1)`, what the bound chain yields.
    #[default]
    Derived,
    /// `Σ‖h_test − z_i‖·(stab_i + μ·C1·‖h_test‖)`, with an extra `‖h_test‖`
    /// on the Lipschitz term.
    Extended,
}

#[derive(Debug, Clone)]
pub struct LabSetting {
    pub task: SyntheticTask,
    pub pre: Pretrained,
    pub w_kq: DMatrix<f64>,
    pub w_v: DMatrix<f64>,
    pub h_test: DVector<f64>,
    /// Target shared by the test point and every demonstration sample.
    pub target: DVector<f64>,
    pub mu: f64,
    pub rhs_form: RhsForm,
}

impl LabSetting {
    pub fn new(
        task: SyntheticTask,
        w_kq: DMatrix<f64>,
        w_v: DMatrix<f64>,
        h_test: DVector<f64>,
        target: DVector<f64>,
    ) -> Result<Self, LabError> {
        let (d, dp) = (task.d, task.d_prime);
        if w_kq.shape() != (d, d) || w_v.shape() != (dp, d) || h_test.len() != d || target.len() != dp {
            return Err(LabError::DimensionMismatch(format!(
                "task d={d} d'={dp}; w_kq {:?}, w_v {:?}, h_test {}, target {}",
                w_kq.shape(),
                w_v.shape(),
                h_test.len(),
                target.len()
            )));
        }
        let pre = pretrain(&task)?;
        Ok(Self {
            task,
            pre,
            w_kq,
            w_v,
            h_test,
            target,
            mu: 1.0,
            rhs_form: RhsForm::Derived,
        })
    }

    pub fn with_rhs_form(mut self, form: RhsForm) -> Self {
        self.rhs_form = form;
        self
    }

    pub fn test_point(&self) -> LabPoint {
        LabPoint::new(self.h_test.clone(), self.target.clone())
    }

    /// Sample induced by demonstration embedding `h`.
    pub fn sample(&self, h: &DVector<f64>) -> LabPoint {
        LabPoint::new(&self.w_kq * h, self.target.clone())
    }

    /// `C1 = ‖(w_v/√d)·h_test‖·‖w_kq·h_test‖·‖h_test‖`.
    pub fn c1(&self) -> f64 {
        meta_gradient(&self.h_test, &self.w_v).norm() * (&self.w_kq * &self.h_test).norm() * self.h_test.norm()
    }

    pub fn base_loss(&self) -> f64 {
        point_loss(&self.pre.w_hat, &self.h_test, &self.target)
    }

    pub fn test_gradient(&self) -> DMatrix<f64> {
        point_gradient(&self.pre.w_hat, &self.h_test, &self.target)
    }

    fn check_embedding(&self, h: &DVector<f64>) -> Result<(), LabError> {
        if h.len() != self.task.d {
            return Err(LabError::DimensionMismatch(format!(
                "demonstration embedding has length {}, expected {}",
                h.len(),
                self.task.d
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub k: usize,
    pub lhs: f64,
    /// Right-hand side selected by `rhs_form`.
    pub rhs: f64,
    pub rhs_derived: f64,
    pub rhs_extended: f64,
    pub rhs_form: RhsForm,
    pub holds: bool,
    pub mu: f64,
    pub c1: f64,
    pub grad_norm_test: f64,
    pub base_loss: f64,
    /// First-order change of the test loss at weight `1/|D_pre|`.
    pub predicted_delta: f64,
    /// Exact change from re-solving the upweighted objective.
    pub oracle_delta: f64,
    /// `max_i ‖∇_F L(z_i, Ŵ) − (w_v/√d)·h_i‖`; zero when the sample's
    /// output gradient is the demonstration's meta-gradient.
    pub meta_gradient_residual: f64,
}

pub fn check_theorem1(setting: &LabSetting, h: &DVector<f64>) -> Result<ConditionReport, LabError> {
    check_theorem2(setting, std::slice::from_ref(h))
}

pub fn check_theorem2(setting: &LabSetting, hs: &[DVector<f64>]) -> Result<ConditionReport, LabError> {
    if hs.is_empty() {
        return Err(LabError::InvalidTask("at least one demonstration is required".into()));
    }
    for h in hs {
        setting.check_embedding(h)?;
    }
    let k = hs.len();
    let spec = &setting.pre.spectrum;
    let w_hat = &setting.pre.w_hat;
    let grad_norm_test = setting.test_gradient().norm();
    let lhs = k as f64 * spec.eig_min_hinv / spec.eig_max_hinv * grad_norm_test;

    let c1 = setting.c1();
    let h_test_norm = setting.h_test.norm();
    let samples: Vec<LabPoint> = hs.iter().map(|h| setting.sample(h)).collect();
    let mut rhs_derived = 0.0;
    let mut rhs_extended = 0.0;
    let mut meta_gradient_residual = 0.0f64;
    for (h, s) in hs.iter().zip(&samples) {
        let dist = (&setting.h_test - &s.input).norm();
        let meta = meta_gradient(h, &setting.w_v);
        let stab = meta.norm();
        rhs_derived += dist * (stab + setting.mu * c1);
        rhs_extended += dist * (stab + setting.mu * c1 * h_test_norm);
        let resid = (output_gradient(w_hat, &s.input, &s.target) - meta).norm();
        meta_gradient_residual = meta_gradient_residual.max(resid);
    }
    let rhs = match setting.rhs_form {
        RhsForm::Derived => rhs_derived,
        RhsForm::Extended => rhs_extended,
    };

    let n = setting.pre.n_pretrain;
    let test = setting.test_point();
    let base_loss = setting.base_loss();
    let predicted_delta = influence(&setting.pre, &test, &samples)? / n as f64;
    let (_, retrained) = retrain_oracle(&setting.task, &samples, 1.0 / n as f64, &test)?;

    Ok(ConditionReport {
        k,
        lhs,
        rhs,
        rhs_derived,
        rhs_extended,
        rhs_form: setting.rhs_form,
        holds: lhs > rhs,
        mu: setting.mu,
        c1,
        grad_norm_test,
        base_loss,
        predicted_delta,
        oracle_delta: retrained - base_loss,
        meta_gradient_residual,
    })
}

/// Absolute slack granted to every inequality in [`bound_chain`].
pub const CHAIN_SLACK: f64 = 1e-9;

/// Exact terms and successive lower bounds of
/// `L1 = ∇L(h_test)ᵀ H⁻¹ ∇L(z0) = L11 + L12`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundChain {
    pub l1: f64,
    pub l11: f64,
    pub l12: f64,
    /// Cauchy-Schwarz plus the rank-one split of the gradient difference.
    pub l11_bound_cauchy: f64,
    /// After bounding the output-gradient difference by `μ‖Ŵ(h_test − z0)‖`.
    pub l11_bound_lipschitz: f64,
    /// After substituting the initial parameters and the meta-gradient.
    pub l11_bound: f64,
    /// `λ_min(H⁻¹)·‖∇L(h_test)‖²`.
    pub l12_bound: f64,
    pub chain_ok: bool,
}

pub fn bound_chain(setting: &LabSetting, h: &DVector<f64>) -> Result<BoundChain, LabError> {
    setting.check_embedding(h)?;
    let pre = &setting.pre;
    let w_hat = &pre.w_hat;
    let spec = &pre.spectrum;
    let ht = &setting.h_test;
    let z0 = setting.sample(h);

    let g_test = vectorize(&setting.test_gradient());
    let g_z0 = vectorize(&point_gradient(w_hat, &z0.input, &z0.target));
    let hinv_g_test = pre.solve(&g_test);
    let l1 = g_z0.dot(&hinv_g_test);
    let l11 = (&g_z0 - &g_test).dot(&hinv_g_test);
    let l12 = g_test.dot(&hinv_g_test);

    let lam1 = spec.eig_max_hinv;
    let gnorm = g_test.norm();
    let dist = (ht - &z0.input).norm();
    let out_test = output_gradient(w_hat, ht, &setting.target);
    let out_z0 = output_gradient(w_hat, &z0.input, &z0.target);

    let l11_bound_cauchy = -lam1 * gnorm * ((&out_test - &out_z0).norm() * ht.norm() + out_z0.norm() * dist);
    let l11_bound_lipschitz =
        -lam1 * gnorm * (setting.mu * (w_hat * (ht - &z0.input)).norm() * ht.norm() + out_z0.norm() * dist);
    let stab = meta_gradient(h, &setting.w_v).norm();
    let l11_bound = -lam1 * gnorm * dist * (setting.mu * setting.c1() + stab);
    let l12_bound = spec.eig_min_hinv * gnorm * gnorm;

    let ge = |a: f64, b: f64| a >= b - CHAIN_SLACK;
    let chain_ok = ge(l1, l11_bound + l12_bound)
        && ge(l12, l12_bound)
        && ge(l11, l11_bound_cauchy)
        && ge(l11_bound_cauchy, l11_bound_lipschitz)
        && ge(l11_bound_lipschitz, l11_bound);

    Ok(BoundChain {
        l1,
        l11,
        l12,
        l11_bound_cauchy,
        l11_bound_lipschitz,
        l11_bound,
        l12_bound,
        chain_ok,
    })
}
