//! Synthetic linear pretraining task under squared loss.
//!
//! `F(z) = W z` with `W ∈ R^{d'×d}` and per-point loss
//! `L(z, W) = ½‖W z − t‖²`. The pretraining objective is the mean loss plus
//! `(ρ/2)‖W‖²_F`, so with second moment `S = ZᵀZ/n + ρI` and cross moment
//! `C = TᵀZ/n` the minimizer solves `Ŵ S = C`, and the Hessian of the
//! vectorized problem is `I_{d'} ⊗ S` (row-major `vec(W)`).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::Serialize;

use super::LabError;

/// A point with its own regression target.
#[derive(Debug, Clone, PartialEq)]
pub struct LabPoint {
    pub input: DVector<f64>,
    pub target: DVector<f64>,
}

impl LabPoint {
    pub fn new(input: DVector<f64>, target: DVector<f64>) -> Self {
        Self { input, target }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub d: usize,
    pub d_prime: usize,
    /// `n × d`, one pretraining input per row.
    pub inputs: DMatrix<f64>,
    /// `n × d'`, one target per row.
    pub targets: DMatrix<f64>,
    pub ridge: f64,
}

impl SyntheticTask {
    pub fn new(inputs: DMatrix<f64>, targets: DMatrix<f64>, ridge: f64) -> Result<Self, LabError> {
        let (n, d) = inputs.shape();
        let d_prime = targets.ncols();
        if d == 0 || d_prime == 0 {
            return Err(LabError::InvalidTask("dimensions must be positive".into()));
        }
        if targets.nrows() != n {
            return Err(LabError::DimensionMismatch(format!(
                "{n} inputs but {} targets",
                targets.nrows()
            )));
        }
        if n < d {
            return Err(LabError::InvalidTask(format!(
                "need at least d = {d} pretraining points, got {n}"
            )));
        }
        if !(ridge.is_finite() && ridge >= 0.0) {
            return Err(LabError::InvalidTask(format!("ridge must be finite and >= 0, got {ridge}")));
        }
        if inputs.iter().chain(targets.iter()).any(|x| !x.is_finite()) {
            return Err(LabError::InvalidTask("non-finite pretraining data".into()));
        }
        Ok(Self {
            d,
            d_prime,
            inputs,
            targets,
            ridge,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }

    /// `S = ZᵀZ/n + ρI`.
    pub fn second_moment(&self) -> DMatrix<f64> {
        let n = self.len() as f64;
        self.inputs.transpose() * &self.inputs / n + DMatrix::identity(self.d, self.d) * self.ridge
    }

    /// `C = TᵀZ/n`.
    pub fn cross_moment(&self) -> DMatrix<f64> {
        self.targets.transpose() * &self.inputs / self.len() as f64
    }

    /// Gradient of the regularized mean pretraining loss at `w`, summed point
    /// by point.
    pub fn objective_gradient(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.d_prime, self.d);
        for i in 0..self.len() {
            let z = self.inputs.row(i).transpose();
            let t = self.targets.row(i).transpose();
            g += point_gradient(w, &z, &t);
        }
        g / self.len() as f64 + w * self.ridge
    }
}

/// `½‖W z − t‖²`.
pub fn point_loss(w: &DMatrix<f64>, z: &DVector<f64>, t: &DVector<f64>) -> f64 {
    0.5 * (w * z - t).norm_squared()
}

/// Output-side gradient `∇_F L = W z − t`.
pub fn output_gradient(w: &DMatrix<f64>, z: &DVector<f64>, t: &DVector<f64>) -> DVector<f64> {
    w * z - t
}

/// `∇_W L = (W z − t) zᵀ`.
pub fn point_gradient(w: &DMatrix<f64>, z: &DVector<f64>, t: &DVector<f64>) -> DMatrix<f64> {
    output_gradient(w, z, t) * z.transpose()
}

/// Row-major flattening, matching the Hessian's index order.
pub fn vectorize(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| m[(r, c)])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HessianSpectrum {
    pub eig_min_h: f64,
    pub eig_max_h: f64,
    /// Largest eigenvalue of the inverse Hessian.
    pub eig_max_hinv: f64,
    /// Smallest eigenvalue of the inverse Hessian.
    pub eig_min_hinv: f64,
}

impl HessianSpectrum {
    pub fn condition_number(&self) -> f64 {
        self.eig_max_h / self.eig_min_h
    }
}

/// Result of pretraining: minimizer, explicit Hessian and its factorization.
#[derive(Debug, Clone)]
pub struct Pretrained {
    pub w_hat: DMatrix<f64>,
    pub hessian: DMatrix<f64>,
    pub spectrum: HessianSpectrum,
    pub n_pretrain: usize,
    chol: Cholesky<f64, Dyn>,
}

impl Pretrained {
    /// Solve `H x = b` without forming `H⁻¹`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }
}

/// Explicit `(d·d') × (d·d')` Hessian `I_{d'} ⊗ S`.
pub fn explicit_hessian(task: &SyntheticTask) -> DMatrix<f64> {
    let s = task.second_moment();
    let (d, dp) = (task.d, task.d_prime);
    let mut h = DMatrix::zeros(d * dp, d * dp);
    for block in 0..dp {
        h.view_mut((block * d, block * d), (d, d)).copy_from(&s);
    }
    h
}

/// Minimizer of the regularized objective with extra weight `eps` on each
/// point in `upweighted`: `W (S + ε Σ z zᵀ) = C + ε Σ t zᵀ`.
pub(crate) fn solve_normal_equations(
    task: &SyntheticTask,
    upweighted: &[LabPoint],
    eps: f64,
) -> Result<DMatrix<f64>, LabError> {
    let mut lhs = task.second_moment();
    let mut rhs = task.cross_moment();
    for p in upweighted {
        if p.input.len() != task.d || p.target.len() != task.d_prime {
            return Err(LabError::DimensionMismatch(format!(
                "upweighted point has input {} / target {}, task is d={} d'={}",
                p.input.len(),
                p.target.len(),
                task.d,
                task.d_prime
            )));
        }
        lhs += &p.input * p.input.transpose() * eps;
        rhs += &p.target * p.input.transpose() * eps;
    }
    let chol = Cholesky::new(lhs).ok_or(LabError::Singular)?;
    // W·A = B  ⇔  A·Wᵀ = Bᵀ for symmetric A
    Ok(chol.solve(&rhs.transpose()).transpose())
}

pub fn pretrain(task: &SyntheticTask) -> Result<Pretrained, LabError> {
    let hessian = explicit_hessian(task);
    let eig = SymmetricEigen::new(hessian.clone()).eigenvalues;
    let eig_min_h = eig.min();
    let eig_max_h = eig.max();
    if eig_min_h.is_nan() || eig_min_h <= eig_max_h * 1e-14 {
        return Err(LabError::Singular);
    }
    let chol = Cholesky::new(hessian.clone()).ok_or(LabError::Singular)?;
    let inv_eig = SymmetricEigen::new(chol.inverse()).eigenvalues;
    let spectrum = HessianSpectrum {
        eig_min_h,
        eig_max_h,
        eig_max_hinv: inv_eig.max(),
        eig_min_hinv: inv_eig.min(),
    };
    let w_hat = solve_normal_equations(task, &[], 0.0)?;
    Ok(Pretrained {
        w_hat,
        hessian,
        spectrum,
        n_pretrain: task.len(),
        chol,
    })
}

/// Exact minimizer of the objective with `eps` extra weight on each
/// upweighted point, and the test loss it attains.
pub fn retrain_oracle(
    task: &SyntheticTask,
    upweighted: &[LabPoint],
    eps: f64,
    test: &LabPoint,
) -> Result<(DMatrix<f64>, f64), LabError> {
    let w = solve_normal_equations(task, upweighted, eps)?;
    let loss = point_loss(&w, &test.input, &test.target);
    Ok((w, loss))
}
