//! Smooth objectives, benchmark problems, derivative checks and
//! smoothness-constant estimators.

mod matfact;
mod quadratic;
mod rastrigin;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::rng;
use crate::spectral;

pub use matfact::{make_matrix_factorization, make_matrix_factorization_with_data, MatrixFactorization};
pub use quadratic::{make_quadratic, make_quadratic_diag, Quadratic};
pub use rastrigin::{make_rastrigin, rastrigin_constant_bounds, Rastrigin};

/// Value, gradient and Hessian of a twice differentiable map.
pub trait Objective: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

/// Smoothness constants `L`, `M`, `beta`, `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessConstants {
    /// Gradient Lipschitz constant.
    pub l: f64,
    /// Hessian Lipschitz constant (zero for quadratics).
    pub m: f64,
    /// Smallest absolute Hessian eigenvalue at stationary points.
    pub beta: f64,
    /// Spectral gap between degeneracy groups.
    pub delta: f64,
}

impl SmoothnessConstants {
    /// Validated constructor.
    pub fn new(l: f64, m: f64, beta: f64, delta: f64) -> Result<Self> {
        let c = Self { l, m, beta, delta };
        c.validate()?;
        Ok(c)
    }

    pub fn kappa(&self) -> f64 {
        self.beta / self.l
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.l, self.m, self.beta, self.delta].iter().all(|v| v.is_finite());
        if !all_finite {
            return input("smoothness constants must be finite");
        }
        if !(self.l > 0.0) || self.m < 0.0 || !(self.beta > 0.0) || !(self.delta > 0.0) {
            return input(format!("need L>0, M>=0, beta>0, delta>0; got {self:?}"));
        }
        if self.beta > self.l * (1.0 + 1e-12) {
            return input(format!("beta={} exceeds L={}", self.beta, self.l));
        }
        if self.beta < self.delta / 2.0 * (1.0 - 1e-12) {
            return input(format!("beta={} below delta/2={}", self.beta, self.delta / 2.0));
        }
        Ok(())
    }
}

/// A problem instance: objective plus metadata.
#[derive(Clone, Debug)]
pub struct ObjectiveProblem {
    pub label: String,
    pub objective: Arc<dyn Objective>,
    pub constants: SmoothnessConstants,
    pub known_saddle: Option<DVector<f64>>,
}

impl ObjectiveProblem {
    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.objective.value(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.objective.gradient(x)
    }

    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.objective.hessian(x)
    }

    /// Copy with replaced constants.
    pub fn with_constants(&self, constants: SmoothnessConstants) -> Result<Self> {
        constants.validate()?;
        Ok(Self { constants, ..self.clone() })
    }
}

/// Output of [`evaluate`].
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Option<DVector<f64>>,
    pub hessian: Option<DMatrix<f64>>,
}

/// Checked evaluation up to derivative order 0, 1 or 2.
pub fn evaluate(problem: &ObjectiveProblem, x: &DVector<f64>, order: u8) -> Result<Evaluation> {
    if x.len() != problem.dim() {
        return input(format!("point has length {}, problem dimension is {}", x.len(), problem.dim()));
    }
    if order > 2 {
        return input(format!("derivative order {order} not in 0..=2"));
    }
    let value = problem.value(x);
    if !value.is_finite() {
        return Err(Error::NonFinite { what: "value", index: 0 });
    }
    let gradient = if order >= 1 {
        let g = problem.gradient(x);
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "gradient", index: i });
        }
        Some(g)
    } else {
        None
    };
    let hessian = if order == 2 {
        let h = problem.hessian(x);
        if let Some(i) = h.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "hessian", index: i });
        }
        Some(h)
    } else {
        None
    };
    Ok(Evaluation { value, gradient, hessian })
}

/// Default central-difference step `eps^(1/3) * (1 + |x|_inf)`.
pub fn default_fd_step(x: &DVector<f64>) -> f64 {
    f64::EPSILON.cbrt() * (1.0 + x.amax())
}

/// Finite-difference comparison report.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FdReport {
    pub max_grad_rel_err: f64,
    pub max_hess_rel_err: f64,
}

/// Compare analytic derivatives against central differences.
///
/// Errors are entrywise absolute differences scaled by `max(1, max |analytic|)`.
pub fn finite_difference_check(problem: &ObjectiveProblem, x: &DVector<f64>, h: f64) -> Result<FdReport> {
    if !(h > 0.0) {
        return input("finite-difference step must be positive");
    }
    let n = problem.dim();
    let g = problem.gradient(x);
    let hess = problem.hessian(x);
    let mut fd_g = DVector::zeros(n);
    let mut fd_h = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        fd_g[i] = (problem.value(&xp) - problem.value(&xm)) / (2.0 * h);
        let col = (problem.gradient(&xp) - problem.gradient(&xm)) / (2.0 * h);
        fd_h.set_column(i, &col);
    }
    let scaled = |a: f64, diff: f64| diff / a.max(1.0);
    Ok(FdReport {
        max_grad_rel_err: scaled(g.amax(), (&g - &fd_g).amax()),
        max_hess_rel_err: scaled(hess.amax(), (&hess - &fd_h).amax()),
    })
}

/// Largest absolute symmetry defect relative to the largest entry.
pub fn symmetry_defect(h: &DMatrix<f64>) -> f64 {
    let scale = h.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (h - h.transpose()).amax() / scale
}

/// Sampled estimate of `L`, `M`, `beta`, `delta` in a ball.
///
/// Heuristic: `L` and `M` are lower bounds of the true constants over the
/// ball and `beta` is an upper bound of the true minimum.
pub fn estimate_constants(
    problem: &ObjectiveProblem,
    center: &DVector<f64>,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<SmoothnessConstants> {
    if samples == 0 {
        return input("samples must be at least 1");
    }
    if !(radius > 0.0) {
        return input("radius must be positive");
    }
    let mut rng = rng::stream(seed, "estimate_constants");
    let mut points = vec![center.clone()];
    for _ in 0..samples {
        points.push(center + sample_ball(&mut rng, center.len(), radius));
    }
    let hessians: Vec<DMatrix<f64>> = points.iter().map(|p| problem.hessian(p)).collect();
    let mut l = 0.0_f64;
    let mut beta = f64::INFINITY;
    for h in &hessians {
        let eig = SymmetricEigen::new(h.clone()).eigenvalues;
        l = l.max(eig.amax());
        beta = beta.min(eig.iter().fold(f64::INFINITY, |a, v| a.min(v.abs())));
    }
    let mut m = 0.0_f64;
    for i in 1..points.len() {
        for j in [0, i - 1] {
            if j == i {
                continue;
            }
            let dist = (&points[i] - &points[j]).norm();
            if dist > 0.0 {
                m = m.max(spectral_norm(&(&hessians[i] - &hessians[j])) / dist);
            }
        }
    }
    let center_eigs = spectral::sorted_eigenvalues(&hessians[0]);
    let delta = spectral::delta_from_spectrum(&center_eigs, beta, spectral::exact_gap(&center_eigs));
    SmoothnessConstants::new(l, m, beta, delta)
}

/// Monte Carlo estimate of the gradient floor away from excluded centers.
pub fn estimate_gamma(
    problem: &ObjectiveProblem,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    excluded_centers: &[DVector<f64>],
    xi: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(xi > 0.0) {
        return input("xi must be positive");
    }
    if lower.len() != problem.dim() || upper.len() != problem.dim() {
        return input("box dimension mismatch");
    }
    let mut rng = rng::stream(seed, "estimate_gamma");
    let mut best = f64::INFINITY;
    let mut kept = 0usize;
    for _ in 0..samples {
        let x = DVector::from_fn(problem.dim(), |i, _| rng.random_range(lower[i]..=upper[i]));
        if excluded_centers.iter().any(|c| (&x - c).norm() < xi) {
            continue;
        }
        kept += 1;
        best = best.min(problem.gradient(&x).norm());
    }
    if kept == 0 {
        return Err(Error::Estimation("all samples rejected".into()));
    }
    Ok(best)
}

/// Operator 2-norm of a symmetric matrix.
pub fn spectral_norm(h: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(h.clone()).eigenvalues.amax()
}

pub(crate) fn sample_ball<R: Rng>(rng: &mut R, n: usize, radius: f64) -> DVector<f64> {
    let dir = sample_sphere(rng, n);
    let r: f64 = rng.random::<f64>().powf(1.0 / n as f64) * radius;
    dir * r
}

pub(crate) fn sample_sphere<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let norm: f64 = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Constants from an exact Hessian spectrum: `beta = min |lambda|`,
/// `delta` by gap scan.
pub(crate) fn constants_from_spectrum(eigs: &[f64], l: f64, m: f64) -> Result<SmoothnessConstants> {
    let beta = eigs.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if !(beta > 0.0) {
        return Err(Error::DegenerateHessian { value: beta, threshold: 0.0 });
    }
    let delta = spectral::delta_from_spectrum(eigs, beta, spectral::exact_gap(eigs));
    SmoothnessConstants::new(l, m, beta, delta)
}
