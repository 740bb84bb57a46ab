//! Modified Rastrigin benchmark `f(x) = sum_i a_i cos(b_i x_i)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{constants_from_spectrum, Objective, ObjectiveProblem};
use crate::error::{input, Result};

/// Separable cosine objective with coefficient vectors `a`, `b`.
#[derive(Clone, Debug)]
pub struct Rastrigin {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Rastrigin {
    /// `a_1 = 1`, `a_i = -1` otherwise; `b_i = 1` for the first `floor(n/2)`
    /// coordinates and `0.4` for the rest.
    pub fn standard(n: usize) -> Self {
        let a = (0..n).map(|i| if i == 0 { 1.0 } else { -1.0 }).collect();
        let b = (0..n).map(|i| if i < n / 2 { 1.0 } else { 0.4 }).collect();
        Self { a, b }
    }
}

impl Objective for Rastrigin {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (0..self.dim()).map(|i| self.a[i] * (self.b[i] * x[i]).cos()).sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| -self.a[i] * self.b[i] * (self.b[i] * x[i]).sin())
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = DVector::from_fn(self.dim(), |i, _| {
            -self.a[i] * self.b[i] * self.b[i] * (self.b[i] * x[i]).cos()
        });
        DMatrix::from_diagonal(&d)
    }
}

/// Modified Rastrigin in dimension `n >= 2` with its saddle at the origin.
///
/// `L = max b_i^2` and `M = max |b_i|^3` are the exact global gradient and
/// Hessian Lipschitz constants of the separable form; both sit below the
/// coarser sums returned by [`rastrigin_constant_bounds`].
pub fn make_rastrigin(n: usize) -> Result<ObjectiveProblem> {
    if n < 2 {
        return input(format!("rastrigin needs n >= 2 (got {n}); no stable direction otherwise"));
    }
    let f = Rastrigin::standard(n);
    let l = f.b.iter().fold(0.0_f64, |m, b| m.max(b * b));
    let m = f.b.iter().fold(0.0_f64, |m, b| m.max(b.abs().powi(3)));
    let mut eigs: Vec<f64> = (0..n).map(|i| -f.a[i] * f.b[i] * f.b[i]).collect();
    eigs.sort_by(f64::total_cmp);
    let constants = constants_from_spectrum(&eigs, l, m)?;
    Ok(ObjectiveProblem {
        label: format!("rastrigin(n={n})"),
        objective: Arc::new(f),
        constants,
        known_saddle: Some(DVector::zeros(n)),
    })
}

/// The sums `(sum |a_i b_i|, sum |a_i b_i^2|)` that bound `L` and `M`.
pub fn rastrigin_constant_bounds(n: usize) -> (f64, f64) {
    let f = Rastrigin::standard(n);
    let l = (0..n).map(|i| (f.a[i] * f.b[i]).abs()).sum();
    let m = (0..n).map(|i| (f.a[i] * f.b[i] * f.b[i]).abs()).sum();
    (l, m)
}
