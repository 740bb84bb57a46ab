//! Quadratic test problem `f(x) = 1/2 x^T A x`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{constants_from_spectrum, Objective, ObjectiveProblem};
use crate::error::{input, Result};
use crate::spectral::sorted_eigenvalues;

#[derive(Clone, Debug)]
pub struct Quadratic {
    pub a: DMatrix<f64>,
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.a * x))
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x
    }

    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.a.clone()
    }
}

/// Quadratic with symmetric `a`; `M = 0`, `L = ||a||_2`.
pub fn make_quadratic(a: DMatrix<f64>) -> Result<ObjectiveProblem> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return input("quadratic needs a non-empty square matrix");
    }
    if (&a - a.transpose()).amax() > 1e-12 * a.amax().max(1.0) {
        return input("quadratic matrix must be symmetric");
    }
    let eigs = sorted_eigenvalues(&a);
    let l = eigs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let constants = constants_from_spectrum(&eigs, l, 0.0)?;
    let indefinite = eigs[0] < 0.0 && eigs[eigs.len() - 1] > 0.0;
    let n = a.nrows();
    Ok(ObjectiveProblem {
        label: format!("quadratic(n={n})"),
        objective: Arc::new(Quadratic { a }),
        constants,
        known_saddle: indefinite.then(|| DVector::zeros(n)),
    })
}

/// Quadratic `1/2 sum_i lambda_i x_i^2`.
pub fn make_quadratic_diag(lambdas: &[f64]) -> Result<ObjectiveProblem> {
    make_quadratic(DMatrix::from_diagonal(&DVector::from_column_slice(lambdas)))
}
