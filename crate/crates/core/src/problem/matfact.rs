//! Regularized low-rank matrix factorization
//! `f(X1, X2) = 1/4 ||M - X1 X2^T||_F^2 + w1 ||X1||_F^2 + w2 ||X2||_F^2`.
//!
//! The variable is `X = [X1; X2]` of shape `(n1 + n2) x r`, flattened column
//! major: entry `(i, c)` sits at `c * (n1 + n2) + i`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::{constants_from_spectrum, Objective, ObjectiveProblem};
use crate::error::{input, Result};
use crate::rng;
use crate::spectral::sorted_eigenvalues;

/// Hessian-Lipschitz constant of the objective on the unit ball about the
/// origin: only the quartic term has a nonzero third derivative and its
/// fourth derivative has norm `6 * max ||H1||^2 ||H2||^2 = 1.5`.
pub const MF_HESSIAN_LIPSCHITZ_UNIT_BALL: f64 = 1.5;

#[derive(Clone, Debug)]
pub struct MatrixFactorization {
    pub n1: usize,
    pub n2: usize,
    pub r: usize,
    pub w1: f64,
    pub w2: f64,
    pub data: DMatrix<f64>,
}

impl MatrixFactorization {
    fn rows(&self) -> usize {
        self.n1 + self.n2
    }

    /// Split the flat vector into `(X1, X2)`.
    pub fn unpack(&self, x: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let big = DMatrix::from_column_slice(self.rows(), self.r, x.as_slice());
        (big.rows(0, self.n1).into_owned(), big.rows(self.n1, self.n2).into_owned())
    }

    fn pack(&self, x1: &DMatrix<f64>, x2: &DMatrix<f64>) -> DVector<f64> {
        let mut big = DMatrix::zeros(self.rows(), self.r);
        big.rows_mut(0, self.n1).copy_from(x1);
        big.rows_mut(self.n1, self.n2).copy_from(x2);
        DVector::from_column_slice(big.as_slice())
    }

    fn residual(&self, x1: &DMatrix<f64>, x2: &DMatrix<f64>) -> DMatrix<f64> {
        x1 * x2.transpose() - &self.data
    }

    /// Position in the flat vector of `vec(X1)[p]` (`block = 0`) or
    /// `vec(X2)[p]` (`block = 1`).
    fn flat_index(&self, block: usize, p: usize) -> usize {
        let (rows, offset) = if block == 0 { (self.n1, 0) } else { (self.n2, self.n1) };
        let (i, c) = (p % rows, p / rows);
        c * self.rows() + offset + i
    }
}

/// Commutation matrix `K` with `K vec(A) = vec(A^T)` for `A` of shape `m x n`.
fn commutation(m: usize, n: usize) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(m * n, m * n);
    for i in 0..m {
        for j in 0..n {
            k[(i * n + j, j * m + i)] = 1.0;
        }
    }
    k
}

impl Objective for MatrixFactorization {
    fn dim(&self) -> usize {
        self.rows() * self.r
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let (x1, x2) = self.unpack(x);
        let res = self.residual(&x1, &x2);
        0.25 * res.norm_squared() + self.w1 * x1.norm_squared() + self.w2 * x2.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let (x1, x2) = self.unpack(x);
        let res = self.residual(&x1, &x2);
        let g1 = &res * &x2 * 0.5 + &x1 * (2.0 * self.w1);
        let g2 = res.transpose() * &x1 * 0.5 + &x2 * (2.0 * self.w2);
        self.pack(&g1, &g2)
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (x1, x2) = self.unpack(x);
        let res = self.residual(&x1, &x2);
        let (n1, n2, r) = (self.n1, self.n2, self.r);
        let eye_r = DMatrix::<f64>::identity(r, r);
        let h11 = (x2.transpose() * &x2).kronecker(&DMatrix::identity(n1, n1)) * 0.5
            + DMatrix::identity(n1 * r, n1 * r) * (2.0 * self.w1);
        let h22 = (x1.transpose() * &x1).kronecker(&DMatrix::identity(n2, n2)) * 0.5
            + DMatrix::identity(n2 * r, n2 * r) * (2.0 * self.w2);
        // d vec(G1) / d vec(X2): 1/2 (X2^T (x) X1) K_{n2,r} + 1/2 (I_r (x) R)
        let h12 = x2.transpose().kronecker(&x1) * commutation(n2, r) * 0.5 + eye_r.kronecker(&res) * 0.5;

        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        let blocks = [(0usize, n1 * r), (1usize, n2 * r)];
        for &(bi, ni) in &blocks {
            for &(bj, nj) in &blocks {
                for p in 0..ni {
                    for q in 0..nj {
                        let v = match (bi, bj) {
                            (0, 0) => h11[(p, q)],
                            (1, 1) => h22[(p, q)],
                            (0, 1) => h12[(p, q)],
                            _ => h12[(q, p)],
                        };
                        h[(self.flat_index(bi, p), self.flat_index(bj, q))] = v;
                    }
                }
            }
        }
        h
    }
}

/// Draws `M = U1 U2^T + rho^2 N` (standard-normal entries, seeded) and builds
/// the problem.
pub fn make_matrix_factorization(
    n1: usize,
    n2: usize,
    r: usize,
    w1: f64,
    w2: f64,
    rho: f64,
    seed: u64,
) -> Result<ObjectiveProblem> {
    check_shape(n1, n2, r, w1, w2)?;
    let mut g = rng::stream(seed, "data");
    let mut normal = |rows: usize, cols: usize| {
        DMatrix::from_fn(rows, cols, |_, _| -> f64 { StandardNormal.sample(&mut g) })
    };
    let u1 = normal(n1, r);
    let u2 = normal(n2, r);
    let noise = normal(n1, n2);
    let data = &u1 * u2.transpose() + noise * (rho * rho);
    let mut p = make_matrix_factorization_with_data(r, w1, w2, data)?;
    p.label = format!("{}:seed={seed}", p.label);
    Ok(p)
}

/// Problem over a caller-supplied data matrix.
///
/// Constants: `L = ||H(0)||_2`, `beta`, `delta` from the origin spectrum and
/// `M` = [`MF_HESSIAN_LIPSCHITZ_UNIT_BALL`]. When the origin Hessian is not
/// indefinite the label carries `origin-not-saddle` and `known_saddle` is unset.
pub fn make_matrix_factorization_with_data(r: usize, w1: f64, w2: f64, data: DMatrix<f64>) -> Result<ObjectiveProblem> {
    let (n1, n2) = data.shape();
    check_shape(n1, n2, r, w1, w2)?;
    let f = MatrixFactorization { n1, n2, r, w1, w2, data };
    let origin = DVector::zeros(f.dim());
    let eigs = sorted_eigenvalues(&f.hessian(&origin));
    let l = eigs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let constants = constants_from_spectrum(&eigs, l, MF_HESSIAN_LIPSCHITZ_UNIT_BALL)?;
    let indefinite = eigs[0] < 0.0 && eigs[eigs.len() - 1] > 0.0;
    let mut label = format!("matrix_factorization(n1={n1},n2={n2},r={r},w1={w1},w2={w2})");
    if !indefinite {
        label.push_str("[origin-not-saddle]");
    }
    Ok(ObjectiveProblem {
        label,
        objective: Arc::new(f),
        constants,
        known_saddle: indefinite.then_some(origin),
    })
}

fn check_shape(n1: usize, n2: usize, r: usize, w1: f64, w2: f64) -> Result<()> {
    if n1 == 0 || n2 == 0 || r == 0 {
        return input("n1, n2, r must be positive");
    }
    if r > n1.min(n2) {
        return input(format!("rank r={r} exceeds min(n1, n2)={}", n1.min(n2)));
    }
    if !(w1 >= 0.0 && w2 >= 0.0) {
        return input("regularization weights must be non-negative");
    }
    Ok(())
}
