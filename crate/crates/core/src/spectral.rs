//! Eigen-structure at a reference point: stable/unstable splitting,
//! degeneracy groups, projection coefficients, the grouped Hessian
//! perturbation operator, linearized trajectories and the empirical
//! expansion factor.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::problem::ObjectiveProblem;

/// Eigendecomposition at `x_star` with index sets and groups.
#[derive(Clone, Debug)]
pub struct SaddleAnalysis {
    pub x_star: DVector<f64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: DMatrix<f64>,
    pub stable: Vec<usize>,
    pub unstable: Vec<usize>,
    pub groups: Vec<Vec<usize>>,
    pub gap_used: f64,
    /// `min(2 beta, smallest same-sign inter-group distance)`.
    pub delta: f64,
}

impl SaddleAnalysis {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }

    /// Index of the group containing eigen-index `i`.
    pub fn group_of(&self, i: usize) -> usize {
        self.groups.iter().position(|g| g.contains(&i)).expect("every index is grouped")
    }

    pub fn hessian(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        &self.eigenvectors * d * self.eigenvectors.transpose()
    }
}

/// Coefficients of a radial vector in the eigenbasis.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectionCoefficients {
    pub theta_s: Vec<f64>,
    pub theta_us: Vec<f64>,
    pub unstable_projection: f64,
    pub scale: f64,
}

/// Sorted eigenvalues of a symmetric matrix.
pub fn sorted_eigenvalues(h: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(h.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Ascending eigendecomposition with each eigenvector's largest-magnitude
/// component made positive.
pub fn sorted_eigen(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h.clone());
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vecs = DMatrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (k, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        let lead = v.iter().copied().fold(0.0_f64, |m, c| if c.abs() > m.abs() { c } else { m });
        if lead < 0.0 {
            v = -v;
        }
        vecs.set_column(k, &v);
        vals.push(eig.eigenvalues[i]);
    }
    (vals, vecs)
}

/// Tolerance treating eigenvalues as exactly degenerate.
pub fn exact_gap(eigs: &[f64]) -> f64 {
    let scale = eigs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    1e-8 * scale.max(1.0)
}

/// Partition ascending `eigs` first by sign, then wherever consecutive
/// values differ by more than `gap`.
pub fn group_indices(eigs: &[f64], gap: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in eigs.iter().enumerate() {
        let split = match groups.last().and_then(|g| g.last()) {
            None => true,
            Some(&j) => (eigs[j] < 0.0) != (v < 0.0) || v - eigs[j] > gap,
        };
        if split {
            groups.push(vec![i]);
        } else {
            groups.last_mut().unwrap().push(i);
        }
    }
    groups
}

/// `min(2 beta, smallest distance between adjacent same-sign groups)`.
pub fn delta_from_spectrum(eigs: &[f64], beta: f64, gap: f64) -> f64 {
    let groups = group_indices(eigs, gap);
    let mut delta = 2.0 * beta;
    for w in groups.windows(2) {
        let (hi, lo) = (eigs[*w[0].last().unwrap()], eigs[w[1][0]]);
        if (hi < 0.0) == (lo < 0.0) {
            delta = delta.min(lo - hi);
        }
    }
    delta
}

/// Eigendecomposition and grouping at a stationary point.
pub fn analyze_saddle(problem: &ObjectiveProblem, x_star: &DVector<f64>, gap: f64) -> Result<SaddleAnalysis> {
    if x_star.len() != problem.dim() {
        return input("x_star dimension mismatch");
    }
    if !(gap > 0.0) {
        return input("gap must be positive");
    }
    let gnorm = problem.gradient(x_star).norm();
    if gnorm >= 1e-8 * problem.constants.l {
        return input(format!("x_star is not stationary: |grad| = {gnorm:e}"));
    }
    analyze_hessian(x_star.clone(), &problem.hessian(x_star), gap)
}

/// [`analyze_saddle`] on a given Hessian.
pub fn analyze_hessian(x_star: DVector<f64>, h: &DMatrix<f64>, gap: f64) -> Result<SaddleAnalysis> {
    let (eigenvalues, eigenvectors) = sorted_eigen(h);
    let norm = eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let threshold = 1e-10 * norm;
    if let Some(v) = eigenvalues.iter().find(|v| v.abs() < threshold || **v == 0.0) {
        return Err(Error::DegenerateHessian { value: v.abs(), threshold });
    }
    let groups = group_indices(&eigenvalues, gap);
    for g in &groups {
        let diam = eigenvalues[*g.last().unwrap()] - eigenvalues[g[0]];
        if diam >= gap {
            return Err(Error::Grouping(format!("group diameter {diam} not below gap {gap}")));
        }
    }
    let stable = (0..eigenvalues.len()).filter(|&i| eigenvalues[i] > 0.0).collect();
    let unstable = (0..eigenvalues.len()).filter(|&i| eigenvalues[i] < 0.0).collect();
    let beta = eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let delta = delta_from_spectrum(&eigenvalues, beta, gap);
    Ok(SaddleAnalysis { x_star, eigenvalues, eigenvectors, stable, unstable, groups, gap_used: gap, delta })
}

/// `theta_i = <u0, v_i> / ||u0||` split into stable and unstable parts.
pub fn projection_coefficients(u0: &DVector<f64>, analysis: &SaddleAnalysis) -> Result<ProjectionCoefficients> {
    let scale = u0.norm();
    if !(scale > 0.0) {
        return input("radial vector must be nonzero");
    }
    let theta = |i: usize| analysis.eigenvectors.column(i).dot(u0) / scale;
    let theta_s: Vec<f64> = analysis.stable.iter().map(|&i| theta(i)).collect();
    let theta_us: Vec<f64> = analysis.unstable.iter().map(|&i| theta(i)).collect();
    let unstable_projection = theta_us.iter().map(|t| t * t).sum();
    Ok(ProjectionCoefficients { theta_s, theta_us, unstable_projection, scale })
}

/// Central difference of the Hessian along a unit direction.
pub fn directional_hessian_derivative(
    problem: &ObjectiveProblem,
    x_star: &DVector<f64>,
    u_hat: &DVector<f64>,
    h: f64,
) -> Result<DMatrix<f64>> {
    if (u_hat.norm() - 1.0).abs() > 1e-10 {
        return input("direction must be a unit vector");
    }
    if !(h > 0.0) {
        return input("step must be positive");
    }
    let plus = problem.hessian(&(x_star + u_hat * h));
    let minus = problem.hessian(&(x_star - u_hat * h));
    let d = (plus - minus) / (2.0 * h);
    Ok((&d + d.transpose()) * 0.5)
}

/// Default step for [`directional_hessian_derivative`].
pub fn default_hessian_step(x_star: &DVector<f64>) -> f64 {
    f64::EPSILON.cbrt() * (1.0 + x_star.amax())
}

/// Grouped eigen-expansion of a Hessian perturbation:
/// `sum_i <v_i,H v_i> v_i v_i^T + lambda_i sum_{l not in G_i}
/// <v_l,H v_i>/(lambda_i - lambda_l) (v_l v_i^T + v_i v_l^T)`.
pub fn perturbation_projection(h_u: &DMatrix<f64>, analysis: &SaddleAnalysis) -> Result<DMatrix<f64>> {
    let n = analysis.dim();
    if h_u.shape() != (n, n) {
        return input("perturbation shape mismatch");
    }
    let v = &analysis.eigenvectors;
    let hv = h_u * v;
    let coupling = v.transpose() * &hv;
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let vi = v.column(i);
        out += vi * vi.transpose() * coupling[(i, i)];
        let gi = analysis.group_of(i);
        let li = analysis.eigenvalues[i];
        for l in 0..n {
            if analysis.group_of(l) == gi {
                continue;
            }
            let ll = analysis.eigenvalues[l];
            if li == ll {
                return Err(Error::Grouping(format!("equal eigenvalues {li} in different groups")));
            }
            let vl = v.column(l);
            let w = li * coupling[(l, i)] / (li - ll);
            out += (vl * vi.transpose() + vi * vl.transpose()) * w;
        }
    }
    Ok(out)
}

/// Output of [`linearized_trajectory`].
#[derive(Clone, Debug)]
pub struct LinearizedTrajectory {
    /// `u~_1 .. u~_K`.
    pub points: Vec<DVector<f64>>,
    /// Set when `K ||u0|| > 0.5`.
    pub validity_warning: bool,
}

/// Zeroth- or first-order expansion of the GD radial recursion around
/// `analysis.x_star`, with `A = I - alpha H(x*)` and `alpha = 1/L`.
pub fn linearized_trajectory(
    problem: &ObjectiveProblem,
    analysis: &SaddleAnalysis,
    u0: &DVector<f64>,
    k: usize,
    order: u8,
) -> Result<LinearizedTrajectory> {
    if k == 0 {
        return input("K must be at least 1");
    }
    if order > 1 {
        return input("order must be 0 or 1");
    }
    let n = analysis.dim();
    let alpha = 1.0 / problem.constants.l;
    let a = DMatrix::identity(n, n) - analysis.hessian() * alpha;
    let mut zeroth = Vec::with_capacity(k + 1);
    zeroth.push(u0.clone());
    for _ in 0..k {
        let next = &a * zeroth.last().unwrap();
        zeroth.push(next);
    }
    let validity_warning = k as f64 * u0.norm() > 0.5;
    if order == 0 {
        return Ok(LinearizedTrajectory { points: zeroth[1..].to_vec(), validity_warning });
    }
    // c_K = sum_{r<K} A^{K-1-r} (eps P_r) A^r u0, with eps P_r = -(alpha |u~_r| / 2) H(u^_r).
    let step = default_hessian_step(&analysis.x_star);
    let mut correction = DVector::zeros(n);
    let mut points = Vec::with_capacity(k);
    for r in 0..k {
        let ur = &zeroth[r];
        let norm = ur.norm();
        let pu = if norm > 0.0 {
            let h = directional_hessian_derivative(problem, &analysis.x_star, &(ur / norm), step)?;
            h * ur * (-alpha * norm / 2.0)
        } else {
            DVector::zeros(n)
        };
        correction = &a * correction + pu;
        points.push(&zeroth[r + 1] + &correction);
    }
    Ok(LinearizedTrajectory { points, validity_warning })
}

/// Result of [`empirical_expansion_factor`].
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionFactor {
    /// `None` when `<u^, D^2 u^> = 0` (contraction to zero).
    pub rho_bar: Option<f64>,
    pub d2: f64,
    pub d4: f64,
    pub d_spectrum: Vec<f64>,
}

/// `D(x) = I - alpha int_0^1 H(x* + p (x - x*)) dp` by composite Simpson on
/// `panels` panels and `rho_bar = sqrt(<u^,D^4 u^>) / sqrt(<u^,D^2 u^>)`.
pub fn empirical_expansion_factor(
    problem: &ObjectiveProblem,
    x_star: &DVector<f64>,
    x: &DVector<f64>,
    panels: usize,
) -> Result<ExpansionFactor> {
    if panels < 2 {
        return input("quadrature needs at least 2 panels");
    }
    let u = x - x_star;
    let r = u.norm();
    if !(r > 0.0) {
        return input("x must differ from x_star");
    }
    let n = u.len();
    let intervals = 2 * panels;
    let dp = 1.0 / intervals as f64;
    let mut integral = DMatrix::zeros(n, n);
    for j in 0..=intervals {
        let w = if j == 0 || j == intervals {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        integral += problem.hessian(&(x_star + &u * (j as f64 * dp))) * w;
    }
    integral *= dp / 3.0;
    let d = DMatrix::identity(n, n) - integral / problem.constants.l;
    let d = (&d + d.transpose()) * 0.5;
    let u_hat = u / r;
    let du = &d * &u_hat;
    let d2 = du.norm_squared();
    let d4 = (&d * &du).norm_squared();
    let rho_bar = (d2 > 0.0).then(|| d4.sqrt() / d2.sqrt());
    Ok(ExpansionFactor { rho_bar, d2, d4, d_spectrum: sorted_eigenvalues(&d) })
}
