#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use saddle_escape::problem::{make_rastrigin, Objective, ObjectiveProblem, SmoothnessConstants};
use saddle_escape::spectral::{analyze_saddle, exact_gap, sorted_eigenvalues, SaddleAnalysis};

/// `f(x) = x^3` in one dimension.
#[derive(Debug)]
pub struct Cubic;

impl Objective for Cubic {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        x[0].powi(3)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, 3.0 * x[0] * x[0])
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, 6.0 * x[0])
    }
}

pub fn cubic() -> ObjectiveProblem {
    ObjectiveProblem {
        label: "cubic".into(),
        objective: Arc::new(Cubic),
        constants: SmoothnessConstants::new(1.0, 6.0, 1.0, 1.0).unwrap(),
        known_saddle: None,
    }
}

pub fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

pub fn exact_analysis(p: &ObjectiveProblem, x_star: &DVector<f64>) -> SaddleAnalysis {
    analyze_saddle(p, x_star, exact_gap(&sorted_eigenvalues(&p.hessian(x_star)))).unwrap()
}

pub fn rastrigin_with_analysis(n: usize) -> (ObjectiveProblem, SaddleAnalysis) {
    let p = make_rastrigin(n).unwrap();
    let a = exact_analysis(&p, &DVector::zeros(n));
    (p, a)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Monotonicity properties of the bound calculators on 20-point grids.
/// Returns a description of each violated step.
pub fn bound_monotonicity_violations() -> Vec<String> {
    use saddle_escape::bounds::*;
    let mut bad = Vec::new();
    let sets = [
        (SmoothnessConstants::new(1.0, 1.0, 0.5, 1.0).unwrap(), 4usize),
        (make_rastrigin(4).unwrap().constants, 4),
        (make_rastrigin(10).unwrap().constants, 10),
    ];
    let grid = |lo: f64, hi: f64| -> Vec<f64> { (0..20).map(|i| lo * (hi / lo).powf(i as f64 / 19.0)).collect() };
    for (c, n) in sets {
        let eps_max = epsilon_upper_bound(&c, n, None);
        let eps_grid = grid(eps_max * 1e-6, eps_max * 0.95);
        let mut prev: Option<(f64, f64, f64)> = None;
        for &e in &eps_grid {
            let k = exit_time_bound(e, &c, n).unwrap();
            let p = projection_thresholds(e, &c, n).unwrap().p_min;
            if let Some((pe, pk, pp)) = prev {
                if !(k < pk) {
                    bad.push(format!("k_exit_bound not decreasing: eps {pe} -> {e}: {pk} -> {k}"));
                }
                if !(p > pp) {
                    bad.push(format!("p_min not increasing: eps {pe} -> {e}: {pp} -> {p}"));
                }
            }
            prev = Some((e, k, p));
        }
        let m_grid = grid(0.05, 20.0);
        let xs: Vec<f64> = m_grid
            .iter()
            .map(|&m| expansion_constants(&SmoothnessConstants { m, ..c }, DEFAULT_VARSIGMA).unwrap().0)
            .collect();
        for w in xs.windows(2) {
            if !(w[1] < w[0]) {
                bad.push(format!("xi_max not decreasing in M: {w:?}"));
            }
        }
        let vs_grid = grid(2.05, 50.0);
        let xs: Vec<f64> = vs_grid.iter().map(|&s| expansion_constants(&c, s).unwrap().0).collect();
        for w in xs.windows(2) {
            if !(w[1] < w[0]) {
                bad.push(format!("xi_max not decreasing in varsigma: {w:?}"));
            }
        }
        let (xi, rho) = expansion_constants(&c, DEFAULT_VARSIGMA).unwrap();
        let pl_cap = 3.0 * c.beta * c.beta / (4.0 * c.m * c.l);
        let top = (xi * 0.9).min(pl_cap * 0.9);
        // decreasing eps raises log(xi/eps)
        let shells: Vec<f64> = grid(top, top * 1e-6).iter().map(|&e| shell_time_bound(e, xi, &c, rho).unwrap().k_shell).collect();
        for w in shells.windows(2) {
            if !(w[1] > w[0]) {
                bad.push(format!("k_shell not increasing in log(xi/eps): {w:?}"));
            }
        }
    }
    let kappas = grid(0.05, 1.0);
    let nr: Vec<f64> = kappas
        .iter()
        .map(|&k| no_return_thresholds(&SmoothnessConstants::new(1.0, 1.0, k, k).unwrap(), 0.1).0)
        .collect();
    for w in nr.windows(2) {
        if !(w[1] > w[0]) {
            bad.push(format!("eps_no_return not increasing in kappa: {w:?}"));
        }
    }
    bad
}
