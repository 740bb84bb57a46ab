mod common;

use common::{exact_analysis, rastrigin_with_analysis};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use saddle_escape::bounds::*;
use saddle_escape::diagnostics::{linearization_error, phases_from_radii};
use saddle_escape::optimizer::*;
use saddle_escape::problem::{make_matrix_factorization, make_quadratic_diag, SmoothnessConstants};
use saddle_escape::spectral::{empirical_expansion_factor, perturbation_projection, projection_coefficients, sorted_eigen};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

prop_compose! {
    fn valid_constants()(l in 0.5f64..5.0, m in 0.05f64..3.0, kappa in 0.05f64..1.0, dfrac in 0.1f64..1.0)
        -> SmoothnessConstants {
        let beta = kappa * l;
        SmoothnessConstants::new(l, m, beta, 2.0 * beta * dfrac).unwrap()
    }
}

fn max_error(errs: &[Option<f64>]) -> f64 {
    errs.iter().flatten().copied().fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn phases_invariant_to_scaling(radii in prop::collection::vec(0.01f64..2.0, 2..40), scale in 1e-3f64..1e3) {
        let (eps, xi) = (0.3, 1.2);
        let a = phases_from_radii(radii.clone(), eps, xi).unwrap();
        let b = phases_from_radii(radii.iter().map(|r| r * scale).collect(), eps * scale, xi * scale).unwrap();
        prop_assert_eq!((a.k_exit, a.k_hat_exit, a.k_tau, a.k_c, a.k_e), (b.k_exit, b.k_hat_exit, b.k_tau, b.k_c, b.k_e));
    }

    #[test]
    fn phase_index_ordering(r0 in 0.01f64..=0.3, rest in prop::collection::vec(0.01f64..2.0, 1..40)) {
        let radii: Vec<f64> = std::iter::once(r0).chain(rest).collect();
        let p = phases_from_radii(radii, 0.3, 1.2).unwrap();
        if let (Some(c), Some(e)) = (p.k_c, p.k_e) {
            prop_assert!(c <= e);
        }
        if let (Some(a), Some(b)) = (p.k_exit, p.k_hat_exit) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn ccrgd_trace_discipline(n in 2usize..8, p in 0.0f64..1.0, seed in 0u64..1000, frac in 0.05f64..1.0) {
        let (prob, a) = rastrigin_with_analysis(n);
        let eps = frac * epsilon_upper_bound(&prob.constants, n, None);
        let x0 = init_near_saddle(&a, eps, p, seed).unwrap();
        let cfg = OptimizerConfig::new(prob.constants, n, eps, 400).unwrap();
        let rec = ccrgd_run(&prob, &x0, &cfg).unwrap();
        prop_assert_eq!(rec.step_types.len(), rec.xi_flags.len());
        for w in rec.values.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()));
        }
        let threshold = prob.constants.l * eps;
        for k in 0..rec.step_types.len() {
            match rec.step_types[k] {
                StepType::SecondOrder => {
                    prop_assert_eq!(rec.xi_flags[k], 0);
                    prop_assert!(rec.grad_norms[k] <= threshold);
                    let len = (rec.iterate(k + 1).unwrap() - rec.iterate(k).unwrap()).norm();
                    prop_assert!((len - rec.grad_norms[k] / prob.constants.beta).abs() <= 1e-12 * len.max(1e-300));
                }
                StepType::Break => prop_assert_eq!(k + 1, rec.step_types.len()),
                StepType::Gd => {}
            }
            if k + 1 < rec.xi_flags.len() && rec.xi_flags[k] == 1 && rec.xi_flags[k + 1] == 0 {
                prop_assert!(rec.grad_norms[k] > threshold);
            }
        }
    }

    #[test]
    fn zero_eps_ccrgd_is_gd(n in 2usize..6, p in 0.0f64..1.0, seed in 0u64..1000) {
        let (prob, a) = rastrigin_with_analysis(n);
        let x0 = init_near_saddle(&a, 0.01, p, seed).unwrap();
        let cfg = OptimizerConfig::new(prob.constants, n, 0.0, 200).unwrap();
        let g = gd_run(&prob, &x0, &cfg).unwrap();
        let c = ccrgd_run(&prob, &x0, &cfg).unwrap();
        prop_assert_eq!(g.iterates, c.iterates);
        prop_assert_eq!(g.step_types, c.step_types);
    }

    #[test]
    fn quadratic_curvature_closed_form(lams in prop::collection::vec(-3.0f64..3.0, 1..6), xs in prop::collection::vec(-1.0f64..1.0, 6), alpha in 0.1f64..1.0) {
        prop_assume!(lams.iter().all(|l| l.abs() > 1e-3));
        let prob = make_quadratic_diag(&lams).unwrap();
        let x = DVector::from_iterator(lams.len(), xs.iter().copied().take(lams.len()));
        let (v1, v2) = curvature_statistics(&prob, &x, alpha);
        let want: f64 = lams.iter().zip(x.iter()).map(|(l, xi)| xi * xi * (alpha * alpha * l * l - alpha.powi(3) * l.powi(3))).sum();
        let scale: f64 = lams.iter().zip(x.iter()).map(|(l, xi)| xi * xi * (alpha * alpha * l * l + (alpha * l).powi(3).abs())).sum();
        prop_assert!(((v1 - v2) - want).abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn init_hits_target_projection(n in 2usize..10, p in 0.0f64..=1.0, seed in 0u64..10_000) {
        let (_, a) = rastrigin_with_analysis(n);
        let x0 = init_near_saddle(&a, 0.01, p, seed).unwrap();
        let pc = projection_coefficients(&(&x0 - &a.x_star), &a).unwrap();
        prop_assert!((pc.unstable_projection - p).abs() <= 1e-10);
    }

    #[test]
    fn expansion_monotonicity(seed in 0u64..1000, scale in 0.05f64..1.5) {
        let prob = make_matrix_factorization(3, 3, 2, 0.5, 0.5, 0.5, 7).unwrap();
        let x_star = prob.known_saddle.clone().unwrap();
        let x = &x_star + common_point(prob.dim(), seed) * scale;
        let ef = empirical_expansion_factor(&prob, &x_star, &x, 8).unwrap();
        if ef.d2 > 1.0 {
            prop_assert!(ef.d4 > ef.d2);
            prop_assert!(ef.rho_bar.unwrap() > 1.0);
        }
    }

    #[test]
    fn perturbation_projection_additive(seed in 0u64..1000) {
        let (_, a) = rastrigin_with_analysis(5);
        let m1 = sym(5, seed);
        let m2 = sym(5, seed + 1);
        let lhs = perturbation_projection(&(&m1 + &m2), &a).unwrap();
        let rhs = perturbation_projection(&m1, &a).unwrap() + perturbation_projection(&m2, &a).unwrap();
        prop_assert!((lhs - &rhs).amax() <= 1e-12 * rhs.amax().max(1.0));
    }

    #[test]
    fn bound_outputs_finite_positive(c in valid_constants(), n in 1usize..12, frac in 0.01f64..0.99) {
        let eps_max = epsilon_upper_bound(&c, n, None);
        prop_assert!(eps_max > 0.0);
        let eps = frac * eps_max;
        if let Ok(k) = exit_time_bound(eps, &c, n) {
            prop_assert!(k.is_finite() && k > 0.0);
            prop_assert!(exit_time_bound(eps * 0.5, &c, n).unwrap() > k);
        }
        if let Ok(p) = projection_thresholds(eps, &c, n) {
            prop_assert!(p.a > 1.0);
            prop_assert!(p.p_min.is_finite() && p.p_min > 0.0 && p.mu > 0.0 && p.delta_necessary > 0.0);
        }
        let (xi, rho) = expansion_constants(&c, DEFAULT_VARSIGMA).unwrap();
        prop_assert!(xi > 0.0 && rho > 1.0);
        let (enr, gnr) = no_return_thresholds(&c, xi);
        prop_assert!(enr > 0.0 && gnr > 0.0);
    }

    #[test]
    fn bounds_are_bit_identical(c in valid_constants(), n in 1usize..12, frac in 0.01f64..0.99) {
        let eps = frac * epsilon_upper_bound(&c, n, None);
        let a = projection_thresholds(eps, &c, n).map(|p| (p.p_min.to_bits(), p.mu.to_bits()));
        let b = projection_thresholds(eps, &c, n).map(|p| (p.p_min.to_bits(), p.mu.to_bits()));
        prop_assert_eq!(a.ok(), b.ok());
    }

    #[test]
    fn eigen_residuals(seed in 0u64..1000, n in 2usize..9) {
        let h = sym(n, seed);
        let (vals, vecs) = sorted_eigen(&h);
        let norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            let v = vecs.column(i);
            prop_assert!((&h * v - v * vals[i]).norm() <= 1e-8 * norm.max(1e-300));
        }
    }
}

fn common_point(n: usize, seed: u64) -> DVector<f64> {
    use rand::{Rng, SeedableRng};
    let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let v = DVector::from_fn(n, |_, _| g.random_range(-1.0..1.0));
    v.normalize()
}

fn sym(n: usize, seed: u64) -> DMatrix<f64> {
    use rand::{Rng, SeedableRng};
    let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, n, |_, _| g.random_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

/// Order-0 relative error shrinks with the radius for a fixed unstable
/// projection.
#[test]
fn linearization_error_vanishes_with_radius() {
    let (prob, a) = rastrigin_with_analysis(4);
    for (seed, p) in [(0u64, 0.1), (1, 0.3), (2, 0.5), (3, 0.9)] {
        let maxes: Vec<f64> = [0.2, 0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&eps| {
                let x0 = init_near_saddle(&a, eps, p, seed).unwrap();
                let rec = gd_run(&prob, &x0, &OptimizerConfig::new(prob.constants, 4, eps, 400).unwrap()).unwrap();
                max_error(&linearization_error(&prob, &a, &rec, 0).unwrap())
            })
            .collect();
        assert!(maxes.windows(2).all(|w| w[1] < w[0]), "p = {p}: {maxes:?}");
    }
}

#[test]
fn quadratic_linearization_is_exact() {
    let prob = make_quadratic_diag(&[1.5, 0.4, -0.7]).unwrap();
    let a = exact_analysis(&prob, &DVector::zeros(3));
    for seed in 0..10 {
        let x0 = init_near_saddle(&a, 0.1, 0.4, seed).unwrap();
        let rec = gd_run(&prob, &x0, &OptimizerConfig::new(prob.constants, 3, 0.1, 60).unwrap()).unwrap();
        assert!(max_error(&linearization_error(&prob, &a, &rec, 0).unwrap()) < 1e-12);
    }
}
