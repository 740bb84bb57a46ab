mod common;

use common::{rastrigin_with_analysis, v};
use nalgebra::DVector;
use saddle_escape::bounds::{BoundOptions, BoundSet};
use saddle_escape::diagnostics::*;
use saddle_escape::optimizer::*;
use saddle_escape::problem::make_quadratic_diag;

fn synthetic(values: Vec<f64>) -> TrajectoryRecord {
    let n = values.len();
    TrajectoryRecord {
        iterates: (0..n).map(|k| DVector::from_element(1, 1.0 + k as f64)).collect(),
        iterate_index: (0..n).collect(),
        grad_norms: vec![1.0; n],
        step_types: vec![StepType::Gd; n - 1],
        xi_flags: vec![0; n - 1],
        curvature: vec![None; n - 1],
        termination: Termination::BudgetExhausted,
        second_order_count: 0,
        values,
    }
}

#[test]
fn synthetic_phase_example() {
    let p = phases_from_radii(vec![1.0, 0.5, 0.3, 0.4, 0.8, 1.2], 0.35, 1.1).unwrap();
    assert_eq!(p.k_tau, Some(2));
    assert_eq!(p.k_c, Some(1));
    assert_eq!(p.k_e, Some(3));
    assert_eq!(p.k_exit, Some(3));
    assert_eq!(p.k_hat_exit, Some(5));
    assert!(p.entered_eps_ball);
}

#[test]
fn increasing_from_eps_sphere() {
    let eps = 0.1;
    let r: Vec<f64> = (0..8).map(|k| eps * 1.3f64.powi(k)).collect();
    let p = phases_from_radii(r, eps, 10.0).unwrap();
    assert_eq!((p.k_c, p.k_e), (Some(0), Some(0)));
    assert_eq!(p.k_hat_exit, None);
    assert_eq!(p.k_exit, Some(1));
    assert!(!p.entered_eps_ball);
}

#[test]
fn shell_sojourn_counts_both_visits() {
    let p = phases_from_radii(vec![0.5, 0.3, 0.2, 0.25, 0.6, 1.5], 0.35, 1.0).unwrap();
    assert_eq!((p.k_c, p.k_e, p.k_hat_exit), (Some(0), Some(4), Some(5)));
    assert_eq!(p.shell_sojourn(), Some(1));
}

#[test]
fn shell_sojourn_when_expansion_jumps_the_shell() {
    let p = phases_from_radii(vec![0.5, 0.3, 0.2, 0.3, 1.2], 0.35, 1.0).unwrap();
    assert_eq!((p.k_tau, p.k_c, p.k_e, p.k_hat_exit), (Some(2), Some(0), None, Some(4)));
    assert_eq!(p.shell_sojourn(), Some(0));
    let never_out = phases_from_radii(vec![0.5, 0.3, 0.2, 0.3], 0.35, 1.0).unwrap();
    assert_eq!(never_out.shell_sojourn(), None);
}

#[test]
fn phase_inputs_rejected() {
    assert!(phases_from_radii(vec![1.0], 0.5, 0.4).is_err());
    let rec = synthetic(vec![3.0, 2.0]);
    assert!(detect_phases(&rec, &v(&[0.0, 0.0]), 0.1, 1.0).is_err());
    let mut thin = synthetic(vec![3.0, 2.0, 1.0]);
    thin.iterates.remove(1);
    thin.iterate_index.remove(1);
    assert!(detect_phases(&thin, &v(&[0.0]), 0.1, 1.0).is_err());
}

#[test]
fn quadratic_saddle_all_enabled_checks_pass() {
    let p = make_quadratic_diag(&[1.0, -1.0]).unwrap();
    let eps = 0.01;
    let x0 = v(&[eps / 2f64.sqrt(), eps / 2f64.sqrt()]);
    let rec = gd_run(&p, &x0, &OptimizerConfig::new(p.constants, 2, eps, 20).unwrap()).unwrap();
    let report = verify_invariants(&rec, &p, &v(&[0.0, 0.0]), eps, 10.0 * eps, &p.constants, None).unwrap();
    assert_eq!(report.checks.len(), 9);
    assert!(report.all_pass(), "{report:#?}");
    for c in [Check::SequentialMonotonicity, Check::MonotoneValue, Check::ExitValue, Check::NoReturnEps, Check::OrthantConfinement] {
        assert_eq!(report.get(c).unwrap().status, CheckStatus::Pass, "{c}");
    }
}

#[test]
fn ccrgd_rastrigin_core_checks() {
    let (p, a) = rastrigin_with_analysis(4);
    let eps = 0.01;
    let bs = BoundSet::compute(&p.constants, 4, eps, None, &BoundOptions::default()).unwrap();
    for seed in 0..5 {
        let x0 = init_near_saddle(&a, eps, 1e-8, seed).unwrap();
        let rec = ccrgd_run(&p, &x0, &OptimizerConfig::new(p.constants, 4, eps, 5000).unwrap()).unwrap();
        let report = verify_invariants(&rec, &p, &a.x_star, eps, bs.xi, &p.constants, Some(&bs)).unwrap();
        assert_eq!(report.get(Check::MonotoneValue).unwrap().status, CheckStatus::Pass);
        assert_eq!(report.get(Check::ExitValue).unwrap().status, CheckStatus::Pass);
        for c in [Check::NoReturnEps, Check::ExitTime] {
            assert_ne!(report.get(c).unwrap().status, CheckStatus::Fail, "{c}");
        }
    }
}

#[test]
fn injected_value_increase_reported_at_seven() {
    let mut values: Vec<f64> = (0..12).map(|k| 10.0 - k as f64).collect();
    values[7] = values[6] + 0.5;
    let rec = synthetic(values);
    let p = make_quadratic_diag(&[1.0]).unwrap();
    let report = verify_selected(&rec, &p, &v(&[0.0]), 0.5, 2.0, &p.constants, None, &[Check::MonotoneValue]).unwrap();
    let c = report.get(Check::MonotoneValue).unwrap();
    assert_eq!(c.name, Check::MonotoneValue);
    assert!(!c.pass);
    assert_eq!(c.first_violation_index, Some(7));
    assert!(c.margin.unwrap() < 0.0);
    assert_eq!(report.checks.len(), 1);
}

#[test]
fn report_serializes_by_name() {
    let rec = synthetic(vec![3.0, 2.0, 1.0]);
    let p = make_quadratic_diag(&[1.0]).unwrap();
    let report = verify_invariants(&rec, &p, &v(&[0.0]), 0.5, 2.0, &p.constants, None).unwrap();
    let json = serde_json::to_value(&report).unwrap();
    let names: Vec<&str> = json["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names.len(), 9);
    assert!(names.contains(&"monotone_value"));
    assert_eq!(json["checks"][2]["pass"], true);
}

#[test]
fn reports_are_deterministic() {
    let (p, a) = rastrigin_with_analysis(4);
    let eps = 0.01;
    let bs = BoundSet::compute(&p.constants, 4, eps, None, &BoundOptions::default()).unwrap();
    let x0 = init_near_saddle(&a, eps, 0.4, 3).unwrap();
    let run = || {
        let rec = gd_run(&p, &x0, &OptimizerConfig::new(p.constants, 4, eps, 500).unwrap()).unwrap();
        serde_json::to_string(&verify_invariants(&rec, &p, &a.x_star, eps, bs.xi, &p.constants, Some(&bs)).unwrap()).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn linearization_exact_on_quadratic() {
    let p = make_quadratic_diag(&[2.0, 0.5, -1.0, -0.25]).unwrap();
    let a = common::exact_analysis(&p, &DVector::zeros(4));
    let x0 = init_near_saddle(&a, 0.05, 0.3, 4).unwrap();
    let rec = gd_run(&p, &x0, &OptimizerConfig::new(p.constants, 4, 0.05, 40).unwrap()).unwrap();
    let e = linearization_error(&p, &a, &rec, 0).unwrap();
    assert!(!e.is_empty());
    assert!(e.iter().all(|v| v.unwrap() < 1e-12), "{e:?}");
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

#[test]
fn first_order_correction_reduces_error() {
    let (p, a) = rastrigin_with_analysis(4);
    let eps = 0.1;
    let (mut e0s, mut e1s) = (Vec::new(), Vec::new());
    for seed in 0..20 {
        let x0 = init_near_saddle(&a, eps, 0.5, seed).unwrap();
        let rec = gd_run(&p, &x0, &OptimizerConfig::new(p.constants, 4, eps, 200).unwrap()).unwrap();
        let e0 = linearization_error(&p, &a, &rec, 0).unwrap();
        let e1 = linearization_error(&p, &a, &rec, 1).unwrap();
        let k = e0.len() - 1;
        e0s.push(e0[k].unwrap());
        e1s.push(e1[k].unwrap());
    }
    assert!(median(e1s.clone()) <= median(e0s.clone()), "{e1s:?} vs {e0s:?}");
}

#[test]
fn orthant_threshold_and_tolerance() {
    let c = saddle_escape::problem::SmoothnessConstants::new(2.0, 3.0, 0.5, 1.0).unwrap();
    assert!((orthant_tolerance(0.1, &c) - 0.015).abs() < 1e-16);
    assert!((orthant_projection_threshold(0.01) - 0.01 * 100f64.ln().powi(2)).abs() < 1e-15);
}
