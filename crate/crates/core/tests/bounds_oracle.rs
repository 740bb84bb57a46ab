//! Bound calculators against frozen values from an independent 50-digit
//! evaluator (`tests/oracle/bounds_oracle.py`).

use saddle_escape::bounds::*;
use saddle_escape::problem::SmoothnessConstants;
use serde::Deserialize;

#[derive(Deserialize)]
#[allow(non_snake_case)]
struct Input {
    L: f64,
    M: f64,
    beta: f64,
    delta: f64,
    n: usize,
    analytic_radius: Option<f64>,
    varsigma: f64,
    eps: f64,
    xi: f64,
    rho_inf: f64,
    K: f64,
    unstable_projection: f64,
    diam: f64,
    zeta: f64,
    R: f64,
    gamma: f64,
    R0: f64,
    k_exit: f64,
    k_shell: f64,
}

#[derive(Deserialize)]
struct Expected {
    eps_max: f64,
    k_exit_bound: f64,
    delta_necessary: f64,
    a: f64,
    mu: f64,
    p_min: f64,
    xi_max: f64,
    rho_min: f64,
    k_shell: f64,
    k_c: f64,
    k_expand: f64,
    eps_no_return: f64,
    gamma_no_return: f64,
    psi_lb: f64,
    n0: f64,
    r_omega: f64,
    t: f64,
    k_convex: f64,
    k_max: f64,
}

#[derive(Deserialize)]
struct Case {
    input: Input,
    expected: Expected,
}

#[derive(Deserialize)]
struct Oracle {
    cases: Vec<Case>,
}

fn load() -> Oracle {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/bounds_oracle.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub const REL_TOL: f64 = 1e-12;

fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        return 0.0;
    }
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

/// Every bound operation on every case; returns `(case, name, rel_err)` for
/// each mismatch above `REL_TOL`.
pub fn mismatches() -> Vec<(usize, &'static str, f64)> {
    let oracle = load();
    assert_eq!(oracle.cases.len(), 50);
    let mut bad = Vec::new();
    for (i, case) in oracle.cases.iter().enumerate() {
        let x = &case.input;
        let e = &case.expected;
        let c = SmoothnessConstants::new(x.L, x.M, x.beta, x.delta).unwrap();
        let pt = projection_thresholds(x.eps, &c, x.n).unwrap();
        let (xi_max, rho_min) = expansion_constants(&c, x.varsigma).unwrap();
        let shell = shell_time_bound(x.eps, x.xi, &c, x.rho_inf).unwrap();
        let (eps_nr, gamma_nr) = no_return_thresholds(&c, x.xi);
        let g = GlobalRateInputs { diam_u: x.diam, zeta: x.zeta, r: x.R, gamma: x.gamma, upsilon: 0.0, r0: x.R0 };
        let gl = global_rate_bounds(&g, x.eps, x.xi, &c, x.k_exit, x.k_shell).unwrap();
        let pairs: [(&'static str, f64, f64); 19] = [
            ("eps_max", epsilon_upper_bound(&c, x.n, x.analytic_radius), e.eps_max),
            ("k_exit_bound", exit_time_bound(x.eps, &c, x.n).unwrap(), e.k_exit_bound),
            ("delta_necessary", pt.delta_necessary, e.delta_necessary),
            ("a", pt.a, e.a),
            ("mu", pt.mu, e.mu),
            ("p_min", pt.p_min, e.p_min),
            ("xi_max", xi_max, e.xi_max),
            ("rho_min", rho_min, e.rho_min),
            ("k_shell", shell.k_shell, e.k_shell),
            ("k_c", shell.k_c, e.k_c),
            ("k_expand", shell.k_expand, e.k_expand),
            ("eps_no_return", eps_nr, e.eps_no_return),
            ("gamma_no_return", gamma_nr, e.gamma_no_return),
            (
                "psi_lb",
                trajectory_function_lower_bound(x.K, x.eps, &c, x.n, x.unstable_projection).unwrap(),
                e.psi_lb,
            ),
            ("n0", gl.n0, e.n0),
            ("r_omega", gl.r_omega, e.r_omega),
            ("t", gl.t, e.t),
            ("k_convex", gl.k_convex, e.k_convex),
            ("k_max", gl.k_max, e.k_max),
        ];
        for (name, got, want) in pairs {
            let r = rel_err(got, want);
            if !(r <= REL_TOL) {
                bad.push((i, name, r));
            }
        }
    }
    bad
}

#[test]
fn all_operations_match_independent_evaluator() {
    let bad = mismatches();
    assert!(bad.is_empty(), "mismatches: {bad:?}");
}

#[test]
fn oracle_inputs_are_the_documented_draw() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/bounds_oracle.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["seed"], 20240611);
}
