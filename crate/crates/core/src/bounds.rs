//! Closed-form theoretical quantities: admissible radii, exit and sojourn
//! time bounds, projection thresholds, the trajectory-function lower bound,
//! no-return thresholds and global rate bounds.
//!
//! Shorthand used throughout, with `s = eps M / (2L)`:
//! `c_top = 2 + s`, `c_us = 1 + beta/L - s`, `c_s = 1 - beta/L + s`.

use serde::{Deserialize, Serialize};

use crate::error::{input, regime, Result};
use crate::problem::SmoothnessConstants;

/// Value returned by [`epsilon_upper_bound`] when every term is unbounded.
pub const EPS_MAX_CAP: f64 = 1.0;

/// Default `varsigma`.
pub const DEFAULT_VARSIGMA: f64 = 3.0;

/// Default relative slack for approximate inequalities.
pub const DEFAULT_SLACK: f64 = 0.05;

struct Rates {
    top: f64,
    us: f64,
    st: f64,
}

fn rates(eps: f64, c: &SmoothnessConstants) -> Rates {
    let s = eps * c.m / (2.0 * c.l);
    Rates { top: 2.0 + s, us: 1.0 + c.beta / c.l - s, st: 1.0 - c.beta / c.l + s }
}

fn check_eps(eps: f64, c: &SmoothnessConstants) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return input(format!("eps must be positive and finite (got {eps})"));
    }
    if !(c.m > 0.0) {
        return regime("M = 0: the bound has no curvature-variation term");
    }
    if !(eps < 2.0 * c.beta / c.m) {
        return regime(format!("eps < 2 beta / M violated ({eps} >= {})", 2.0 * c.beta / c.m));
    }
    Ok(())
}

/// Largest admissible `eps`: minimum of the analytic radius (if given),
/// `2 L delta / (M (2 L n^2 - delta))` (omitted when its denominator is not
/// positive) and `2 beta / M`.
pub fn epsilon_upper_bound(c: &SmoothnessConstants, n: usize, analytic_radius: Option<f64>) -> f64 {
    let mut best = f64::INFINITY;
    if let Some(r) = analytic_radius {
        best = best.min(r);
    }
    let den = c.m * (2.0 * c.l * (n * n) as f64 - c.delta);
    if den > 0.0 {
        best = best.min(2.0 * c.l * c.delta / den);
    }
    if c.m > 0.0 {
        best = best.min(2.0 * c.beta / c.m);
    }
    if best.is_finite() {
        best
    } else {
        EPS_MAX_CAP
    }
}

/// Upper bound on the exit time from the `eps`-ball.
pub fn exit_time_bound(eps: f64, c: &SmoothnessConstants, n: usize) -> Result<f64> {
    check_eps(eps, c)?;
    let r = rates(eps, c);
    let log_ratio = (r.top / r.us).ln();
    let arg = r.top * log_ratio * 2.0 * c.delta / (eps * c.m * n as f64);
    if !(arg > 1.0) {
        return regime(format!("exit-time log argument {arg} <= 1: eps too large for the regime"));
    }
    Ok(arg.ln() / (2.0 * log_ratio))
}

/// Necessary and sufficient unstable-projection thresholds.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ProjectionThresholds {
    pub delta_necessary: f64,
    pub p_min: f64,
    pub a: f64,
    pub mu: f64,
}

/// `Delta`, `P_min`, `a` and `mu` at radius `eps`.
pub fn projection_thresholds(eps: f64, c: &SmoothnessConstants, n: usize) -> Result<ProjectionThresholds> {
    check_eps(eps, c)?;
    let r = rates(eps, c);
    let nf = n as f64;
    let delta_necessary = eps * c.m * c.l * nf / (c.delta * (c.l + c.beta));
    let (lt, lu) = (r.top.ln(), r.us.ln());
    let lr = (r.top / r.us).ln();
    if !(lu > 0.0) || !(lt - lu > 0.0) {
        return regime("log(c_us) must lie in (0, log(c_top))");
    }
    let a = lt / (lt - lu);
    let mu_root = c.m * nf * lt / (2.0 * c.delta * r.top * lu * lr);
    let mu = mu_root.powf(a);
    let den = (1.0 / (mu_root * eps)).ln() / a + 1.0;
    if !(den > 0.0) {
        return regime(format!("P_min denominator {den} not positive"));
    }
    let p_min = r.top * (2.0 * c.delta * mu * lu / (c.m * nf)) / den;
    if !p_min.is_finite() {
        return regime("P_min not finite");
    }
    Ok(ProjectionThresholds { delta_necessary, p_min, a, mu })
}

/// `C(kappa) = (1+kappa)^2 + 1/(4 (1+kappa)^2) - 5/4`.
pub fn expansion_coefficient(kappa: f64) -> f64 {
    let q = (1.0 + kappa) * (1.0 + kappa);
    q + 1.0 / (4.0 * q) - 1.25
}

/// `(xi_max, rho_min) = (C / (6 varsigma M), 1 + C / 12)`.
pub fn expansion_constants(c: &SmoothnessConstants, varsigma: f64) -> Result<(f64, f64)> {
    if !(varsigma > 2.0) {
        return input(format!("varsigma must exceed 2 (got {varsigma})"));
    }
    let kappa = c.kappa();
    if !(kappa > 0.0) {
        return input("kappa must be positive");
    }
    if !(c.m > 0.0) {
        return regime("M = 0: xi_max is unbounded");
    }
    let cc = expansion_coefficient(kappa);
    Ok((cc / (6.0 * varsigma * c.m), 1.0 + cc / 12.0))
}

/// Shell sojourn bound and its contraction / expansion parts.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ShellBound {
    pub k_shell: f64,
    pub k_c: f64,
    pub k_expand: f64,
}

/// Sojourn-time bound for the shell between radii `eps` and `xi`.
///
/// `xi` is checked against `xi_max` at the limit `varsigma -> 2`.
pub fn shell_time_bound(eps: f64, xi: f64, c: &SmoothnessConstants, rho_inf: f64) -> Result<ShellBound> {
    if !(eps > 0.0 && eps < xi) {
        return input(format!("need 0 < eps < xi (eps={eps}, xi={xi})"));
    }
    if !(c.m > 0.0) {
        return regime("M = 0");
    }
    let pl_cap = 3.0 * c.beta * c.beta / (4.0 * c.m * c.l);
    if !(eps < pl_cap) {
        return regime(format!("eps < 3 beta^2/(4 M L) violated ({eps} >= {pl_cap})"));
    }
    let xi_sup = expansion_coefficient(c.kappa()) / (12.0 * c.m);
    if !(xi <= xi_sup) {
        return regime(format!("xi <= xi_max violated ({xi} > {xi_sup})"));
    }
    let growth = rho_inf / (1.0 + c.m * xi);
    if !(growth > 1.0) {
        return regime(format!("rho_inf / (1 + M xi) = {growth} not above 1"));
    }
    let floor = c.beta * c.beta * eps * eps / (2.0 * c.l) - 2.0 * c.m * eps.powi(3) / 3.0;
    if !(floor > 0.0) {
        return regime("beta^2 eps^2 / 2L <= 2 M eps^3 / 3: eps too large for the PL phase");
    }
    let contraction = (1.0 / (1.0 - (c.beta / c.l).powi(2))).ln();
    let k_c = ((c.l * xi * xi / 2.0).ln() - floor.ln()) / contraction + 1.0;
    let k_expand = (xi.ln() - eps.ln()) / growth.ln() + 2.0;
    Ok(ShellBound { k_shell: k_c + k_expand, k_c, k_expand })
}

/// `(2^(-2/kappa^2), L xi / sqrt 2)`.
pub fn no_return_thresholds(c: &SmoothnessConstants, xi: f64) -> (f64, f64) {
    let kappa = c.kappa();
    ((-2.0 / (kappa * kappa)).exp2(), c.l * xi / std::f64::consts::SQRT_2)
}

/// Lower bound on the trajectory function at (real) iteration `k` for a
/// given unstable projection.
pub fn trajectory_function_lower_bound(
    k: f64,
    eps: f64,
    c: &SmoothnessConstants,
    n: usize,
    unstable_projection: f64,
) -> Result<f64> {
    if !(k >= 0.0) {
        return input("K must be non-negative");
    }
    if !(0.0..=1.0).contains(&unstable_projection) {
        return input("unstable projection must lie in [0, 1]");
    }
    check_eps(eps, c)?;
    let gap = 2.0 * c.beta - eps * c.m;
    if !(gap > 0.0) {
        return regime("2 beta - eps M must be positive");
    }
    let r = rates(eps, c);
    let q = eps * c.m * n as f64 / (2.0 * c.delta);
    let p = unstable_projection;
    let stable_term = -2.0 * k * r.st.powf(2.0 * k - 1.0) * q;
    let unstable_term = r.us.powf(2.0 * k) - 2.0 * k * r.top.powf(2.0 * k - 1.0) * q;
    let tail = eps * c.m * c.l * n as f64 * r.top.powf(2.0 * k) / (c.delta * gap);
    Ok(stable_term * (1.0 - p) + unstable_term * p - tail)
}

/// Maximum of the trajectory-function lower bound over integers `0..=k_max`.
pub fn max_trajectory_function(k_max: f64, eps: f64, c: &SmoothnessConstants, n: usize, p: f64) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    let top = k_max.max(0.0).floor() as usize;
    for k in 0..=top {
        best = best.max(trajectory_function_lower_bound(k as f64, eps, c, n, p)?);
    }
    Ok(best)
}

/// Inputs for [`global_rate_bounds`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GlobalRateInputs {
    pub diam_u: f64,
    pub zeta: f64,
    /// Critical-point separation.
    pub r: f64,
    pub gamma: f64,
    pub upsilon: f64,
    pub r0: f64,
}

/// Outputs of [`global_rate_bounds`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GlobalRates {
    pub n0: f64,
    pub r_omega: f64,
    pub t: f64,
    pub k_convex: f64,
    pub k_max: f64,
}

/// Saddle-count, excursion-radius and total-time bounds.
pub fn global_rate_bounds(
    g: &GlobalRateInputs,
    eps: f64,
    xi: f64,
    c: &SmoothnessConstants,
    k_exit: f64,
    k_shell: f64,
) -> Result<GlobalRates> {
    if !(g.gamma > 0.0) {
        return input("gamma must be positive");
    }
    if !(g.r >= 10.0 * xi) {
        return regime(format!("xi << R violated: R = {} < 10 xi = {}", g.r, 10.0 * xi));
    }
    if !(0.0..1.0).contains(&g.upsilon) {
        return input("upsilon must lie in [0, 1)");
    }
    if !(eps > 0.0 && xi >= eps) {
        return input("need 0 < eps <= xi");
    }
    let (l, beta) = (c.l, c.beta);
    let w = 1.0 / beta + l / (2.0 * beta * beta);
    let sojourn = k_exit + k_shell;
    let den = g.gamma / 2.0 - w * l * l * eps * eps / g.r - g.gamma * sojourn * xi / g.r;
    if !(den > 0.0) {
        return regime(format!("xi << R violated: rate denominator {den} not positive"));
    }
    let n0 = 2.0 * l * g.diam_u * (g.r0 / g.r) / den;
    let r_omega = g.r0
        + 2.0 * l * g.diam_u * g.r0 / g.gamma
        + n0 * w * l * l * eps * eps / g.gamma
        + n0 * sojourn * xi;
    let t = 2.0 * l * g.diam_u * (g.zeta / g.r) / den;
    let k_convex = convex_phase_time(eps, xi, c);
    let k_max = t * sojourn
        + 4.0 * l * g.diam_u * g.zeta * l / (g.gamma * g.gamma)
        + 2.0 * t * w * eps * eps / (g.gamma * g.gamma)
        + k_convex;
    Ok(GlobalRates { n0, r_omega, t, k_convex, k_max })
}

/// `log(xi/eps) / log(1/(1 - beta/L))`; zero when `beta = L`.
pub fn convex_phase_time(eps: f64, xi: f64, c: &SmoothnessConstants) -> f64 {
    let rate = (1.0 / (1.0 - c.kappa())).ln();
    if rate.is_finite() {
        (xi / eps).ln() / rate
    } else {
        0.0
    }
}

/// Every bound evaluated for one `(eps, xi)` pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundSet {
    pub eps: f64,
    pub xi: f64,
    pub varsigma: f64,
    pub eps_max: f64,
    pub k_exit_bound: f64,
    pub delta_necessary: f64,
    pub p_min: f64,
    pub a: f64,
    pub mu: f64,
    pub xi_max: f64,
    pub rho_min: f64,
    pub k_shell_bound: f64,
    pub k_c_bound: f64,
    pub k_expand_bound: f64,
    pub eps_no_return: f64,
    pub gamma_no_return: f64,
    pub global: Option<GlobalRates>,
}

/// Options for [`BoundSet::compute`].
#[derive(Clone, Copy, Debug)]
pub struct BoundOptions {
    pub varsigma: f64,
    pub analytic_radius: Option<f64>,
    /// Defaults to `rho_min`.
    pub rho_inf: Option<f64>,
    pub global: Option<GlobalRateInputs>,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self { varsigma: DEFAULT_VARSIGMA, analytic_radius: None, rho_inf: None, global: None }
    }
}

impl BoundSet {
    /// Evaluate everything; `xi = None` uses `xi_max`.
    pub fn compute(c: &SmoothnessConstants, n: usize, eps: f64, xi: Option<f64>, opts: &BoundOptions) -> Result<Self> {
        let eps_max = epsilon_upper_bound(c, n, opts.analytic_radius);
        if !(eps <= eps_max) {
            return regime(format!("eps = {eps} exceeds the admissible radius eps_max = {eps_max}"));
        }
        let k_exit_bound = exit_time_bound(eps, c, n)?;
        let pt = projection_thresholds(eps, c, n)?;
        let (xi_max, rho_min) = expansion_constants(c, opts.varsigma)?;
        let xi = xi.unwrap_or(xi_max);
        if xi > xi_max {
            return regime(format!("xi = {xi} exceeds xi_max = {xi_max}"));
        }
        let shell = shell_time_bound(eps, xi, c, opts.rho_inf.unwrap_or(rho_min))?;
        let (eps_no_return, gamma_no_return) = no_return_thresholds(c, xi);
        let global = match &opts.global {
            Some(g) => Some(global_rate_bounds(g, eps, xi, c, k_exit_bound, shell.k_shell)?),
            None => None,
        };
        Ok(Self {
            eps,
            xi,
            varsigma: opts.varsigma,
            eps_max,
            k_exit_bound,
            delta_necessary: pt.delta_necessary,
            p_min: pt.p_min,
            a: pt.a,
            mu: pt.mu,
            xi_max,
            rho_min,
            k_shell_bound: shell.k_shell,
            k_c_bound: shell.k_c,
            k_expand_bound: shell.k_expand,
            eps_no_return,
            gamma_no_return,
            global,
        })
    }
}
