//! Post-hoc trajectory analysis around a known stationary point.

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bounds::{no_return_thresholds, BoundSet};
use crate::error::{input, Result};
use crate::optimizer::TrajectoryRecord;
use crate::problem::{ObjectiveProblem, SmoothnessConstants};
use crate::spectral::{analyze_saddle, exact_gap, linearized_trajectory, projection_coefficients, sorted_eigenvalues, SaddleAnalysis};

/// Relative slack used when comparing radii against `eps` (initial points
/// sit on the `eps`-sphere up to rounding).
const RADIUS_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct PhaseReport {
    pub radii: Vec<f64>,
    /// First `k >= 1` with `r_{k-1} <= eps < r_k`.
    pub k_exit: Option<usize>,
    /// First `k >= 1` with `r_{k-1} < xi <= r_k`.
    pub k_hat_exit: Option<usize>,
    /// First `k` with `r_{k+1} >= r_k`.
    pub k_tau: Option<usize>,
    pub k_c: Option<usize>,
    pub k_e: Option<usize>,
    pub entered_eps_ball: bool,
    /// Radial minimum over `[K_c, K_e]` lies strictly inside the window.
    /// Informational only.
    pub radial_min_interior: Option<bool>,
}

impl PhaseReport {
    /// Measured shell sojourn `K_c + (K_hat_exit - K_e)`. When the expansion
    /// jumps over the shell (no `K_e`) its share is zero.
    pub fn shell_sojourn(&self) -> Option<usize> {
        match (self.k_c, self.k_e, self.k_hat_exit) {
            (Some(c), Some(e), Some(h)) if h >= e => Some(c + h - e),
            (Some(c), None, Some(h)) if self.k_tau.is_some_and(|t| t < h) => Some(c),
            _ => None,
        }
    }
}

/// Phase indices of a radial sequence.
pub fn phases_from_radii(radii: Vec<f64>, eps: f64, xi: f64) -> Result<PhaseReport> {
    if !(eps > 0.0 && eps < xi) {
        return input(format!("need 0 < eps < xi, got eps = {eps}, xi = {xi}"));
    }
    let r = &radii;
    let eps_hi = eps * (1.0 + RADIUS_TOL);
    let eps_lo = eps * (1.0 - RADIUS_TOL);
    let k_exit = (1..r.len()).find(|&k| r[k - 1] <= eps_hi && r[k] > eps_hi);
    let k_hat_exit = (1..r.len()).find(|&k| r[k - 1] < xi && r[k] >= xi);
    let k_tau = (0..r.len().saturating_sub(1)).find(|&k| r[k + 1] >= r[k]);
    let in_shell = |k: usize| r[k] >= eps_lo && r[k] <= xi;
    let (k_c, k_e) = match k_tau {
        Some(t) => ((0..=t).rev().find(|&k| in_shell(k)), (t..r.len()).find(|&k| in_shell(k))),
        None => (None, None),
    };
    let entered_eps_ball = r.iter().any(|&v| v < eps_lo);
    let radial_min_interior = match (k_c, k_e) {
        (Some(c), Some(e)) if e > c + 1 => {
            let argmin = (c..=e).min_by(|&i, &j| r[i].total_cmp(&r[j])).unwrap();
            Some(argmin > c && argmin < e)
        }
        _ => None,
    };
    Ok(PhaseReport { radii, k_exit, k_hat_exit, k_tau, k_c, k_e, entered_eps_ball, radial_min_interior })
}

/// Radii `r_k = ||x_k - x*||` of a dense trace and their phase indices.
pub fn detect_phases(traj: &TrajectoryRecord, x_star: &DVector<f64>, eps: f64, xi: f64) -> Result<PhaseReport> {
    require_dense(traj)?;
    if x_star.len() != traj.iterates[0].len() {
        return input("x_star dimension mismatch");
    }
    let radii = traj.iterates.iter().map(|x| (x - x_star).norm()).collect();
    phases_from_radii(radii, eps, xi)
}

fn require_dense(traj: &TrajectoryRecord) -> Result<()> {
    if !traj.is_dense() {
        return input("diagnostics need a dense trace (thin_stride = 1)");
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    SequentialMonotonicity,
    PlContraction,
    MonotoneValue,
    ExitValue,
    NoReturnEps,
    NoReturnXi,
    OrthantConfinement,
    ShellSojourn,
    ExitTime,
}

impl Check {
    pub const ALL: [Check; 9] = [
        Check::SequentialMonotonicity,
        Check::PlContraction,
        Check::MonotoneValue,
        Check::ExitValue,
        Check::NoReturnEps,
        Check::NoReturnXi,
        Check::OrthantConfinement,
        Check::ShellSojourn,
        Check::ExitTime,
    ];

    /// Single-letter tag `a`..`i`.
    pub fn letter(&self) -> char {
        (b'a' + Check::ALL.iter().position(|c| c == self).unwrap() as u8) as char
    }

    /// Accepts the letter tag or the snake-case name.
    pub fn parse(s: &str) -> Option<Check> {
        Check::ALL.iter().copied().find(|c| s.len() == 1 && s.starts_with(c.letter()) || c.to_string() == s)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Check::SequentialMonotonicity => "sequential_monotonicity",
            Check::PlContraction => "pl_contraction",
            Check::MonotoneValue => "monotone_value",
            Check::ExitValue => "exit_value",
            Check::NoReturnEps => "no_return_eps",
            Check::NoReturnXi => "no_return_xi",
            Check::OrthantConfinement => "orthant_confinement",
            Check::ShellSojourn => "shell_sojourn",
            Check::ExitTime => "exit_time",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: Check,
    pub status: CheckStatus,
    pub pass: bool,
    pub first_violation_index: Option<usize>,
    /// Smallest slack over the checked range; negative on failure.
    pub margin: Option<f64>,
    pub note: String,
}

impl CheckRecord {
    fn skipped(name: Check, note: impl Into<String>) -> Self {
        Self { name, status: CheckStatus::Skipped, pass: false, first_violation_index: None, margin: None, note: note.into() }
    }

    fn from_slacks(name: Check, slacks: impl IntoIterator<Item = (usize, f64)>, note: impl Into<String>) -> Self {
        let mut margin = f64::INFINITY;
        let mut first = None;
        for (k, s) in slacks {
            margin = margin.min(s);
            if first.is_none() && !(s >= 0.0) {
                first = Some(k);
            }
        }
        let pass = first.is_none();
        Self {
            name,
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
            pass,
            first_violation_index: first,
            margin: margin.is_finite().then_some(margin),
            note: note.into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantReport {
    pub checks: Vec<CheckRecord>,
}

impl InvariantReport {
    pub fn get(&self, name: Check) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// No enabled check failed.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }
}

/// Unstable projection needed for the orthant check, `eps log(1/eps)^2`.
pub fn orthant_projection_threshold(eps: f64) -> f64 {
    eps * (1.0 / eps).ln().powi(2)
}

/// Tolerance of the orthant check, `10 M eps^3 / L`.
pub fn orthant_tolerance(eps: f64, c: &SmoothnessConstants) -> f64 {
    10.0 * c.m * eps.powi(3) / c.l
}

/// Smallest gradient norm after the `xi`-exit, over iterates farther than
/// `xi` from the last iterate.
pub fn gradient_floor_after_exit(traj: &TrajectoryRecord, phases: &PhaseReport, xi: f64) -> Option<f64> {
    let start = phases.k_hat_exit?;
    let last = traj.last_iterate();
    (start..traj.iterates.len())
        .take_while(|&k| (&traj.iterates[k] - last).norm() > xi)
        .map(|k| traj.grad_norms[k])
        .min_by(f64::total_cmp)
}

/// Runs every check.
pub fn verify_invariants(
    traj: &TrajectoryRecord,
    problem: &ObjectiveProblem,
    x_star: &DVector<f64>,
    eps: f64,
    xi: f64,
    consts: &SmoothnessConstants,
    bound_set: Option<&BoundSet>,
) -> Result<InvariantReport> {
    verify_selected(traj, problem, x_star, eps, xi, consts, bound_set, &Check::ALL)
}

/// Runs the listed checks, in the listed order.
#[allow(clippy::too_many_arguments)]
pub fn verify_selected(
    traj: &TrajectoryRecord,
    problem: &ObjectiveProblem,
    x_star: &DVector<f64>,
    eps: f64,
    xi: f64,
    consts: &SmoothnessConstants,
    bound_set: Option<&BoundSet>,
    selected: &[Check],
) -> Result<InvariantReport> {
    let ph = detect_phases(traj, x_star, eps, xi)?;
    let r = &ph.radii;
    let f = &traj.values;
    let f_star = problem.value(x_star);
    let projection = analyze_saddle(problem, x_star, exact_gap(&sorted_eigenvalues(&problem.hessian(x_star))))
        .ok()
        .and_then(|a| projection_coefficients(&(&traj.iterates[0] - x_star), &a).ok())
        .map(|p| p.unstable_projection);

    let mut checks = Vec::with_capacity(selected.len());
    for &name in selected {
        let rec = match name {
            Check::SequentialMonotonicity => {
                match (0..r.len().saturating_sub(1)).find(|&k| r[k + 1] >= r[k] && r[k] <= xi) {
                    None => CheckRecord::skipped(name, "radius never turns inside the xi-ball"),
                    Some(start) => {
                        let slacks = (start + 1..r.len() - 1)
                            .take_while(|&j| r[j] < xi)
                            .map(|j| (j, (r[j + 1] - r[j]) / r[j]))
                            .map(|(j, s)| (j, if s > 0.0 { s } else { s.min(-f64::MIN_POSITIVE) }));
                        CheckRecord::from_slacks(name, slacks, format!("turning index {start}"))
                    }
                }
            }
            Check::PlContraction => {
                let limit = if consts.m > 0.0 { 3.0 * consts.beta.powi(2) / (4.0 * consts.m * consts.l) } else { f64::INFINITY };
                match ph.k_c {
                    Some(kc) if r[kc] < limit => {
                        let w = consts.l / (2.0 * consts.beta.powi(2));
                        let tol = 1e-12 * (1.0 + f_star.abs());
                        let slacks = (0..=kc).map(|k| {
                            let gap = f[k] - f_star;
                            let upper = w * traj.grad_norms[k].powi(2) - gap + tol;
                            (k, (gap + tol).min(upper))
                        });
                        CheckRecord::from_slacks(name, slacks, format!("K_c = {kc}"))
                    }
                    Some(_) => CheckRecord::skipped(name, "r at K_c is not below 3 beta^2 / (4 M L)"),
                    None => CheckRecord::skipped(name, "no contraction index"),
                }
            }
            Check::MonotoneValue => {
                let slacks = (1..f.len()).map(|k| (k, f[k - 1] + 1e-12 * (1.0 + f[k - 1].abs()) - f[k]));
                CheckRecord::from_slacks(name, slacks, "")
            }
            Check::ExitValue => match ph.k_exit {
                Some(k) => {
                    let s = f_star - f[k];
                    CheckRecord::from_slacks(name, [(k, if s > 0.0 { s } else { s.min(-f64::MIN_POSITIVE) })], "")
                }
                None => CheckRecord::skipped(name, "no eps-exit"),
            },
            Check::NoReturnEps => {
                let (eps_nr, _) = no_return_thresholds(consts, xi);
                match ph.k_exit {
                    _ if eps > eps_nr => CheckRecord::skipped(name, format!("eps above no-return radius {eps_nr}")),
                    None => CheckRecord::skipped(name, "no eps-exit"),
                    Some(k) => CheckRecord::from_slacks(name, (k + 1..r.len()).map(|j| (j, strict(r[j] - eps))), ""),
                }
            }
            Check::NoReturnXi => match ph.k_hat_exit {
                None => CheckRecord::skipped(name, "no xi-exit"),
                Some(k) => {
                    let need = consts.l * xi / 2f64.sqrt();
                    match gradient_floor_after_exit(traj, &ph, xi) {
                        Some(floor) if floor > need => {
                            CheckRecord::from_slacks(name, (k + 1..r.len()).map(|j| (j, strict(r[j] - xi))), format!("gradient floor {floor}"))
                        }
                        Some(floor) => CheckRecord::skipped(name, format!("gradient floor {floor} not above L xi / sqrt 2 = {need}")),
                        None => CheckRecord::skipped(name, "no iterates between the xi-exit and the final neighbourhood"),
                    }
                }
            },
            Check::OrthantConfinement => match (ph.k_exit, projection) {
                (Some(k), Some(p)) if p >= orthant_projection_threshold(eps) => {
                    let tol = orthant_tolerance(eps, consts);
                    let u0 = &traj.iterates[0] - x_star;
                    let slacks = (0..=k).map(|j| (j, u0.dot(&(&traj.iterates[j] - x_star)) + tol));
                    CheckRecord::from_slacks(name, slacks, format!("unstable projection {p}"))
                }
                (Some(_), Some(p)) => CheckRecord::skipped(name, format!("unstable projection {p} below threshold")),
                (None, _) => CheckRecord::skipped(name, "no eps-exit"),
                (_, None) => CheckRecord::skipped(name, "projection unavailable"),
            },
            Check::ShellSojourn => match (bound_set, ph.shell_sojourn(), ph.k_hat_exit) {
                (Some(bs), Some(m), Some(h)) => {
                    let measured = m as f64;
                    CheckRecord::from_slacks(name, [(h, bs.k_shell_bound - measured)], format!("measured {measured}"))
                }
                (None, ..) => CheckRecord::skipped(name, "no bound set"),
                _ => CheckRecord::skipped(name, "shell indices undefined"),
            },
            Check::ExitTime => match (bound_set, projection) {
                (Some(bs), Some(p)) if p >= bs.p_min => {
                    let measured = ph.k_exit.unwrap_or(r.len());
                    CheckRecord::from_slacks(name, [(measured, bs.k_exit_bound - measured as f64)], format!("measured {measured}"))
                }
                (Some(bs), Some(p)) => CheckRecord::skipped(name, format!("unstable projection {p} below P_min {}", bs.p_min)),
                (None, _) => CheckRecord::skipped(name, "no bound set"),
                (_, None) => CheckRecord::skipped(name, "projection unavailable"),
            },
        };
        checks.push(rec);
    }
    Ok(InvariantReport { checks })
}

fn strict(s: f64) -> f64 {
    if s > 0.0 {
        s
    } else {
        s.min(-f64::MIN_POSITIVE)
    }
}

/// `e_K = ||u_K - u~_K|| / ||u_K||` for `K = 1..` up to the `eps`-exit (or
/// the trace end); `None` where `u_K = 0`.
pub fn linearization_error(
    problem: &ObjectiveProblem,
    analysis: &SaddleAnalysis,
    traj: &TrajectoryRecord,
    order: u8,
) -> Result<Vec<Option<f64>>> {
    require_dense(traj)?;
    let x_star = &analysis.x_star;
    let u0 = &traj.iterates[0] - x_star;
    let eps = u0.norm();
    if !(eps > 0.0) {
        return input("trace must start away from x_star");
    }
    let radii: Vec<f64> = traj.iterates.iter().map(|x| (x - x_star).norm()).collect();
    let eps_hi = eps * (1.0 + RADIUS_TOL);
    let last = (1..radii.len()).find(|&k| radii[k - 1] <= eps_hi && radii[k] > eps_hi).unwrap_or(radii.len() - 1);
    if last == 0 {
        return Ok(Vec::new());
    }
    let lin = linearized_trajectory(problem, analysis, &u0, last, order)?;
    Ok((1..=last)
        .map(|k| {
            let uk = &traj.iterates[k] - x_star;
            let nk = uk.norm();
            (nk > 0.0).then(|| (&uk - &lin.points[k - 1]).norm() / nk)
        })
        .collect())
}
