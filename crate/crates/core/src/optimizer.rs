//! Gradient descent, curvature-conditioned regularized gradient descent
//! (CCRGD), the sphere-constrained eigen step and the near-saddle
//! initializer.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{input, Error, Result};
use crate::problem::{sample_sphere, ObjectiveProblem, SmoothnessConstants};
use crate::rng;
use crate::spectral::{sorted_eigen, SaddleAnalysis};

/// Radius of the second-order step, as a function of `||grad||`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRadius {
    /// `||grad|| / beta`.
    #[default]
    Upper,
    /// `||grad|| / L`.
    Lower,
    /// `c * ||grad|| / beta`.
    Scaled(f64),
}

/// Optimizer settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub alpha: f64,
    pub eps: f64,
    pub kappa: f64,
    /// Value used in the curvature check (clamped into `[0, 1]`).
    pub p_min: f64,
    /// Unclamped bound value, `None` when outside its regime.
    pub p_min_raw: Option<f64>,
    pub max_iters: usize,
    pub constants: SmoothnessConstants,
    pub step_radius: StepRadius,
    /// Keep every `thin_stride`-th iterate (the last one always).
    pub thin_stride: usize,
}

impl OptimizerConfig {
    /// `alpha = 1/L`, `P_min` from the bounds module, listing step radius.
    pub fn new(constants: SmoothnessConstants, n: usize, eps: f64, max_iters: usize) -> Result<Self> {
        constants.validate()?;
        if !(eps >= 0.0) || !eps.is_finite() {
            return input("eps must be finite and non-negative");
        }
        let p_min_raw = if eps > 0.0 {
            bounds::projection_thresholds(eps, &constants, n).ok().map(|t| t.p_min)
        } else {
            None
        };
        let p_min = p_min_raw.map_or(1.0, |p| p.clamp(0.0, 1.0));
        Ok(Self {
            alpha: 1.0 / constants.l,
            eps,
            kappa: constants.kappa(),
            p_min,
            p_min_raw,
            max_iters,
            constants,
            step_radius: StepRadius::Upper,
            thin_stride: 1,
        })
    }

    /// Checks `alpha L = 1` and, when given, `eps <= eps_max`.
    pub fn validate(&self, eps_max: Option<f64>) -> Result<()> {
        if (self.alpha * self.constants.l - 1.0).abs() > 1e-12 {
            return input("alpha must equal 1/L");
        }
        if let Some(m) = eps_max {
            if !(self.eps > 0.0 && self.eps <= m) {
                return input(format!("eps = {} outside (0, eps_max = {m}]", self.eps));
            }
        }
        if self.thin_stride == 0 {
            return input("thin_stride must be positive");
        }
        Ok(())
    }

    fn curvature_window(&self) -> (f64, f64) {
        let scale = self.eps * self.eps / (self.kappa * self.kappa);
        (4.0 / 27.0 * scale, (50.0 * self.p_min + 4.0) / 27.0 * scale)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepType {
    Gd,
    SecondOrder,
    Break,
}

impl StepType {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepType::Gd => "gd",
            StepType::SecondOrder => "second_order",
            StepType::Break => "break",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    BudgetExhausted,
    SecondOrderStationary,
    /// Gradient below the stop tolerance at a point with no negative
    /// Hessian eigenvalue.
    Converged,
    Diverged,
}

/// Per-iteration trace.
///
/// `values`, `grad_norms` are dense over iterates `x_0..x_T`; `step_types`,
/// `xi_flags` and `curvature` are indexed by the iteration `k` that produced
/// `x_{k+1}` (a trailing `Break` has no successor).
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub iterates: Vec<DVector<f64>>,
    pub iterate_index: Vec<usize>,
    pub values: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub step_types: Vec<StepType>,
    /// Flag value when iteration `k` was entered.
    pub xi_flags: Vec<u8>,
    pub curvature: Vec<Option<(f64, f64)>>,
    pub termination: Termination,
    pub second_order_count: usize,
}

impl TrajectoryRecord {
    fn start(x0: &DVector<f64>, value: f64, gnorm: f64) -> Self {
        Self {
            iterates: vec![x0.clone()],
            iterate_index: vec![0],
            values: vec![value],
            grad_norms: vec![gnorm],
            step_types: Vec::new(),
            xi_flags: Vec::new(),
            curvature: Vec::new(),
            termination: Termination::BudgetExhausted,
            second_order_count: 0,
        }
    }

    fn push(&mut self, x: &DVector<f64>, value: f64, gnorm: f64, stride: usize, last: bool) {
        let k = self.values.len();
        self.values.push(value);
        self.grad_norms.push(gnorm);
        if k % stride == 0 || last {
            self.iterates.push(x.clone());
            self.iterate_index.push(k);
        }
    }

    fn ensure_last(&mut self, x: &DVector<f64>) {
        let k = self.values.len() - 1;
        if self.iterate_index.last() != Some(&k) {
            self.iterates.push(x.clone());
            self.iterate_index.push(k);
        }
    }

    /// Whether every iterate is stored.
    pub fn is_dense(&self) -> bool {
        self.iterates.len() == self.values.len()
    }

    pub fn last_iterate(&self) -> &DVector<f64> {
        self.iterates.last().expect("record holds x0")
    }

    /// Stored iterate `x_k`, if present.
    pub fn iterate(&self, k: usize) -> Option<&DVector<f64>> {
        self.iterate_index.binary_search(&k).ok().map(|i| &self.iterates[i])
    }
}

/// Gradient below `1e-10 L (1 + ||x||)` at a point with no negative Hessian
/// eigenvalue.
fn converged(problem: &ObjectiveProblem, x: &DVector<f64>, gnorm: f64, l: f64) -> bool {
    gnorm < 1e-10 * l * (1.0 + x.norm()) && sorted_eigen(&problem.hessian(x)).0[0] >= 0.0
}

fn finite(x: &DVector<f64>) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Plain gradient descent with `alpha = 1/L`.
pub fn gd_run(problem: &ObjectiveProblem, x0: &DVector<f64>, cfg: &OptimizerConfig) -> Result<TrajectoryRecord> {
    check_start(problem, x0, cfg)?;
    let mut x = x0.clone();
    let mut g = problem.gradient(&x);
    let mut rec = TrajectoryRecord::start(&x, problem.value(&x), g.norm());
    for k in 0..cfg.max_iters {
        if converged(problem, &x, g.norm(), cfg.constants.l) {
            rec.termination = Termination::Converged;
            break;
        }
        x -= &g * cfg.alpha;
        rec.step_types.push(StepType::Gd);
        rec.xi_flags.push(0);
        rec.curvature.push(None);
        if !finish_step(problem, &mut rec, &x, &mut g, cfg, k) {
            return Ok(rec);
        }
    }
    rec.ensure_last(&x);
    Ok(rec)
}

/// Records `x`, refreshes `g`; returns false (and marks divergence) on a
/// non-finite iterate.
fn finish_step(
    problem: &ObjectiveProblem,
    rec: &mut TrajectoryRecord,
    x: &DVector<f64>,
    g: &mut DVector<f64>,
    cfg: &OptimizerConfig,
    k: usize,
) -> bool {
    let value = if finite(x) { problem.value(x) } else { f64::NAN };
    *g = if value.is_finite() { problem.gradient(x) } else { DVector::from_element(x.len(), f64::NAN) };
    let gnorm = g.norm();
    if !value.is_finite() || !gnorm.is_finite() {
        rec.push(x, value, gnorm, cfg.thin_stride, true);
        rec.termination = Termination::Diverged;
        return false;
    }
    rec.push(x, value, gnorm, cfg.thin_stride, k + 1 == cfg.max_iters);
    true
}

fn check_start(problem: &ObjectiveProblem, x0: &DVector<f64>, cfg: &OptimizerConfig) -> Result<()> {
    if x0.len() != problem.dim() {
        return input("x0 dimension mismatch");
    }
    if !finite(x0) {
        return input("x0 must be finite");
    }
    cfg.validate(None)
}

/// `y1 = x - alpha grad f(x)`, `V1 = |y1 - x|^2`,
/// `V2 = alpha <y1 - x, grad f(y1) - grad f(x)>`.
pub fn curvature_statistics(problem: &ObjectiveProblem, x: &DVector<f64>, alpha: f64) -> (f64, f64) {
    let g0 = problem.gradient(x);
    curvature_from_gradient(problem, x, &g0, alpha)
}

fn curvature_from_gradient(problem: &ObjectiveProblem, x: &DVector<f64>, g0: &DVector<f64>, alpha: f64) -> (f64, f64) {
    let y1 = x - g0 * alpha;
    let g1 = problem.gradient(&y1);
    let dy = &y1 - x;
    (dy.norm_squared(), alpha * dy.dot(&(g1 - g0)))
}

/// Minimizer of the Hessian quadratic form on the sphere of radius
/// `||grad f(x)|| / beta` about `x`, signed so `<grad f, step> <= 0`.
pub fn second_order_step(problem: &ObjectiveProblem, x: &DVector<f64>, beta: f64) -> Result<DVector<f64>> {
    if !(beta > 0.0) {
        return input("beta must be positive");
    }
    let g = problem.gradient(x);
    second_order_step_with_radius(problem, x, &g, g.norm() / beta)
}

/// [`second_order_step`] on a sphere of the given radius.
pub fn second_order_step_with_radius(
    problem: &ObjectiveProblem,
    x: &DVector<f64>,
    g: &DVector<f64>,
    radius: f64,
) -> Result<DVector<f64>> {
    let (vals, vecs) = sorted_eigen(&problem.hessian(x));
    if vals[0] >= 0.0 {
        return Err(Error::NotDescent(vals[0]));
    }
    let mut e = vecs.column(0).into_owned();
    if g.dot(&e) > 0.0 {
        e = -e;
    }
    Ok(x + e * radius)
}

fn step_radius(rule: StepRadius, gnorm: f64, c: &SmoothnessConstants) -> f64 {
    match rule {
        StepRadius::Upper => gnorm / c.beta,
        StepRadius::Lower => gnorm / c.l,
        StepRadius::Scaled(s) => s * gnorm / c.beta,
    }
}

/// CCRGD.
///
/// Within the small-gradient region with the flag clear: a curvature value
/// `d = V1 - V2` strictly inside the window `(4 eps^2/27 kappa^2,
/// (50 P_min + 4) eps^2 / 27 kappa^2)` triggers the eigen step; `d` at or
/// below the lower edge (non-positive included) goes to the `lambda_min`
/// test, which either takes the eigen step or stops; `d` at or above the upper
/// edge takes a gradient step. Each of these sets the flag.
pub fn ccrgd_run(problem: &ObjectiveProblem, x0: &DVector<f64>, cfg: &OptimizerConfig) -> Result<TrajectoryRecord> {
    check_start(problem, x0, cfg)?;
    let c = cfg.constants;
    let threshold = c.l * cfg.eps;
    let (lo, hi) = cfg.curvature_window();
    let mut x = x0.clone();
    let mut g = problem.gradient(&x);
    let mut rec = TrajectoryRecord::start(&x, problem.value(&x), g.norm());
    let mut flag: u8 = 0;
    for k in 0..cfg.max_iters {
        let gnorm = g.norm();
        rec.xi_flags.push(flag);
        let mut stats = None;
        let step = if gnorm > threshold || flag == 1 {
            if converged(problem, &x, gnorm, c.l) {
                rec.xi_flags.pop();
                rec.termination = Termination::Converged;
                break;
            }
            if gnorm > threshold {
                flag = 0;
            }
            x -= &g * cfg.alpha;
            StepType::Gd
        } else {
            let (v1, v2) = curvature_from_gradient(problem, &x, &g, cfg.alpha);
            stats = Some((v1, v2));
            let d = v1 - v2;
            flag = 1;
            if lo < d && d < hi {
                x = second_order_step_with_radius(problem, &x, &g, step_radius(cfg.step_radius, gnorm, &c))?;
                StepType::SecondOrder
            } else if d <= lo {
                let lambda_min = sorted_eigen(&problem.hessian(&x)).0[0] * cfg.alpha;
                if lambda_min < 0.0 {
                    x = second_order_step_with_radius(problem, &x, &g, step_radius(cfg.step_radius, gnorm, &c))?;
                    StepType::SecondOrder
                } else {
                    StepType::Break
                }
            } else {
                x -= &g * cfg.alpha;
                StepType::Gd
            }
        };
        rec.step_types.push(step);
        rec.curvature.push(stats);
        if step == StepType::Break {
            rec.termination = Termination::SecondOrderStationary;
            break;
        }
        if step == StepType::SecondOrder {
            rec.second_order_count += 1;
        }
        if !finish_step(problem, &mut rec, &x, &mut g, cfg, k) {
            return Ok(rec);
        }
    }
    rec.ensure_last(&x);
    Ok(rec)
}

/// `x* + eps (sqrt(1-p) w_s + sqrt(p) w_us)` with random unit `w_s`, `w_us`
/// in the stable and unstable eigenspaces.
pub fn init_near_saddle(analysis: &SaddleAnalysis, eps: f64, p: f64, seed: u64) -> Result<DVector<f64>> {
    if !(0.0..=1.0).contains(&p) {
        return input(format!("target projection {p} outside [0, 1]"));
    }
    if !(eps > 0.0) {
        return input("eps must be positive");
    }
    if p > 0.0 && analysis.unstable.is_empty() {
        return input("positive projection requested but the unstable set is empty");
    }
    if p < 1.0 && analysis.stable.is_empty() {
        return input("projection below 1 requested but the stable set is empty");
    }
    let mut g = rng::stream(seed, "init");
    let mut part = |idx: &[usize]| {
        let n = analysis.dim();
        if idx.is_empty() {
            return DVector::zeros(n);
        }
        let coef = sample_sphere(&mut g, idx.len());
        idx.iter().zip(coef.iter()).fold(DVector::zeros(n), |acc, (&i, &c)| acc + analysis.vector(i) * c)
    };
    let ws = part(&analysis.stable);
    let wus = part(&analysis.unstable);
    Ok(&analysis.x_star + (ws * (1.0 - p).sqrt() + wus * p.sqrt()) * eps)
}
