//! Command-line front end: `run`, `bounds`, `suite`, `plot`.

pub mod config;
pub mod output;
pub mod plot;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use serde::Serialize;

use crate::bounds::{BoundOptions, BoundSet};
use crate::diagnostics::{detect_phases, phases_from_radii, verify_selected, Check, CheckStatus, InvariantReport};
use crate::error::{Error, Result};
use crate::optimizer::{ccrgd_run, gd_run, init_near_saddle, OptimizerConfig, StepType, Termination, TrajectoryRecord};
use crate::spectral::{analyze_saddle, exact_gap, sorted_eigenvalues};

pub use config::{RunConfig, OUTPUT_DIR_ENV};
use config::{InitSpec, Resolved};
use output::{MethodSummary, RunSummary, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_PROPERTY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "saddle-escape", version, about = "Saddle-escape experiments for gradient descent and CCRGD")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured method(s) and write traces and a summary.
    Run { config: PathBuf },
    /// Print the bound set for the configured problem as JSON.
    Bounds { config: PathBuf },
    /// Run seeded trajectories and aggregate invariant checks.
    Suite { config: PathBuf },
    /// Render a trace CSV to SVG.
    Plot {
        trace: PathBuf,
        out: PathBuf,
        /// Radius marked as the first exit.
        #[arg(long)]
        eps: Option<f64>,
    },
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Csv(_) | Error::NotDescent(_) => EXIT_RUNTIME,
        _ => EXIT_VALIDATION,
    }
}

/// Parses `args` and dispatches; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run { config } => run_experiment(&config).map(|o| if o.diverged() { EXIT_RUNTIME } else { EXIT_OK }),
        Command::Bounds { config } => print_bounds(&config).map(|s| {
            emit(&s);
            EXIT_OK
        }),
        Command::Suite { config } => property_suite(&config).map(|r| {
            emit(&serde_json::to_string_pretty(&r).unwrap_or_default());
            if r.any_failure() {
                EXIT_PROPERTY
            } else {
                EXIT_OK
            }
        }),
        Command::Plot { trace, out, eps } => plot::read_trace_csv(&trace).and_then(|t| plot::render_trace_svg(&t, eps, &out)).map(|_| EXIT_OK),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}

/// Prints to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

/// Traces and summary of one run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub records: Vec<(String, TrajectoryRecord)>,
}

impl RunOutcome {
    pub fn diverged(&self) -> bool {
        self.records.iter().any(|(_, r)| r.termination == Termination::Diverged)
    }

    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.summary.methods.iter().find(|m| m.method == name)
    }
}

fn initial_point(cfg: &RunConfig, res: &Resolved, seed_offset: u64) -> Result<DVector<f64>> {
    match &cfg.init {
        InitSpec::Explicit { point } => Ok(DVector::from_column_slice(point)),
        InitSpec::NearSaddle { projection, seed } => {
            let x_star = res.problem.known_saddle.as_ref().expect("checked in resolve");
            let analysis = analyze_saddle(&res.problem, x_star, exact_gap(&sorted_eigenvalues(&res.problem.hessian(x_star))))?;
            init_near_saddle(&analysis, res.eps, *projection, seed.wrapping_add(seed_offset))
        }
    }
}

fn optimizer_config(cfg: &RunConfig, res: &Resolved, thin: usize) -> Result<OptimizerConfig> {
    let mut oc = OptimizerConfig::new(res.constants, res.problem.dim(), res.eps, cfg.max_iters)?;
    oc.step_radius = cfg.step_radius;
    oc.thin_stride = thin;
    Ok(oc)
}

fn run_method(name: &str, res: &Resolved, x0: &DVector<f64>, oc: &OptimizerConfig) -> Result<TrajectoryRecord> {
    match name {
        "gd" => gd_run(&res.problem, x0, oc),
        _ => ccrgd_run(&res.problem, x0, oc),
    }
}

fn bound_set(res: &Resolved) -> Option<BoundSet> {
    BoundSet::compute(&res.constants, res.problem.dim(), res.eps, res.xi, &BoundOptions::default()).ok()
}

fn invariants(res: &Resolved, rec: &TrajectoryRecord, bs: Option<&BoundSet>) -> Result<Option<InvariantReport>> {
    match (&res.problem.known_saddle, res.xi) {
        (Some(x_star), Some(xi)) if rec.is_dense() => {
            verify_selected(rec, &res.problem, x_star, res.eps, xi, &res.constants, bs, &res.checks).map(Some)
        }
        _ => Ok(None),
    }
}

fn summarize(name: &str, res: &Resolved, rec: &TrajectoryRecord, inv: Option<InvariantReport>) -> Result<MethodSummary> {
    let x0 = &rec.iterates[0];
    let last = rec.last_iterate();
    let eig0 = sorted_eigenvalues(&res.problem.hessian(x0));
    let eig1 = if last.iter().all(|v| v.is_finite()) { sorted_eigenvalues(&res.problem.hessian(last)) } else { vec![f64::NAN; eig0.len()] };
    let (reference, exit_ref) = match &res.problem.known_saddle {
        Some(s) => (s.clone(), "saddle"),
        None => (x0.clone(), "init"),
    };
    let (first_exit, first_xi_exit) = if rec.is_dense() {
        let radii: Vec<f64> = rec.iterates.iter().map(|x| (x - &reference).norm()).collect();
        let eps_exit = (1..radii.len()).find(|&k| radii[k - 1] <= res.eps * (1.0 + 1e-12) && radii[k] > res.eps * (1.0 + 1e-12));
        let xi_exit = match res.xi {
            Some(xi) => phases_from_radii(radii, res.eps, xi)?.k_hat_exit,
            None => None,
        };
        (eps_exit, xi_exit)
    } else {
        (None, None)
    };
    Ok(MethodSummary {
        method: name.to_string(),
        termination: rec.termination,
        steps: rec.step_types.iter().filter(|s| **s != StepType::Break).count(),
        second_order_count: rec.second_order_count,
        second_order_iterations: rec.step_types.iter().enumerate().filter(|(_, s)| **s == StepType::SecondOrder).map(|(k, _)| k).collect(),
        first_exit,
        first_xi_exit,
        exit_reference: exit_ref,
        initial_value: rec.values[0],
        final_value: *rec.values.last().unwrap(),
        final_grad_norm: *rec.grad_norms.last().unwrap(),
        initial_lambda_min: eig0[0],
        initial_lambda_max: eig0[eig0.len() - 1],
        final_lambda_min: eig1[0],
        final_lambda_max: eig1[eig1.len() - 1],
        initial_hessian_eigenvalues: eig0,
        final_hessian_eigenvalues: eig1,
        invariants: inv,
    })
}

/// Runs a parsed config, writing artifacts under `out_dir`.
pub fn run_config(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    let res = cfg.resolve()?;
    std::fs::create_dir_all(out_dir)?;
    let x0 = initial_point(cfg, &res, 0)?;
    let oc = optimizer_config(cfg, &res, cfg.outputs.thin_stride)?;
    let bs = bound_set(&res);
    let mut records = Vec::new();
    let mut methods = Vec::new();
    for &name in cfg.method.names() {
        let rec = run_method(name, &res, &x0, &oc)?;
        let inv = invariants(&res, &rec, bs.as_ref())?;
        methods.push(summarize(name, &res, &rec, inv)?);
        if cfg.outputs.emit_csv || cfg.outputs.emit_plots {
            let csv_path = out_dir.join(format!("{name}_trace.csv"));
            output::write_trace_csv_file(&csv_path, &rec, res.problem.known_saddle.as_ref())?;
            if cfg.outputs.emit_plots {
                let cols = plot::read_trace_csv(&csv_path)?;
                plot::render_trace_svg(&cols, Some(res.eps), &out_dir.join(format!("{name}_trace.svg")))?;
                let m = methods.last().unwrap();
                plot::render_spectrum_svg(
                    &m.initial_hessian_eigenvalues,
                    &m.final_hessian_eigenvalues,
                    &out_dir.join(format!("{name}_spectrum.svg")),
                )?;
            }
        }
        records.push((name.to_string(), rec));
    }
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        problem: res.problem.label.clone(),
        dim: res.problem.dim(),
        constants: res.constants,
        eps: res.eps,
        xi: res.xi,
        eps_max: res.eps_max,
        p_min: oc.p_min_raw,
        initial_point: x0.iter().copied().collect(),
        methods,
    };
    output::write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(RunOutcome { summary, records })
}

/// `run <config.json>`.
pub fn run_experiment(config_path: &Path) -> Result<RunOutcome> {
    let cfg = RunConfig::load(config_path)?;
    run_config(&cfg, &cfg.output_dir())
}

/// BoundSet JSON for the configured problem and `(eps, xi)`.
pub fn bounds_for(cfg: &RunConfig) -> Result<BoundSet> {
    let res = cfg.resolve()?;
    BoundSet::compute(&res.constants, res.problem.dim(), res.eps, res.xi, &BoundOptions::default())
}

/// `bounds <config.json>`: pretty JSON text.
pub fn print_bounds(config_path: &Path) -> Result<String> {
    let cfg = RunConfig::load(config_path)?;
    Ok(serde_json::to_string_pretty(&bounds_for(&cfg)?)?)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CheckTally {
    pub name: String,
    pub letter: char,
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
    pub failing_seeds: Vec<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodTally {
    pub method: String,
    pub diverged_seeds: Vec<u64>,
    pub checks: Vec<CheckTally>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub problem: String,
    pub seeds: usize,
    pub methods: Vec<MethodTally>,
}

impl SuiteReport {
    pub fn any_failure(&self) -> bool {
        self.methods.iter().any(|m| !m.diverged_seeds.is_empty() || m.checks.iter().any(|c| c.fail > 0))
    }

    pub fn tally(&self, method: &str, check: Check) -> Option<&CheckTally> {
        self.methods.iter().find(|m| m.method == method)?.checks.iter().find(|c| c.letter == check.letter())
    }
}

/// Runs `seeds` trajectories (init seed offset by the run index) and
/// aggregates the configured checks.
pub fn suite_config(cfg: &RunConfig) -> Result<SuiteReport> {
    let res = cfg.resolve()?;
    let seeds = cfg.seeds.ok_or_else(|| Error::Config { field: "seeds".into(), message: "suite needs a seed count".into() })?;
    let x_star = res
        .problem
        .known_saddle
        .clone()
        .ok_or_else(|| Error::Config { field: "problem".into(), message: "suite needs a known saddle".into() })?;
    let xi = res.xi.ok_or_else(|| Error::Config { field: "xi".into(), message: "suite needs xi".into() })?;
    let oc = optimizer_config(cfg, &res, 1)?;
    let bs = bound_set(&res);
    let mut methods = Vec::new();
    for &name in cfg.method.names() {
        let mut tallies: BTreeMap<Check, CheckTally> = res
            .checks
            .iter()
            .map(|&c| (c, CheckTally { name: c.to_string(), letter: c.letter(), ..Default::default() }))
            .collect();
        let mut diverged = Vec::new();
        for s in 0..seeds as u64 {
            let x0 = initial_point(cfg, &res, s)?;
            let rec = run_method(name, &res, &x0, &oc)?;
            if rec.termination == Termination::Diverged {
                diverged.push(s);
                continue;
            }
            detect_phases(&rec, &x_star, res.eps, xi)?;
            let report = verify_selected(&rec, &res.problem, &x_star, res.eps, xi, &res.constants, bs.as_ref(), &res.checks)?;
            for c in report.checks {
                let t = tallies.get_mut(&c.name).expect("selected check");
                match c.status {
                    CheckStatus::Pass => t.pass += 1,
                    CheckStatus::Skipped => t.skipped += 1,
                    CheckStatus::Fail => {
                        t.fail += 1;
                        t.failing_seeds.push(s);
                    }
                }
            }
        }
        let checks = res.checks.iter().map(|c| tallies[c].clone()).collect();
        methods.push(MethodTally { method: name.to_string(), diverged_seeds: diverged, checks });
    }
    Ok(SuiteReport { schema_version: SCHEMA_VERSION, problem: res.problem.label.clone(), seeds, methods })
}

/// `suite <config.json>`; also writes `suite.json` to the output directory.
pub fn property_suite(config_path: &Path) -> Result<SuiteReport> {
    let cfg = RunConfig::load(config_path)?;
    let report = suite_config(&cfg)?;
    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir)?;
    output::write_json(&dir.join("suite.json"), &report)?;
    Ok(report)
}
