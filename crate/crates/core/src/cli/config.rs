//! JSON run configuration.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bounds::{epsilon_upper_bound, expansion_constants, DEFAULT_VARSIGMA};
use crate::diagnostics::Check;
use crate::error::{Error, Result};
use crate::optimizer::StepRadius;
use crate::problem::{
    estimate_constants, make_matrix_factorization, make_quadratic, make_rastrigin, ObjectiveProblem, SmoothnessConstants,
};

/// Environment variable overriding `outputs.dir`.
pub const OUTPUT_DIR_ENV: &str = "SADDLE_ESCAPE_OUTPUT_DIR";

fn config_err<T>(field: &'static str, message: impl Into<String>) -> Result<T> {
    Err(Error::Config { field: field.into(), message: message.into() })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Rastrigin {
        n: usize,
    },
    MatrixFactorization {
        n1: usize,
        n2: usize,
        r: usize,
        w1: f64,
        w2: f64,
        rho: f64,
        seed: u64,
    },
    Quadratic {
        #[serde(default)]
        diag: Option<Vec<f64>>,
        #[serde(default)]
        matrix: Option<Vec<Vec<f64>>>,
    },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<ObjectiveProblem> {
        match self {
            ProblemSpec::Rastrigin { n } => make_rastrigin(*n),
            ProblemSpec::MatrixFactorization { n1, n2, r, w1, w2, rho, seed } => {
                make_matrix_factorization(*n1, *n2, *r, *w1, *w2, *rho, *seed)
            }
            ProblemSpec::Quadratic { diag, matrix } => match (diag, matrix) {
                (Some(d), None) => make_quadratic(DMatrix::from_diagonal(&DVector::from_column_slice(d))),
                (None, Some(rows)) => {
                    let n = rows.len();
                    if rows.iter().any(|r| r.len() != n) {
                        return config_err("problem.matrix", "matrix must be square");
                    }
                    make_quadratic(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
                }
                _ => config_err("problem", "quadratic needs exactly one of `diag` or `matrix`"),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gd,
    Ccrgd,
    Both,
}

impl Method {
    pub fn names(&self) -> &'static [&'static str] {
        match self {
            Method::Gd => &["gd"],
            Method::Ccrgd => &["ccrgd"],
            Method::Both => &["gd", "ccrgd"],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Auto {
    Auto,
}

/// A number or the literal `"auto"`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr {
    Auto(Auto),
    Value(f64),
}

impl Default for AutoOr {
    fn default() -> Self {
        AutoOr::Auto(Auto::Auto)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    NearSaddle { projection: f64, seed: u64 },
    Explicit { point: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantsMode {
    Problem,
    Estimate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstantsSpec {
    Mode(ConstantsMode),
    Explicit(SmoothnessConstants),
}

impl Default for ConstantsSpec {
    fn default() -> Self {
        ConstantsSpec::Mode(ConstantsMode::Problem)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub emit_csv: bool,
    #[serde(default)]
    pub emit_plots: bool,
    #[serde(default = "one")]
    pub thin_stride: usize,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn yes() -> bool {
    true
}
fn one() -> usize {
    1
}

impl Default for Outputs {
    fn default() -> Self {
        Self { dir: default_dir(), emit_csv: true, emit_plots: false, thin_stride: 1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChecksSpec {
    All(AllTag),
    List(Vec<String>),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllTag {
    All,
}

impl Default for ChecksSpec {
    fn default() -> Self {
        ChecksSpec::All(AllTag::All)
    }
}

fn default_alpha() -> String {
    "1/L".into()
}
fn default_iters() -> usize {
    5000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub method: Method,
    #[serde(default)]
    pub eps: AutoOr,
    #[serde(default)]
    pub xi: AutoOr,
    #[serde(default = "default_alpha")]
    pub alpha: String,
    pub init: InitSpec,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub constants: ConstantsSpec,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub checks: ChecksSpec,
    #[serde(default)]
    pub step_radius: StepRadius,
    /// Trajectories per scenario in the property suite.
    #[serde(default)]
    pub seeds: Option<usize>,
}

/// Problem plus the resolved numeric settings.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub problem: ObjectiveProblem,
    pub constants: SmoothnessConstants,
    pub eps: f64,
    pub xi: Option<f64>,
    pub eps_max: f64,
    pub checks: Vec<Check>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config { field: "config".into(), message: e.to_string() })
    }

    /// Output directory after the environment override.
    pub fn output_dir(&self) -> PathBuf {
        std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| self.outputs.dir.clone())
    }

    pub fn resolve(&self) -> Result<Resolved> {
        if self.alpha.replace(' ', "") != "1/L" {
            return config_err("alpha", "only \"1/L\" is supported");
        }
        if self.max_iters == 0 {
            return config_err("max_iters", "must be positive");
        }
        if self.outputs.thin_stride == 0 {
            return config_err("outputs.thin_stride", "must be positive");
        }
        if let StepRadius::Scaled(s) = self.step_radius {
            if !(s > 0.0) {
                return config_err("step_radius", "scale must be positive");
            }
        }
        let base = self.problem.build()?;
        let n = base.dim();
        let constants = match &self.constants {
            ConstantsSpec::Mode(ConstantsMode::Problem) => base.constants,
            ConstantsSpec::Explicit(c) => *c,
            ConstantsSpec::Mode(ConstantsMode::Estimate) => {
                let center = base.known_saddle.clone().unwrap_or_else(|| DVector::zeros(n));
                estimate_constants(&base, &center, 1.0, 64, 0)?
            }
        };
        let problem = base.with_constants(constants).map_err(|e| Error::Config { field: "constants".into(), message: e.to_string() })?;
        let eps_max = epsilon_upper_bound(&constants, n, None);
        let eps = match self.eps {
            AutoOr::Value(v) if v > 0.0 && v.is_finite() => v,
            AutoOr::Value(v) => return config_err("eps", format!("must be positive and finite, got {v}")),
            AutoOr::Auto(_) if eps_max.is_finite() && eps_max > 0.0 => eps_max,
            AutoOr::Auto(_) => return config_err("eps", "auto needs a finite eps_max (M > 0)"),
        };
        // auto xi is dropped when it does not exceed eps
        let xi = match self.xi {
            AutoOr::Value(x) if eps < x && x.is_finite() => Some(x),
            AutoOr::Value(x) => return config_err("xi", format!("need eps < xi, got eps = {eps}, xi = {x}")),
            AutoOr::Auto(_) => expansion_constants(&constants, DEFAULT_VARSIGMA).ok().map(|(x, _)| x).filter(|&x| eps < x),
        };
        let checks = match &self.checks {
            ChecksSpec::All(_) => Check::ALL.to_vec(),
            ChecksSpec::List(names) => names
                .iter()
                .map(|s| Check::parse(s).ok_or_else(|| Error::Config { field: "checks".into(), message: format!("unknown check `{s}`") }))
                .collect::<Result<_>>()?,
        };
        if let InitSpec::NearSaddle { projection, .. } = self.init {
            if !(0.0..=1.0).contains(&projection) {
                return config_err("init.projection", "must lie in [0, 1]");
            }
            if problem.known_saddle.is_none() {
                return config_err("init", "near_saddle needs a problem with a known saddle");
            }
        }
        if let InitSpec::Explicit { point } = &self.init {
            if point.len() != n {
                return config_err("init.point", format!("expected {n} entries, got {}", point.len()));
            }
        }
        Ok(Resolved { problem, constants, eps, xi, eps_max, checks })
    }
}
