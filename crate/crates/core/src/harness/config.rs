//! Versioned JSON experiment descriptions.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineMethod;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    /// Root seed; topology, problem data and constant sampling use separate
    /// streams derived from it.
    pub seed: u64,
    pub problem: ProblemSpec,
    pub topology: TopologySpec,
    pub method: MethodSpec,
    /// Weight of one transmitted scalar relative to one operation.
    #[serde(default = "default_cost_factor")]
    pub cost_factor: f64,
    #[serde(default)]
    pub constants: ConstantsSpec,
    /// Output directory; the CLI's `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_cost_factor() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// Regularized logistic loss on synthetic data split evenly over nodes.
    Logistic { n: usize, m: usize, nodes: usize },
    /// Logistic loss on a CSV file (features then a +-1 label per row).
    LogisticCsv { path: PathBuf, nodes: usize, rho: f64 },
    /// `x'A_i x + b_i'x` with spectra in `[lambda_min, lambda_max]`.
    Quadratic { n: usize, nodes: usize, lambda_min: f64, lambda_max: f64 },
}

impl ProblemSpec {
    pub fn nodes(&self) -> usize {
        match self {
            ProblemSpec::Logistic { nodes, .. } | ProblemSpec::LogisticCsv { nodes, .. } | ProblemSpec::Quadratic { nodes, .. } => *nodes,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    /// Unit-square geometric graph; radius defaults to `sqrt(ln N / N)`.
    RandomGeometric {
        #[serde(default)]
        radius: Option<f64>,
    },
    Ring,
    Path,
    Complete,
    /// Explicit undirected edges.
    Edges { edges: Vec<(usize, usize)> },
    /// Edge-list file: node count on the first line, then `i j` per line.
    EdgeListFile { path: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaPolicy {
    /// `fraction * 2 beta (1 - w_bar) / (M + 2 beta)`.
    FractionOfBound(f64),
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolverSpec {
    Jor {
        #[serde(default = "default_omega")]
        omega: OmegaPolicy,
    },
    DampedBlock,
    DenseOracle,
}

fn default_omega() -> OmegaPolicy {
    OmegaPolicy::FractionOfBound(crate::linear_solvers::DEFAULT_OMEGA_FRACTION)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralStep {
    Adaptive,
    FixedPolyak,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralSolver {
    Dense,
    Stationary,
}

/// Shared Newton hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonSpec {
    pub eta: f64,
    pub delta: f64,
    #[serde(default = "one")]
    pub gamma0: f64,
    #[serde(default = "half")]
    pub q: f64,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodSpec {
    Dinas {
        beta: f64,
        newton: NewtonSpec,
        solver: SolverSpec,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_max_outer")]
        max_outer: usize,
        #[serde(default = "yes")]
        warm_start: bool,
    },
    Sdinas {
        beta0: f64,
        theta: f64,
        /// Defaults to `0.01 beta0`.
        #[serde(default)]
        eps0: Option<f64>,
        #[serde(default = "default_stages")]
        max_stages: usize,
        newton: NewtonSpec,
        solver: SolverSpec,
        #[serde(default = "default_max_outer")]
        max_outer: usize,
        /// Stop once the relative consensus error reaches this value.
        #[serde(default)]
        target_error: Option<f64>,
    },
    Dinasc {
        newton: NewtonSpec,
        step: CentralStep,
        linear_solver: CentralSolver,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_max_outer")]
        max_outer: usize,
    },
    Baseline {
        method: BaselineMethod,
        /// Step as a multiple of `1/M`; the method default when absent.
        #[serde(default)]
        step_scale: Option<f64>,
        #[serde(default = "default_baseline_iters")]
        max_iters: usize,
        #[serde(default = "default_baseline_tol")]
        tol: f64,
        #[serde(default)]
        target_error: Option<f64>,
    },
}

fn default_tol() -> f64 {
    1e-5
}
fn default_max_outer() -> usize {
    500
}
fn default_stages() -> usize {
    8
}
fn default_baseline_iters() -> usize {
    100_000
}
fn default_baseline_tol() -> f64 {
    1e-8
}
fn yes() -> bool {
    true
}

impl MethodSpec {
    pub fn label(&self) -> &'static str {
        match self {
            MethodSpec::Dinas { .. } => "dinas",
            MethodSpec::Sdinas { .. } => "sdinas",
            MethodSpec::Dinasc { .. } => "dinasc",
            MethodSpec::Baseline { method, .. } => method.label(),
        }
    }
}

/// Sampling used to estimate `mu`, `M` and `L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSpec {
    pub samples: usize,
    /// Half-width added around the start point and the reference solution.
    pub margin: f64,
}

impl Default for ConstantsSpec {
    fn default() -> Self {
        Self { samples: 32, margin: 1.0 }
    }
}

fn bad(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be positive, got {v}")))
    }
}

fn unit_open(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(bad(field, format!("must be in (0,1), got {v}")))
    }
}

fn check_newton(n: &NewtonSpec) -> Result<()> {
    if !(0.0..1.0).contains(&n.eta) {
        return Err(bad("method.newton.eta", format!("must be in [0,1), got {}", n.eta)));
    }
    if !(0.0..=1.0).contains(&n.delta) {
        return Err(bad("method.newton.delta", format!("must be in [0,1], got {}", n.delta)));
    }
    positive("method.newton.gamma0", n.gamma0)?;
    unit_open("method.newton.q", n.q)
}

fn check_solver(s: &SolverSpec) -> Result<()> {
    match s {
        SolverSpec::Jor { omega: OmegaPolicy::FractionOfBound(f) } => unit_open("method.solver.omega.fraction_of_bound", *f),
        SolverSpec::Jor { omega: OmegaPolicy::Fixed(w) } => positive("method.solver.omega.fixed", *w),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad("schema_version", format!("expected {SCHEMA_VERSION}, got {}", self.schema_version)));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(bad("name", "must be a non-empty file-name-safe string"));
        }
        if !(self.cost_factor >= 0.0 && self.cost_factor.is_finite()) {
            return Err(bad("cost_factor", format!("must be nonnegative, got {}", self.cost_factor)));
        }
        if self.constants.samples == 0 {
            return Err(bad("constants.samples", "must be at least 1"));
        }
        positive("constants.margin", self.constants.margin)?;
        match &self.problem {
            ProblemSpec::Logistic { n, m, nodes } => {
                if *n == 0 || *nodes == 0 {
                    return Err(bad("problem", "n and nodes must be positive"));
                }
                if m % nodes != 0 || *m == 0 {
                    return Err(bad("problem.m", format!("{m} samples do not split evenly over {nodes} nodes")));
                }
            }
            ProblemSpec::LogisticCsv { nodes, rho, .. } => {
                if *nodes == 0 {
                    return Err(bad("problem.nodes", "must be positive"));
                }
                positive("problem.rho", *rho)?;
            }
            ProblemSpec::Quadratic { n, nodes, lambda_min, lambda_max } => {
                if *n == 0 || *nodes == 0 {
                    return Err(bad("problem", "n and nodes must be positive"));
                }
                positive("problem.lambda_min", *lambda_min)?;
                if lambda_max < lambda_min {
                    return Err(bad("problem.lambda_max", "must be at least lambda_min"));
                }
            }
        }
        if let TopologySpec::RandomGeometric { radius: Some(r) } = &self.topology {
            positive("topology.radius", *r)?;
        }
        match &self.method {
            MethodSpec::Dinas { beta, newton, solver, tol, .. } => {
                positive("method.beta", *beta)?;
                check_newton(newton)?;
                check_solver(solver)?;
                positive("method.tol", *tol)?;
            }
            MethodSpec::Sdinas { beta0, theta, eps0, max_stages, newton, solver, target_error, .. } => {
                positive("method.beta0", *beta0)?;
                unit_open("method.theta", *theta)?;
                if let Some(e) = eps0 {
                    positive("method.eps0", *e)?;
                }
                if *max_stages == 0 {
                    return Err(bad("method.max_stages", "must be at least 1"));
                }
                if let Some(t) = target_error {
                    positive("method.target_error", *t)?;
                }
                check_newton(newton)?;
                check_solver(solver)?;
            }
            MethodSpec::Dinasc { newton, tol, .. } => {
                check_newton(newton)?;
                positive("method.tol", *tol)?;
            }
            MethodSpec::Baseline { step_scale, tol, target_error, .. } => {
                if let Some(s) = step_scale {
                    positive("method.step_scale", *s)?;
                }
                if !(*tol >= 0.0) {
                    return Err(bad("method.tol", "must be nonnegative"));
                }
                if let Some(t) = target_error {
                    positive("method.target_error", *t)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "schema_version": 1,
        "name": "logistic-small",
        "seed": 3,
        "problem": {"family": "logistic", "n": 4, "m": 40, "nodes": 4},
        "topology": {"kind": "random_geometric"},
        "method": {"kind": "dinas", "beta": 0.1, "newton": {"eta": 0.5, "delta": 0.0},
                   "solver": {"mode": "jor", "omega": {"fraction_of_bound": 0.95}}},
        "cost_factor": 0.1
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_json(SAMPLE).unwrap();
        assert_eq!(cfg.method.label(), "dinas");
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_field_reports_location() {
        let text = SAMPLE.replace("\"seed\": 3", "\"seed\": 3, \"sede\": 4");
        let err = ExperimentConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("line 4"), "{err}");
        assert!(err.contains("sede"), "{err}");
    }

    #[test]
    fn invalid_value_names_field() {
        let text = SAMPLE.replace("\"eta\": 0.5", "\"eta\": 1.5");
        let err = ExperimentConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("method.newton.eta"), "{err}");
        let text = SAMPLE.replace("\"m\": 40", "\"m\": 41");
        assert!(ExperimentConfig::from_json(&text).unwrap_err().to_string().contains("problem.m"));
    }

    #[test]
    fn wrong_schema_version() {
        let text = SAMPLE.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(ExperimentConfig::from_json(&text).unwrap_err().to_string().contains("schema_version"));
    }
}
