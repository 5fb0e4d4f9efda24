//! Penalty continuation: a decreasing sequence of `beta` values, each stage
//! warm-started from the previous stage's output.

use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::cost::CostLedger;
use crate::dinas::{dinas_run_observed, DinasConfig, RunResult};
use crate::error::{Error, Result};
use crate::linear_solvers::{jor_omega_bound, SolverMode};
use crate::network::ConsensusMatrix;
use crate::objectives::{PenaltyProblem, SharedCost, StackedPoint};

/// `beta_{s+1} = theta beta_s`, `eps_{s+1} = theta eps_s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSchedule {
    pub beta0: f64,
    pub eps0: f64,
    pub theta: f64,
    pub max_stages: usize,
}

impl ContinuationSchedule {
    /// `eps_s = 0.01 beta_s` with eight stages at most.
    pub fn coupled(beta0: f64, theta: f64) -> Self {
        Self { beta0, eps0: 0.01 * beta0, theta, max_stages: 8 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta0 > 0.0 && self.eps0 > 0.0) {
            return Err(Error::InvalidParameter("beta0 and eps0 must be positive".into()));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidParameter(format!("theta must be in (0,1), got {}", self.theta)));
        }
        if self.max_stages == 0 {
            return Err(Error::InvalidParameter("at least one stage is required".into()));
        }
        Ok(())
    }

    /// `(beta_s, eps_s)` for `s = 0, 1, ...`.
    pub fn stage(&self, s: usize) -> (f64, f64) {
        let f = self.theta.powi(s as i32);
        (self.beta0 * f, self.eps0 * f)
    }
}

/// How each stage picks its inner solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StageSolver {
    /// Use the configured solver unchanged.
    Fixed,
    /// JOR with `omega = fraction * jor_omega_bound(big_m, beta_s, w_bar)`.
    JorFraction { fraction: f64, big_m: f64 },
}

/// Stop once the consensus error against `y_star` reaches `target`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsensusTarget {
    pub y_star: DVector<f64>,
    pub target: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageRecord {
    pub stage: usize,
    pub beta: f64,
    pub eps: f64,
    pub outer_iters: usize,
    pub final_grad_inf: f64,
    pub consensus_error: Option<f64>,
    /// `max_i |x_i - y*|`, when `y*` is known.
    pub max_distance: Option<f64>,
    /// Cumulative over all stages so far.
    pub ledger: CostLedger,
}

#[derive(Clone, Debug)]
pub struct StagedRunResult {
    pub stages: Vec<StageRecord>,
    pub runs: Vec<RunResult>,
    pub final_point: StackedPoint,
    pub ledger: CostLedger,
    /// Set when a consensus target was given and met.
    pub reached_target: bool,
    /// `(cumulative ledger, consensus error)` at every outer iterate.
    pub error_trace: Vec<(CostLedger, f64)>,
}

pub const STAGE_COLUMNS: [&str; 8] =
    ["stage", "beta", "eps", "outer_iters", "final_grad_inf", "consensus_error", "scalar_ops_cum", "scalars_sent_cum"];

impl StagedRunResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(STAGE_COLUMNS)?;
        for s in &self.stages {
            w.write_record([
                s.stage.to_string(),
                s.beta.to_string(),
                s.eps.to_string(),
                s.outer_iters.to_string(),
                s.final_grad_inf.to_string(),
                s.consensus_error.map(|e| e.to_string()).unwrap_or_default(),
                s.ledger.scalar_ops.to_string(),
                s.ledger.scalars_sent.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn total_iterations(&self) -> usize {
        self.runs.iter().map(RunResult::iterations).sum()
    }
}

/// `(1/N) sum_i |x_i - y*|^2 / |y*|^2`.
pub fn consensus_error(x: &StackedPoint, y_star: &DVector<f64>) -> Result<f64> {
    let denom = y_star.norm_squared();
    if denom == 0.0 {
        return Err(Error::UndefinedRelativeError);
    }
    let sum: f64 = x.blocks().iter().map(|b| (b - y_star).norm_squared()).sum();
    Ok(sum / (x.node_count() as f64 * denom))
}

/// `max_i |x_i - y*|` in the Euclidean norm.
pub fn max_distance(x: &StackedPoint, y_star: &DVector<f64>) -> f64 {
    x.blocks().iter().map(|b| (b - y_star).norm()).fold(0.0, f64::max)
}

/// Runs DINAS on `Phi_{beta_s}` for `s = 0, 1, ...` until `eps_s`, shrinking
/// both by `theta` between stages. `gamma` restarts at `gamma0` every stage.
pub fn sdinas_run(
    costs: &[SharedCost],
    consensus: &ConsensusMatrix,
    x0: StackedPoint,
    schedule: &ContinuationSchedule,
    dinas: &DinasConfig,
    stage_solver: StageSolver,
    target: Option<&ConsensusTarget>,
) -> Result<StagedRunResult> {
    schedule.validate()?;
    let mut ledger = CostLedger::default();
    let mut x = x0;
    let mut stages = Vec::new();
    let mut runs = Vec::new();
    let mut error_trace = Vec::new();
    let mut reached_target = false;

    for s in 0..schedule.max_stages {
        let (beta, eps) = schedule.stage(s);
        let wrap = |e: Error| Error::StageFailed { stage: s, source: Box::new(e) };
        let problem = PenaltyProblem::new(costs.to_vec(), beta, consensus.clone()).map_err(wrap)?;
        let mut config = dinas.clone();
        config.tol_inf = eps;
        if let StageSolver::JorFraction { fraction, big_m } = stage_solver {
            config.solver.mode = SolverMode::Jor;
            config.solver.omega = fraction * jor_omega_bound(big_m, beta, consensus.w_bar());
        }

        let mut hit = false;
        let run = {
            let mut observe = |p: &StackedPoint, l: &CostLedger| match target {
                Some(t) => {
                    let e = consensus_error(p, &t.y_star).unwrap_or(f64::INFINITY);
                    error_trace.push((*l, e));
                    hit = e <= t.target;
                    hit
                }
                None => false,
            };
            dinas_run_observed(&problem, x, &config, &mut ledger, &mut observe).map_err(wrap)?
        };
        if !run.converged && !hit {
            return Err(wrap(Error::OuterIterationCap { iterations: run.iterations(), grad_inf: run.final_grad_inf }));
        }
        let (err, dist) = match target {
            Some(t) => (Some(consensus_error(&run.final_point, &t.y_star)?), Some(max_distance(&run.final_point, &t.y_star))),
            None => (None, None),
        };
        stages.push(StageRecord {
            stage: s,
            beta,
            eps,
            outer_iters: run.iterations(),
            final_grad_inf: run.final_grad_inf,
            consensus_error: err,
            max_distance: dist,
            ledger,
        });
        x = run.final_point.clone();
        runs.push(run);
        if hit {
            reached_target = true;
            break;
        }
    }
    Ok(StagedRunResult { stages, runs, final_point: x, ledger, reached_target, error_trace })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
