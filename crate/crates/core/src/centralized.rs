//! Centralized inexact Newton with the same step rule and acceptance test as
//! the distributed method, and a fixed-step variant driven by known
//! constants.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cost::{factorization_ops, matvec_ops, triangular_solve_ops, vector_ops, CostLedger, SCALAR_DECISION_OPS};
use crate::dinas::{acceptance_check, forcing_term, search_step, Condition, ForcingSchedule, IterationRecord, RunResult, StepController};
use crate::error::{Error, Result};
use crate::objectives::{LocalCost, ProblemConstants, StackedPoint};

/// Solves `H d = g` to relative residual `eta` in the inf-norm.
pub trait NewtonSolver {
    /// Returns the direction, its achieved residual inf-norm, the rounds used
    /// and the scalar operations spent.
    fn solve(&self, hessian: &DMatrix<f64>, grad: &DVector<f64>, eta: f64) -> Result<NewtonSolve>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonSolve {
    pub direction: DVector<f64>,
    pub residual_inf: f64,
    pub iterations: usize,
    pub ops: u64,
}

/// Exact solve through a Cholesky factorization.
#[derive(Clone, Copy, Debug, Default)]
pub struct DenseCholesky;

impl NewtonSolver for DenseCholesky {
    fn solve(&self, hessian: &DMatrix<f64>, grad: &DVector<f64>, _eta: f64) -> Result<NewtonSolve> {
        let n = grad.len();
        let chol = hessian.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite("Newton system".into()))?;
        Ok(NewtonSolve {
            direction: chol.solve(grad),
            residual_inf: 0.0,
            iterations: 0,
            ops: factorization_ops(n) + 2 * triangular_solve_ops(n),
        })
    }
}

/// Jacobi over-relaxation with `omega = 1 / |D^{-1} H|_inf`, which keeps the
/// spectral radius of `omega D^{-1} H` at most one and so converges for SPD
/// systems.
#[derive(Clone, Copy, Debug)]
pub struct StationarySolver {
    pub max_iters: usize,
}

impl Default for StationarySolver {
    fn default() -> Self {
        Self { max_iters: 100_000 }
    }
}

impl NewtonSolver for StationarySolver {
    fn solve(&self, hessian: &DMatrix<f64>, grad: &DVector<f64>, eta: f64) -> Result<NewtonSolve> {
        let n = grad.len();
        let diag = hessian.diagonal();
        if let Some(k) = diag.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::JorDiagonalBreakdown { node: 0, component: k });
        }
        let scaled_norm = (0..n)
            .map(|r| hessian.row(r).iter().map(|v| v.abs()).sum::<f64>() / diag[r])
            .fold(0.0, f64::max);
        let omega = 1.0 / scaled_norm;
        let target = eta * grad.amax();
        let mut d = DVector::zeros(n);
        let mut iterations = 0;
        let mut ops = 0;
        let mut best = f64::INFINITY;
        loop {
            let r = grad - hessian * &d;
            let res = r.amax();
            best = best.min(res);
            if res <= target {
                return Ok(NewtonSolve { direction: d, residual_inf: res, iterations, ops });
            }
            if iterations >= self.max_iters {
                return Err(Error::InnerSolverStalled { iterations, best_residual: best, target });
            }
            d += r.component_div(&diag) * omega;
            iterations += 1;
            ops += matvec_ops(n) + 3 * vector_ops(n);
        }
    }
}

/// How the step length is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepPolicy {
    /// Shrinking `gamma` with acceptance tests.
    Adaptive,
    /// `fixed_polyak_step` with `gamma = mu^2 / L`, taken unconditionally.
    FixedPolyak { constants: ProblemConstants },
}

/// `alpha = min{1, ((1 - eta)/(1 + eta)^2) (mu^2/L) / |g|}`; 1 when `L = 0`.
pub fn fixed_polyak_step(constants: &ProblemConstants, eta_k: f64, grad_norm: f64) -> f64 {
    match constants.polyak_gamma() {
        Some(gamma) => {
            let t = (1.0 - eta_k) / ((1.0 + eta_k) * (1.0 + eta_k));
            (t * gamma / grad_norm).min(1.0)
        }
        None => 1.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralizedConfig {
    pub schedule: ForcingSchedule,
    pub gamma0: f64,
    pub q: f64,
    pub step: StepPolicy,
    pub tol_inf: f64,
    pub max_outer: usize,
    pub keep_iterates: bool,
}

impl CentralizedConfig {
    pub fn new(schedule: ForcingSchedule, gamma0: f64) -> Self {
        Self { schedule, gamma0, q: 0.5, step: StepPolicy::Adaptive, tol_inf: 1e-5, max_outer: 500, keep_iterates: false }
    }
}

fn eval_gradient(cost: &dyn LocalCost, y: &StackedPoint, ledger: &mut CostLedger) -> (StackedPoint, f64) {
    ledger.charge_ops(cost.gradient_ops() + vector_ops(cost.dim()));
    let g = StackedPoint::from_blocks(vec![cost.gradient(y.block(0))]).expect("one block");
    let inf = g.inf_norm();
    (g, inf)
}

/// Centralized inexact Newton on `f`. Trial points are `y - alpha d`.
pub fn dinasc_run(cost: &dyn LocalCost, y0: DVector<f64>, config: &CentralizedConfig, solver: &dyn NewtonSolver) -> Result<RunResult> {
    config.schedule.validate()?;
    if y0.len() != cost.dim() {
        return Err(Error::DimensionMismatch { context: "dinasc_run start", expected: cost.dim(), found: y0.len() });
    }
    let n = cost.dim();
    let mut schedule = config.schedule.clone();
    schedule.reset();
    let mut controller = StepController::new(config.gamma0, config.q)?;
    let mut ledger = CostLedger::default();
    let mut y = StackedPoint::from_blocks(vec![y0])?;
    let (mut g, mut grad_inf) = eval_gradient(cost, &y, &mut ledger);
    let initial_grad_inf = grad_inf;
    let start_ledger = ledger;
    let mut records = Vec::new();
    let mut iterates = Vec::new();
    if config.keep_iterates {
        iterates.push(y.clone());
    }
    while grad_inf > config.tol_inf && records.len() < config.max_outer {
        let k = records.len();
        let eta_k = forcing_term(&mut schedule, grad_inf);
        ledger.charge_ops(SCALAR_DECISION_OPS + cost.hessian_ops() + n as u64);
        let hess = cost.hessian(y.block(0));
        let sol = solver.solve(&hess, g.block(0), eta_k)?;
        ledger.charge_ops(sol.ops);
        let d = StackedPoint::from_blocks(vec![sol.direction])?;

        let (alpha, gamma, point, grad, new_inf, condition, rejections) = match config.step {
            StepPolicy::Adaptive => {
                let s = search_step(k, &y, &d, grad_inf, eta_k, &mut controller, |trial| {
                    ledger.charge_ops(SCALAR_DECISION_OPS + 2 * vector_ops(n));
                    Ok(eval_gradient(cost, trial, &mut ledger))
                })?;
                (s.alpha, s.gamma, s.point, s.grad, s.grad_inf, s.condition, s.rejections)
            }
            StepPolicy::FixedPolyak { constants } => {
                let alpha = fixed_polyak_step(&constants, eta_k, grad_inf);
                let gamma = constants.polyak_gamma().unwrap_or(f64::INFINITY);
                let trial = y.minus_scaled(alpha, &d);
                ledger.charge_ops(SCALAR_DECISION_OPS + 2 * vector_ops(n));
                let (tg, t_inf) = eval_gradient(cost, &trial, &mut ledger);
                let condition = acceptance_check(alpha, t_inf, grad_inf, eta_k, gamma);
                let violations = usize::from(condition == Condition::Rejected);
                (alpha, gamma, trial, tg, t_inf, condition, violations)
            }
        };
        records.push(IterationRecord {
            k,
            grad_inf,
            eta_k,
            alpha_k: alpha,
            gamma_k: gamma,
            inner_iterations: sol.iterations,
            rejections,
            condition,
            ledger,
            inner_residual_ratio: if grad_inf > 0.0 { sol.residual_inf / grad_inf } else { 0.0 },
            m_norm: None,
            inner_bound: None,
        });
        y = point;
        g = grad;
        grad_inf = new_inf;
        if config.keep_iterates {
            iterates.push(y.clone());
        }
    }
    let final_gamma = match config.step {
        StepPolicy::Adaptive => controller.gamma,
        StepPolicy::FixedPolyak { constants } => constants.polyak_gamma().unwrap_or(f64::INFINITY),
    };
    Ok(RunResult {
        records,
        converged: grad_inf <= config.tol_inf,
        final_grad_inf: grad_inf,
        initial_grad_inf,
        final_point: y,
        ledger,
        start_ledger,
        final_gamma,
        total_reductions: controller.reductions,
        iterates,
    })
}
