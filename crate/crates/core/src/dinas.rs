//! The distributed outer loop: forcing terms, the adaptive step, the
//! acceptance test, the `gamma` controller and max-flooding.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cost::{vector_ops, CostLedger, SCALAR_DECISION_OPS};
use crate::error::{Error, Result};
use crate::linear_solvers::{
    assemble_block_hessian, inner_iteration_bound, inner_solve, iteration_matrix_inf_norm, BlockHessian, SolverConfig,
    SolverMode,
};
use crate::network::Topology;
use crate::objectives::{PenaltyProblem, StackedPoint};

/// Consecutive `gamma` reductions tolerated within one outer iteration.
pub const REJECTION_CAP: usize = 200;

/// `eta_k = min{eta, eta * |g|^delta}`, clamped to be nonincreasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcingSchedule {
    pub eta: f64,
    pub delta: f64,
    #[serde(skip)]
    last: Option<f64>,
}

impl ForcingSchedule {
    pub fn new(eta: f64, delta: f64) -> Result<Self> {
        let s = Self { eta, delta, last: None };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidParameter(format!("forcing eta must be in [0,1), got {}", self.eta)));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidParameter(format!("forcing delta must be in [0,1], got {}", self.delta)));
        }
        Ok(())
    }

    /// Forgets the previous value so the schedule can start a new run.
    pub fn reset(&mut self) {
        self.last = None;
    }

    pub fn last(&self) -> Option<f64> {
        self.last
    }
}

pub fn forcing_term(schedule: &mut ForcingSchedule, grad_inf: f64) -> f64 {
    let raw = schedule.eta.min(schedule.eta * grad_inf.powf(schedule.delta));
    let eta_k = match schedule.last {
        Some(prev) => raw.min(prev),
        None => raw,
    };
    schedule.last = Some(eta_k);
    eta_k
}

/// `gamma` shrinks by `q` on every rejected trial step and never grows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepController {
    pub gamma: f64,
    pub q: f64,
    pub reductions: usize,
}

impl StepController {
    pub fn new(gamma0: f64, q: f64) -> Result<Self> {
        if !(gamma0 > 0.0 && gamma0.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma0 must be positive, got {gamma0}")));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!("q must be in (0,1), got {q}")));
        }
        Ok(Self { gamma: gamma0, q, reductions: 0 })
    }

    pub fn reject(&mut self) {
        self.gamma *= self.q;
        self.reductions += 1;
    }
}

/// `alpha = min{1, ((1 - eta)/(1 + eta)^2) gamma / |g|}`.
pub fn adaptive_step(eta_k: f64, gamma_k: f64, grad_inf: f64) -> f64 {
    debug_assert!(grad_inf > 0.0, "step requested at a stationary point");
    let t = (1.0 - eta_k) / ((1.0 + eta_k) * (1.0 + eta_k));
    (t * gamma_k / grad_inf).min(1.0)
}

/// Which decrease test a step passed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Damped step (`alpha < 1`) with a fixed decrement.
    Cond1,
    /// Full step with a linear-plus-quadratic bound.
    Cond2,
    Rejected,
}

impl Condition {
    pub fn label(self) -> &'static str {
        match self {
            Condition::Cond1 => "cond1",
            Condition::Cond2 => "cond2",
            Condition::Rejected => "rejected",
        }
    }
}

pub fn acceptance_check(alpha: f64, new_grad_inf: f64, grad_inf: f64, eta_k: f64, gamma_k: f64) -> Condition {
    let one_p = 1.0 + eta_k;
    if alpha < 1.0 {
        let one_m = 1.0 - eta_k;
        let decrement = 0.5 * gamma_k * one_m * one_m / (one_p * one_p);
        if new_grad_inf <= grad_inf - decrement {
            return Condition::Cond1;
        }
    } else if new_grad_inf <= eta_k * grad_inf + one_p * one_p * grad_inf * grad_inf / (2.0 * gamma_k) {
        return Condition::Cond2;
    }
    Condition::Rejected
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DsfOutcome {
    pub max: f64,
    pub rounds: usize,
    pub scalars_sent: u64,
}

/// Every node learns the network-wide maximum by flooding.
///
/// Each node keeps the set of values it knows; per round it forwards to each
/// neighbor the values it has not yet sent there and has not received from
/// there. Stops once every node knows every value, so `rounds` never exceeds
/// the diameter.
pub fn dsf_max(local_values: &[f64], topology: &Topology) -> DsfOutcome {
    let nodes = local_values.len();
    assert_eq!(nodes, topology.node_count(), "one value per node");
    // known[i][v]: node i holds value v. covered[i][slot][v]: v need not go
    // from i to its slot-th neighbor.
    let mut known: Vec<Vec<bool>> = (0..nodes).map(|i| (0..nodes).map(|v| v == i).collect()).collect();
    let mut covered: Vec<Vec<Vec<bool>>> =
        (0..nodes).map(|i| vec![vec![false; nodes]; topology.degree(i)]).collect();
    let mut rounds = 0;
    let mut sent = 0u64;
    while rounds + 1 < nodes && known.iter().any(|k| k.iter().any(|&b| !b)) {
        let mut deliveries: Vec<(usize, usize, usize)> = Vec::new(); // (from, to, value)
        for i in 0..nodes {
            for (slot, &j) in topology.neighbors(i).iter().enumerate() {
                for v in 0..nodes {
                    if known[i][v] && !covered[i][slot][v] {
                        covered[i][slot][v] = true;
                        deliveries.push((i, j, v));
                    }
                }
            }
        }
        sent += deliveries.len() as u64;
        for (from, to, v) in deliveries {
            known[to][v] = true;
            let back = topology.neighbors(to).iter().position(|&x| x == from).expect("undirected edge");
            covered[to][back][v] = true;
        }
        rounds += 1;
    }
    let max = local_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    DsfOutcome { max, rounds, scalars_sent: sent }
}

/// One committed outer iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `|g^k|_inf` at the start of the iteration.
    pub grad_inf: f64,
    pub eta_k: f64,
    pub alpha_k: f64,
    /// `gamma` used by the accepted step.
    pub gamma_k: f64,
    pub inner_iterations: usize,
    pub rejections: usize,
    pub condition: Condition,
    /// Cumulative ledger after the iteration.
    pub ledger: CostLedger,
    /// Final over initial inner residual.
    pub inner_residual_ratio: f64,
    /// JOR iteration-matrix inf-norm, when diagnostics are on.
    pub m_norm: Option<f64>,
    /// Round bound implied by `m_norm` and `eta_k`, when it contracts.
    pub inner_bound: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DinasConfig {
    pub schedule: ForcingSchedule,
    pub gamma0: f64,
    pub q: f64,
    pub solver: SolverConfig,
    pub tol_inf: f64,
    pub max_outer: usize,
    /// Start each inner solve from the previous direction instead of zero.
    pub warm_start: bool,
    /// Store every iterate in the result.
    pub keep_iterates: bool,
    /// Compute the JOR iteration-matrix norm each iteration (not charged).
    pub diagnostics: bool,
}

impl DinasConfig {
    pub fn new(schedule: ForcingSchedule, gamma0: f64, solver: SolverConfig) -> Self {
        Self {
            schedule,
            gamma0,
            q: 0.5,
            solver,
            tol_inf: 1e-5,
            max_outer: 500,
            warm_start: true,
            keep_iterates: false,
            diagnostics: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        StepController::new(self.gamma0, self.q)?;
        if !(self.tol_inf > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", self.tol_inf)));
        }
        if self.solver.mode != SolverMode::DenseOracle {
            self.solver.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub records: Vec<IterationRecord>,
    pub final_point: StackedPoint,
    pub final_grad_inf: f64,
    pub initial_grad_inf: f64,
    pub converged: bool,
    pub ledger: CostLedger,
    /// Ledger once the initial gradient is known.
    pub start_ledger: CostLedger,
    pub final_gamma: f64,
    pub total_reductions: usize,
    /// `x^0, x^1, ...` when requested.
    pub iterates: Vec<StackedPoint>,
}

impl RunResult {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn total_rejections(&self) -> usize {
        self.records.iter().map(|r| r.rejections).sum()
    }

    pub fn min_gamma(&self) -> f64 {
        self.records.iter().map(|r| r.gamma_k).fold(self.final_gamma, f64::min)
    }

    /// Trace CSV: one row per iteration plus a final row with the terminal
    /// gradient norm and empty step columns.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_COLUMNS)?;
        for row in self.csv_rows() {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Rows of [`RunResult::write_csv`] without the header.
    pub fn csv_rows(&self) -> Vec<[String; 10]> {
        let mut rows: Vec<[String; 10]> = self
            .records
            .iter()
            .map(|r| {
                [
                    r.k.to_string(),
                    r.grad_inf.to_string(),
                    r.eta_k.to_string(),
                    r.alpha_k.to_string(),
                    r.gamma_k.to_string(),
                    r.inner_iterations.to_string(),
                    r.rejections.to_string(),
                    r.condition.label().to_string(),
                    r.ledger.scalar_ops.to_string(),
                    r.ledger.scalars_sent.to_string(),
                ]
            })
            .collect();
        rows.push([
            self.records.len().to_string(),
            self.final_grad_inf.to_string(),
            String::new(),
            String::new(),
            self.final_gamma.to_string(),
            "0".into(),
            "0".into(),
            "final".into(),
            self.ledger.scalar_ops.to_string(),
            self.ledger.scalars_sent.to_string(),
        ]);
        rows
    }

    /// `(k, |g^k|_inf, cumulative ledger)` for `k = 0..=K`.
    pub fn gradient_history(&self) -> Vec<(usize, f64, CostLedger)> {
        let mut out = Vec::with_capacity(self.records.len() + 1);
        let mut prev = self.start_ledger;
        for r in &self.records {
            out.push((r.k, r.grad_inf, prev));
            prev = r.ledger;
        }
        out.push((self.records.len(), self.final_grad_inf, self.ledger));
        out
    }
}

pub const TRACE_COLUMNS: [&str; 10] = [
    "k",
    "grad_inf",
    "eta_k",
    "alpha_k",
    "gamma_k",
    "inner_iters",
    "rejections",
    "condition",
    "scalar_ops_cum",
    "scalars_sent_cum",
];

/// Trial-and-shrink loop shared by the distributed and centralized methods.
/// `eval` forms the trial point's gradient and returns it with its norm.
pub(crate) struct AcceptedStep {
    pub alpha: f64,
    pub gamma: f64,
    pub point: StackedPoint,
    pub grad: StackedPoint,
    pub grad_inf: f64,
    pub condition: Condition,
    pub rejections: usize,
}

pub(crate) fn search_step<F>(
    k: usize,
    x: &StackedPoint,
    d: &StackedPoint,
    grad_inf: f64,
    eta_k: f64,
    controller: &mut StepController,
    mut eval: F,
) -> Result<AcceptedStep>
where
    F: FnMut(&StackedPoint) -> Result<(StackedPoint, f64)>,
{
    let mut rejections = 0;
    loop {
        let alpha = adaptive_step(eta_k, controller.gamma, grad_inf);
        let trial = x.minus_scaled(alpha, d);
        let (g, g_inf) = eval(&trial)?;
        let condition = acceptance_check(alpha, g_inf, grad_inf, eta_k, controller.gamma);
        if condition != Condition::Rejected {
            return Ok(AcceptedStep {
                alpha,
                gamma: controller.gamma,
                point: trial,
                grad: g,
                grad_inf: g_inf,
                condition,
                rejections,
            });
        }
        controller.reject();
        rejections += 1;
        if rejections >= REJECTION_CAP {
            return Err(Error::RejectionCap { iteration: k, reductions: rejections });
        }
    }
}

/// Current iterate with its gradient and Hessian rows.
#[derive(Clone, Debug)]
pub struct DinasState {
    pub k: usize,
    pub x: StackedPoint,
    pub g: StackedPoint,
    pub grad_inf: f64,
    blocks: BlockHessian,
    direction: Option<StackedPoint>,
}

impl DinasState {
    /// Evaluates gradient, its max-norm and the Hessian rows at `x0`,
    /// charging the ledger.
    pub fn new(problem: &PenaltyProblem, x0: StackedPoint, ledger: &mut CostLedger) -> Result<Self> {
        problem.check_point(&x0)?;
        let (g, grad_inf) = distributed_gradient(problem, &x0, ledger);
        let blocks = assemble_charged(problem, &x0, ledger)?;
        Ok(Self { k: 0, x: x0, g, grad_inf, blocks, direction: None })
    }

    pub fn blocks(&self) -> &BlockHessian {
        &self.blocks
    }
}

/// Neighbor exchange of `x`, local gradients, local norms and max-flooding.
fn distributed_gradient(problem: &PenaltyProblem, x: &StackedPoint, ledger: &mut CostLedger) -> (StackedPoint, f64) {
    let topo = problem.consensus().topology();
    let n = problem.dim();
    ledger.charge_sent((n * topo.directed_edge_count()) as u64);
    let g = problem.penalty_gradient(x).expect("point checked by caller");
    for i in 0..problem.node_count() {
        let deg = topo.degree(i);
        ledger.charge_ops(problem.costs()[i].gradient_ops() + ((2 * deg + 2) * n) as u64 + vector_ops(n));
    }
    let dsf = dsf_max(&g.block_inf_norms(), topo);
    ledger.charge_sent(dsf.scalars_sent);
    ledger.charge_ops(dsf.scalars_sent);
    (g, dsf.max)
}

fn assemble_charged(problem: &PenaltyProblem, x: &StackedPoint, ledger: &mut CostLedger) -> Result<BlockHessian> {
    let n = problem.dim() as u64;
    for c in problem.costs() {
        ledger.charge_ops(c.hessian_ops() + n);
    }
    assemble_block_hessian(problem, x)
}

/// One outer iteration: direction, step search, commit.
pub fn dinas_iteration(
    state: DinasState,
    problem: &PenaltyProblem,
    config: &DinasConfig,
    schedule: &mut ForcingSchedule,
    controller: &mut StepController,
    ledger: &mut CostLedger,
) -> Result<(DinasState, IterationRecord)> {
    let nodes = problem.node_count() as u64;
    let n = problem.dim();
    let k = state.k;
    let eta_k = forcing_term(schedule, state.grad_inf);
    ledger.charge_ops(SCALAR_DECISION_OPS * nodes);

    let d0 = match (&state.direction, config.warm_start) {
        (Some(d), true) => d.clone(),
        _ => StackedPoint::zeros(problem.node_count(), n),
    };
    let (m_norm, inner_bound) = if config.diagnostics && config.solver.mode == SolverMode::Jor {
        let m = iteration_matrix_inf_norm(&state.blocks, config.solver.omega);
        (Some(m), inner_iteration_bound(eta_k, m).ok())
    } else {
        (None, None)
    };
    let (d, report) = inner_solve(&state.blocks, &state.g, eta_k, &config.solver, d0)?;
    ledger.charge_ops(report.scalar_ops);
    ledger.charge_sent(report.scalars_sent);
    let inner_residual_ratio = match report.residual_history.first() {
        Some(&r0) if r0 > 0.0 => report.final_residual_inf / r0,
        _ => 0.0,
    };

    let step = search_step(k, &state.x, &d, state.grad_inf, eta_k, controller, |trial| {
        ledger.charge_ops((SCALAR_DECISION_OPS + 2 * vector_ops(n)) * nodes);
        Ok(distributed_gradient(problem, trial, ledger))
    })?;

    let blocks = assemble_charged(problem, &step.point, ledger)?;
    let record = IterationRecord {
        k,
        grad_inf: state.grad_inf,
        eta_k,
        alpha_k: step.alpha,
        gamma_k: step.gamma,
        inner_iterations: report.iterations,
        rejections: step.rejections,
        condition: step.condition,
        ledger: *ledger,
        inner_residual_ratio,
        m_norm,
        inner_bound,
    };
    let next = DinasState {
        k: k + 1,
        x: step.point,
        g: step.grad,
        grad_inf: step.grad_inf,
        blocks,
        direction: Some(d),
    };
    Ok((next, record))
}

/// Iterates until `|g|_inf <= tol_inf` or `max_outer` iterations.
pub fn dinas_run(problem: &PenaltyProblem, x0: StackedPoint, config: &DinasConfig) -> Result<RunResult> {
    let mut ledger = CostLedger::default();
    dinas_run_with_ledger(problem, x0, config, &mut ledger)
}

/// As [`dinas_run`], charging into an existing ledger (continuation stages).
pub fn dinas_run_with_ledger(
    problem: &PenaltyProblem,
    x0: StackedPoint,
    config: &DinasConfig,
    ledger: &mut CostLedger,
) -> Result<RunResult> {
    dinas_run_observed(problem, x0, config, ledger, &mut |_, _| false)
}

/// As [`dinas_run_with_ledger`], calling `observer` on every iterate
/// (including `x^0`) with the ledger so far; returning `true` stops the run.
/// Observation is free.
pub fn dinas_run_observed(
    problem: &PenaltyProblem,
    x0: StackedPoint,
    config: &DinasConfig,
    ledger: &mut CostLedger,
    observer: &mut dyn FnMut(&StackedPoint, &CostLedger) -> bool,
) -> Result<RunResult> {
    if config.solver.mode == SolverMode::Jor && !(config.solver.omega > 0.0) {
        return Err(Error::JorUnusable { w_bar: problem.consensus().w_bar() });
    }
    config.validate()?;
    let mut schedule = config.schedule.clone();
    schedule.reset();
    let mut controller = StepController::new(config.gamma0, config.q)?;
    let mut state = DinasState::new(problem, x0, ledger)?;
    let initial_grad_inf = state.grad_inf;
    let start_ledger = *ledger;
    let mut records = Vec::new();
    let mut iterates = Vec::new();
    if config.keep_iterates {
        iterates.push(state.x.clone());
    }
    let mut stopped = observer(&state.x, ledger);
    while !stopped && state.grad_inf > config.tol_inf && records.len() < config.max_outer {
        let (next, record) = dinas_iteration(state, problem, config, &mut schedule, &mut controller, ledger)?;
        state = next;
        records.push(record);
        if config.keep_iterates {
            iterates.push(state.x.clone());
        }
        stopped = observer(&state.x, ledger);
    }
    Ok(RunResult {
        records,
        converged: state.grad_inf <= config.tol_inf,
        final_grad_inf: state.grad_inf,
        initial_grad_inf,
        final_point: state.x,
        ledger: *ledger,
        start_ledger,
        final_gamma: controller.gamma,
        total_reductions: controller.reductions,
        iterates,
    })
}

/// Worst-case outer iterations to reach `|g|_inf <= tol`,
/// `ceil(log(|g0|/tol) / log(1/rho) + 1)` with
/// `rho = max{(1 + eta_bar)/2, 1 - C/|g0|}` and
/// `C = q (mu^2/L) (1 - eta_bar)^2 / (1 + eta_bar)^2`. `None` when `L = 0`.
pub fn complexity_bound(grad0_inf: f64, eta_bar: f64, q: f64, mu: f64, lip_hess: f64, tol: f64) -> Option<usize> {
    if !(lip_hess > 0.0) {
        return None;
    }
    let c = q * (mu * mu / lip_hess) * (1.0 - eta_bar).powi(2) / (1.0 + eta_bar).powi(2);
    let rho = ((1.0 + eta_bar) / 2.0).max(1.0 - c / grad0_inf);
    assert!(rho < 1.0 && rho > 0.0, "contraction factor {rho} out of range");
    let ratio = (grad0_inf / tol).ln().max(0.0);
    Some((ratio / (1.0 / rho).ln() + 1.0).ceil() as usize)
}

/// Upper bound on damped iterations once `gamma` has settled:
/// `ceil((|g^{m1}| - gamma_bar (1 - eta_bar)/(1 + eta_bar)^2) / C + 1)` with
/// `gamma_bar = q mu^2 / L`. Diagnostic only.
pub fn damped_phase_bound(grad_m1_inf: f64, eta_bar: f64, q: f64, mu: f64, lip_hess: f64) -> Option<usize> {
    if !(lip_hess > 0.0) {
        return None;
    }
    let gamma_bar = q * mu * mu / lip_hess;
    let c = gamma_bar * (1.0 - eta_bar).powi(2) / (1.0 + eta_bar).powi(2);
    let excess = grad_m1_inf - gamma_bar * (1.0 - eta_bar) / (1.0 + eta_bar).powi(2);
    Some((excess / c + 1.0).ceil().max(0.0) as usize)
}

/// `ceil(log_{1/q}(gamma0 L / mu^2))`, the most reductions a run can make,
/// or zero when `gamma0 <= mu^2/L`.
pub fn rejection_bound(gamma0: f64, q: f64, mu: f64, lip_hess: f64) -> usize {
    let ratio = gamma0 * lip_hess / (mu * mu);
    if ratio <= 1.0 {
        0
    } else {
        (ratio.ln() / (1.0 / q).ln()).ceil() as usize
    }
}

/// Mean per-round residual decay `nu_k^{1/l_k}` over the last `tail`
/// iterations that ran inner rounds.
pub fn communication_rate_proxy(records: &[IterationRecord], tail: usize) -> Option<f64> {
    let rates: Vec<f64> = records
        .iter()
        .filter(|r| r.inner_iterations > 0 && r.inner_residual_ratio > 0.0)
        .map(|r| r.inner_residual_ratio.powf(1.0 / r.inner_iterations as f64))
        .collect();
    let tail_rates = &rates[rates.len().saturating_sub(tail)..];
    (!tail_rates.is_empty()).then(|| tail_rates.iter().sum::<f64>() / tail_rates.len() as f64)
}
