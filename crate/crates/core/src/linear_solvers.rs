//! Block-sparse Newton systems and the distributed inner solvers.
//!
//! Node `i` owns row `i` of the penalty Hessian: a dense local block
//! `H_ii = hess f_i(x_i) + (1 - w_ii)/beta I` and scalar couplings
//! `H_ij = -w_ij/beta I` to its neighbors. Solvers run in synchronous rounds
//! in which every node reads its neighbors' previous-round iterate and then
//! all nodes update at once.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::cost::{factorization_ops, jor_round_ops, matvec_ops, triangular_solve_ops, vector_ops};
use crate::error::{Error, Result};
use crate::objectives::{PenaltyProblem, StackedPoint};

/// Safety factor applied to the JOR relaxation bound by default.
pub const DEFAULT_OMEGA_FRACTION: f64 = 0.95;
/// Upper limit on inner rounds per solve.
pub const MAX_INNER_ITERS_CAP: usize = 100_000;

/// Row-distributed penalty Hessian.
#[derive(Clone, Debug)]
pub struct BlockHessian {
    beta: f64,
    self_weights: Vec<f64>,
    diag_blocks: Vec<DMatrix<f64>>,
    diag_entries: Vec<DVector<f64>>,
    /// `(j, -w_ij / beta)` for each neighbor `j` of node `i`.
    couplings: Vec<Vec<(usize, f64)>>,
}

impl BlockHessian {
    pub fn node_count(&self) -> usize {
        self.diag_blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.diag_blocks[0].nrows()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn diag_block(&self, i: usize) -> &DMatrix<f64> {
        &self.diag_blocks[i]
    }

    /// Diagonal of `H_ii` (the JOR preconditioner `D_ii`).
    pub fn diag_entries(&self, i: usize) -> &DVector<f64> {
        &self.diag_entries[i]
    }

    pub fn couplings(&self, i: usize) -> &[(usize, f64)] {
        &self.couplings[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.couplings[i].len()
    }

    /// `sum_i deg_i`.
    pub fn directed_edge_count(&self) -> usize {
        self.couplings.iter().map(Vec::len).sum()
    }

    /// `H_i d = H_ii d_i + sum_j H_ij d_j`.
    pub fn apply_row(&self, i: usize, d: &StackedPoint) -> DVector<f64> {
        let mut out = &self.diag_blocks[i] * d.block(i);
        for &(j, c) in &self.couplings[i] {
            out.axpy(c, d.block(j), 1.0);
        }
        out
    }

    /// Per-node residual blocks `g_i - H_i d`.
    pub fn residual(&self, d: &StackedPoint, g: &StackedPoint) -> StackedPoint {
        StackedPoint::from_blocks((0..self.node_count()).map(|i| g.block(i) - self.apply_row(i, d)).collect())
            .expect("blocks share a dimension")
    }

    /// The implied `nN x nN` matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let (nodes, n) = (self.node_count(), self.dim());
        let mut h = DMatrix::zeros(nodes * n, nodes * n);
        for i in 0..nodes {
            h.view_mut((i * n, i * n), (n, n)).copy_from(&self.diag_blocks[i]);
            for &(j, c) in &self.couplings[i] {
                for k in 0..n {
                    h[(i * n + k, j * n + k)] = c;
                }
            }
        }
        h
    }
}

/// Builds every node's Hessian row at `x`. Charges nothing; callers add the
/// local Hessian evaluation cost.
pub fn assemble_block_hessian(problem: &PenaltyProblem, x: &StackedPoint) -> Result<BlockHessian> {
    problem.check_point(x)?;
    let w = problem.consensus();
    let beta = problem.beta();
    let n = problem.dim();
    let nodes = problem.node_count();
    let mut diag_blocks = Vec::with_capacity(nodes);
    let mut diag_entries = Vec::with_capacity(nodes);
    let mut couplings = Vec::with_capacity(nodes);
    let mut self_weights = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let wii = w.weight(i, i);
        let mut h = problem.costs()[i].hessian(x.block(i));
        let shift = (1.0 - wii) / beta;
        for k in 0..n {
            h[(k, k)] += shift;
        }
        diag_entries.push(h.diagonal());
        diag_blocks.push(h);
        couplings.push(w.topology().neighbors(i).iter().map(|&j| (j, -w.weight(i, j) / beta)).collect());
        self_weights.push(wii);
    }
    Ok(BlockHessian { beta, self_weights, diag_blocks, diag_entries, couplings })
}

/// One synchronous JOR round: `d_i + omega D_ii^{-1} (g_i - H_i d)`.
pub fn jor_step(blocks: &BlockHessian, d: &StackedPoint, g: &StackedPoint, omega: f64) -> Result<StackedPoint> {
    let r = blocks.residual(d, g);
    jor_update(blocks, d, &r, omega)
}

fn jor_update(blocks: &BlockHessian, d: &StackedPoint, r: &StackedPoint, omega: f64) -> Result<StackedPoint> {
    let mut next = d.clone();
    for i in 0..blocks.node_count() {
        let diag = blocks.diag_entries(i);
        if let Some(k) = diag.iter().position(|&v| v == 0.0) {
            return Err(Error::JorDiagonalBreakdown { node: i, component: k });
        }
        let upd = r.block(i).component_div(diag);
        next.block_mut(i).axpy(omega, &upd, 1.0);
    }
    Ok(next)
}

/// Strict upper bound `2 beta (1 - w_bar) / (M + 2 beta)` on the JOR
/// relaxation parameter. Zero when `w_bar = 1`, in which case JOR cannot be
/// used.
pub fn jor_omega_bound(big_m: f64, beta: f64, w_bar: f64) -> f64 {
    2.0 * beta * (1.0 - w_bar) / (big_m + 2.0 * beta)
}

/// Per-node Cholesky factors of `hess f_i(x_i) + (1/beta) I`, reused for
/// every round of one outer iteration.
#[derive(Clone, Debug)]
pub struct DampedFactors {
    factors: Vec<Cholesky<f64, Dyn>>,
}

impl DampedFactors {
    pub fn new(blocks: &BlockHessian) -> Result<Self> {
        let factors = (0..blocks.node_count())
            .map(|i| {
                let mut m = blocks.diag_block(i).clone();
                let extra = blocks.self_weights[i] / blocks.beta;
                for k in 0..m.nrows() {
                    m[(k, k)] += extra;
                }
                m.cholesky().ok_or(Error::FactorizationFailed { node: i })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { factors })
    }
}

/// One round of the damped block iteration
/// `d_i+ = [hess f_i + (1/beta) I]^{-1} ((1/beta) sum_j w_ij d_j + g_i)`,
/// where the sum runs over the neighbors and node `i` itself. Its fixed
/// point is the exact Newton direction and it contracts by
/// `(1/beta) / (1/beta + mu)` per round in the Euclidean norm.
pub fn damped_block_step(blocks: &BlockHessian, d: &StackedPoint, g: &StackedPoint) -> Result<StackedPoint> {
    damped_step_with(blocks, &DampedFactors::new(blocks)?, d, g)
}

fn damped_step_with(blocks: &BlockHessian, factors: &DampedFactors, d: &StackedPoint, g: &StackedPoint) -> Result<StackedPoint> {
    let inv_beta = 1.0 / blocks.beta;
    let next = (0..blocks.node_count())
        .map(|i| {
            let mut rhs = g.block(i).clone();
            rhs.axpy(blocks.self_weights[i] * inv_beta, d.block(i), 1.0);
            for &(j, c) in blocks.couplings(i) {
                // c = -w_ij / beta
                rhs.axpy(-c, d.block(j), 1.0);
            }
            factors.factors[i].solve(&rhs)
        })
        .collect();
    StackedPoint::from_blocks(next)
}

/// Which inner solver computes Newton directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    Jor,
    DampedBlock,
    /// Direct dense solve of the stacked system. Test and reference use only.
    DenseOracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mode: SolverMode,
    /// JOR relaxation; ignored by the other modes.
    pub omega: f64,
    /// Assumed bound on the iteration-matrix inf-norm, used to size
    /// `max_inner_iters`.
    pub sigma_cap: f64,
    pub max_inner_iters: usize,
}

impl SolverConfig {
    pub fn jor(omega: f64) -> Self {
        Self { mode: SolverMode::Jor, omega, sigma_cap: 0.999, max_inner_iters: MAX_INNER_ITERS_CAP }
    }

    /// JOR with `omega = 0.95 * jor_omega_bound(M, beta, w_bar)`.
    pub fn jor_default(big_m: f64, beta: f64, w_bar: f64) -> Self {
        Self::jor(DEFAULT_OMEGA_FRACTION * jor_omega_bound(big_m, beta, w_bar))
    }

    pub fn damped_block() -> Self {
        Self { mode: SolverMode::DampedBlock, omega: 0.0, sigma_cap: 0.999, max_inner_iters: MAX_INNER_ITERS_CAP }
    }

    pub fn dense_oracle() -> Self {
        Self { mode: SolverMode::DenseOracle, omega: 0.0, sigma_cap: 0.5, max_inner_iters: 1 }
    }

    /// `10 * inner_iteration_bound(eta_min, sigma_cap)`, capped.
    pub fn with_iteration_budget(mut self, eta_min: f64) -> Self {
        let bound = inner_iteration_bound(eta_min, self.sigma_cap).unwrap_or(MAX_INNER_ITERS_CAP);
        self.max_inner_iters = bound.saturating_mul(10).min(MAX_INNER_ITERS_CAP);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == SolverMode::Jor && !(self.omega > 0.0) {
            return Err(Error::InvalidParameter(format!("JOR needs omega > 0, got {}", self.omega)));
        }
        if !(self.sigma_cap > 0.0 && self.sigma_cap < 1.0) {
            return Err(Error::InvalidParameter(format!("sigma_cap must be in (0,1), got {}", self.sigma_cap)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InnerSolveReport {
    pub iterations: usize,
    pub final_residual_inf: f64,
    pub scalars_sent: u64,
    pub scalar_ops: u64,
    /// Max per-node residual inf-norm before each round and after the last.
    pub residual_history: Vec<f64>,
}

/// Solves `H d = g` until every node satisfies
/// `|H_i d - g_i|_inf <= eta_k |g|_inf`, starting from `d0`.
///
/// The residual test runs on the simulator side and is not charged; each
/// round charges one exchange of `n` scalars per directed edge.
pub fn inner_solve(
    blocks: &BlockHessian,
    g: &StackedPoint,
    eta_k: f64,
    config: &SolverConfig,
    d0: StackedPoint,
) -> Result<(StackedPoint, InnerSolveReport)> {
    let n = blocks.dim();
    let nodes = blocks.node_count();
    let target = eta_k * g.inf_norm();

    if config.mode == SolverMode::DenseOracle {
        let size = n * nodes;
        let h = blocks.to_dense();
        let chol = h.cholesky().ok_or_else(|| Error::NotPositiveDefinite("stacked Newton system".into()))?;
        let d = StackedPoint::from_flat(&chol.solve(&g.to_flat()), nodes)?;
        let res = blocks.residual(&d, g).inf_norm();
        let report = InnerSolveReport {
            iterations: 0,
            final_residual_inf: res,
            scalars_sent: 0,
            scalar_ops: factorization_ops(size) + 2 * triangular_solve_ops(size),
            residual_history: vec![res],
        };
        return Ok((d, report));
    }

    config.validate()?;
    let factors = match config.mode {
        SolverMode::DampedBlock => Some(DampedFactors::new(blocks)?),
        _ => None,
    };
    let mut ops: u64 = match config.mode {
        SolverMode::DampedBlock => (factorization_ops(n) + vector_ops(n)) * nodes as u64,
        _ => 0,
    };
    let per_round_sent = (n * blocks.directed_edge_count()) as u64;
    let per_round_ops: u64 = (0..nodes)
        .map(|i| {
            let deg = blocks.degree(i);
            match config.mode {
                SolverMode::Jor => matvec_ops(n) + jor_round_ops(deg, n),
                _ => ((deg + 1) * n + n) as u64 + 2 * triangular_solve_ops(n),
            }
        })
        .sum();

    let mut d = d0;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut best = f64::INFINITY;
    loop {
        let r = blocks.residual(&d, g);
        let res = r.inf_norm();
        history.push(res);
        best = best.min(res);
        if res <= target {
            let report = InnerSolveReport {
                iterations,
                final_residual_inf: res,
                scalars_sent: per_round_sent * iterations as u64,
                scalar_ops: ops,
                residual_history: history,
            };
            return Ok((d, report));
        }
        if iterations >= config.max_inner_iters {
            return Err(Error::InnerSolverStalled { iterations, best_residual: best, target });
        }
        d = match &factors {
            Some(f) => damped_step_with(blocks, f, &d, g)?,
            None => jor_update(blocks, &d, &r, config.omega)?,
        };
        iterations += 1;
        ops += per_round_ops;
    }
}

/// `|I - omega H D^{-1}|_inf`, assembled one block row at a time.
pub fn iteration_matrix_inf_norm(blocks: &BlockHessian, omega: f64) -> f64 {
    let n = blocks.dim();
    let mut worst: f64 = 0.0;
    for i in 0..blocks.node_count() {
        let hii = blocks.diag_block(i);
        let di = blocks.diag_entries(i);
        for k in 0..n {
            let mut row = 0.0;
            for c in 0..n {
                let delta = if c == k { 1.0 } else { 0.0 };
                row += (delta - omega * hii[(k, c)] / di[c]).abs();
            }
            for &(j, coef) in blocks.couplings(i) {
                row += (omega * coef / blocks.diag_entries(j)[k]).abs();
            }
            worst = worst.max(row);
        }
    }
    worst
}

/// `ceil(ln eta_k / ln m_norm)`: rounds that certify the residual test from
/// a zero start when the iteration matrix contracts with factor `m_norm`.
pub fn inner_iteration_bound(eta_k: f64, m_norm: f64) -> Result<usize> {
    if m_norm >= 1.0 {
        return Err(Error::NoContractionCertificate(m_norm));
    }
    if m_norm <= 0.0 {
        return Ok(1);
    }
    Ok((eta_k.ln() / m_norm.ln()).ceil().max(1.0) as usize)
}
