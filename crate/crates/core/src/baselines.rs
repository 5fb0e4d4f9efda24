//! First-order distributed methods used as cost baselines: plain
//! distributed gradient descent, EXTRA and DIGing gradient tracking.

use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::continuation::{consensus_error, ConsensusTarget};
use crate::cost::{vector_ops, CostLedger};
use crate::error::{Error, Result};
use crate::network::ConsensusMatrix;
use crate::objectives::{SharedCost, StackedPoint};

/// Iterate norm beyond which a run is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    /// `x+ = W x - alpha grad f(x)`.
    Dg,
    /// `x2 = (I + W) x1 - (I + W)/2 x0 - alpha (grad f(x1) - grad f(x0))`.
    Extra,
    /// `x+ = W x - alpha y`, `y+ = W y + grad f(x+) - grad f(x)`.
    Diging,
}

impl BaselineMethod {
    /// Step as a multiple of `1/M` used when none is given.
    pub fn default_step_scale(self) -> f64 {
        match self {
            BaselineMethod::Dg => 1.0,
            BaselineMethod::Extra => 0.5,
            BaselineMethod::Diging => 0.1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BaselineMethod::Dg => "dg",
            BaselineMethod::Extra => "extra",
            BaselineMethod::Diging => "diging",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub step_size: f64,
    pub max_iters: usize,
    /// Stop once the gradient of the sum at the node average is this small.
    pub tol_inf: f64,
}

impl BaselineConfig {
    /// Step `default_step_scale / big_m`.
    pub fn from_constants(method: BaselineMethod, big_m: f64) -> Self {
        Self { method, step_size: method.default_step_scale() / big_m, max_iters: 100_000, tol_inf: 1e-8 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidParameter(format!("baseline step must be positive, got {}", self.step_size)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselineRecord {
    pub k: usize,
    /// `|sum_i grad f_i(mean x)|_inf`, evaluated off the ledger.
    pub grad_inf: f64,
    pub consensus_error: Option<f64>,
    /// Cumulative ledger at iterate `k`.
    pub ledger: CostLedger,
}

#[derive(Clone, Debug)]
pub struct BaselineResult {
    pub method: BaselineMethod,
    pub step_size: f64,
    /// One record per iterate, `x^0` first.
    pub records: Vec<BaselineRecord>,
    pub final_point: StackedPoint,
    pub ledger: CostLedger,
    pub converged: bool,
    pub diverged: bool,
    pub reached_target: bool,
}

impl BaselineResult {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// Same columns as the Newton traces; step columns hold the constant step.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(crate::dinas::TRACE_COLUMNS)?;
        let last = self.records.len().saturating_sub(1);
        for r in &self.records {
            let (alpha, condition) = if r.k == last { (String::new(), "final") } else { (self.step_size.to_string(), "none") };
            w.write_record([
                r.k.to_string(),
                r.grad_inf.to_string(),
                String::new(),
                alpha,
                String::new(),
                "0".into(),
                "0".into(),
                condition.into(),
                r.ledger.scalar_ops.to_string(),
                r.ledger.scalars_sent.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Mixer<'a> {
    w: &'a ConsensusMatrix,
    n: usize,
}

impl Mixer<'_> {
    /// `(W x)_i` for every node.
    fn mix(&self, x: &StackedPoint, ledger: &mut CostLedger) -> StackedPoint {
        let topo = self.w.topology();
        let blocks = (0..x.node_count())
            .map(|i| {
                let mut out = x.block(i) * self.w.weight(i, i);
                for &j in topo.neighbors(i) {
                    out.axpy(self.w.weight(i, j), x.block(j), 1.0);
                }
                ledger.charge_ops(((topo.degree(i) + 1) * self.n) as u64);
                out
            })
            .collect();
        StackedPoint::from_blocks(blocks).expect("blocks share a dimension")
    }

    fn exchange(&self, ledger: &mut CostLedger) {
        ledger.charge_sent((self.n * self.w.topology().directed_edge_count()) as u64);
    }
}

fn local_gradients(costs: &[SharedCost], x: &StackedPoint, ledger: &mut CostLedger) -> StackedPoint {
    let blocks = costs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            ledger.charge_ops(c.gradient_ops());
            c.gradient(x.block(i))
        })
        .collect();
    StackedPoint::from_blocks(blocks).expect("blocks share a dimension")
}

fn sum_gradient_at_mean(costs: &[SharedCost], x: &StackedPoint) -> f64 {
    let mean = x.mean();
    let mut g = DVector::zeros(mean.len());
    for c in costs {
        g += c.gradient(&mean);
    }
    g.amax()
}

fn diverged(x: &StackedPoint) -> bool {
    x.blocks().iter().any(|b| !(b.norm() <= DIVERGENCE_THRESHOLD))
}

fn axpy_blocks(x: &mut StackedPoint, a: f64, y: &StackedPoint, ledger: &mut CostLedger) {
    for i in 0..x.node_count() {
        x.block_mut(i).axpy(a, y.block(i), 1.0);
        ledger.charge_ops(vector_ops(y.dim()));
    }
}

/// Runs a baseline in synchronous rounds. Each mixing round sends `n`
/// scalars per directed edge; DIGing mixes two vectors per round.
pub fn baseline_run(
    costs: &[SharedCost],
    consensus: &ConsensusMatrix,
    x0: StackedPoint,
    config: &BaselineConfig,
    target: Option<&ConsensusTarget>,
) -> Result<BaselineResult> {
    config.validate()?;
    if costs.len() != consensus.node_count() || x0.node_count() != costs.len() {
        return Err(Error::DimensionMismatch { context: "baseline node count", expected: costs.len(), found: x0.node_count() });
    }
    let n = x0.dim();
    let alpha = config.step_size;
    let mixer = Mixer { w: consensus, n };
    let mut ledger = CostLedger::default();
    let mut records = Vec::new();

    let mut x = x0;
    let mut g = local_gradients(costs, &x, &mut ledger);
    // EXTRA keeps the previous iterate and gradient; DIGing keeps the tracker.
    let mut prev: Option<(StackedPoint, StackedPoint, StackedPoint)> = None;
    let mut y = g.clone();

    let observe = |k: usize, x: &StackedPoint, ledger: &CostLedger, records: &mut Vec<BaselineRecord>| -> (bool, bool) {
        let grad_inf = sum_gradient_at_mean(costs, x);
        let err = target.map(|t| consensus_error(x, &t.y_star).unwrap_or(f64::INFINITY));
        records.push(BaselineRecord { k, grad_inf, consensus_error: err, ledger: *ledger });
        let hit = matches!((err, target), (Some(e), Some(t)) if e <= t.target);
        (hit, grad_inf <= config.tol_inf)
    };

    let (mut hit, mut converged) = observe(0, &x, &ledger, &mut records);
    let mut is_diverged = false;
    let mut k = 0;
    while !hit && !converged && k < config.max_iters {
        match config.method {
            BaselineMethod::Dg => {
                mixer.exchange(&mut ledger);
                let mut next = mixer.mix(&x, &mut ledger);
                axpy_blocks(&mut next, -alpha, &g, &mut ledger);
                x = next;
                g = local_gradients(costs, &x, &mut ledger);
            }
            BaselineMethod::Extra => {
                mixer.exchange(&mut ledger);
                let wx = mixer.mix(&x, &mut ledger);
                let next = match &prev {
                    None => {
                        let mut next = wx.clone();
                        axpy_blocks(&mut next, -alpha, &g, &mut ledger);
                        next
                    }
                    Some((x_old, g_old, wx_old)) => {
                        // (I + W) x - (I + W)/2 x_old - alpha (g - g_old), reusing
                        // W x_old from the previous round.
                        let mut next = x.clone();
                        axpy_blocks(&mut next, 1.0, &wx, &mut ledger);
                        axpy_blocks(&mut next, -0.5, x_old, &mut ledger);
                        axpy_blocks(&mut next, -0.5, wx_old, &mut ledger);
                        axpy_blocks(&mut next, -alpha, &g, &mut ledger);
                        axpy_blocks(&mut next, alpha, g_old, &mut ledger);
                        next
                    }
                };
                let g_next = local_gradients(costs, &next, &mut ledger);
                prev = Some((std::mem::replace(&mut x, next), std::mem::replace(&mut g, g_next), wx));
            }
            BaselineMethod::Diging => {
                mixer.exchange(&mut ledger);
                mixer.exchange(&mut ledger);
                let mut next = mixer.mix(&x, &mut ledger);
                axpy_blocks(&mut next, -alpha, &y, &mut ledger);
                let g_next = local_gradients(costs, &next, &mut ledger);
                let mut y_next = mixer.mix(&y, &mut ledger);
                axpy_blocks(&mut y_next, 1.0, &g_next, &mut ledger);
                axpy_blocks(&mut y_next, -1.0, &g, &mut ledger);
                x = next;
                g = g_next;
                y = y_next;
            }
        }
        k += 1;
        if diverged(&x) {
            is_diverged = true;
            break;
        }
        (hit, converged) = observe(k, &x, &ledger, &mut records);
    }
    Ok(BaselineResult {
        method: config.method,
        step_size: alpha,
        records,
        final_point: x,
        ledger,
        converged,
        diverged: is_diverged,
        reached_target: hit,
    })
}
