use nalgebra::{DMatrix, DVector};

use super::{check_dim, SharedCost, StackedPoint};
use crate::error::{Error, Result};
use crate::network::ConsensusMatrix;

/// `Phi_beta(x) = sum_i f_i(x_i) + (1/2beta) x'(I - W (x) I_n) x`.
#[derive(Clone, Debug)]
pub struct PenaltyProblem {
    costs: Vec<SharedCost>,
    beta: f64,
    consensus: ConsensusMatrix,
}

impl PenaltyProblem {
    pub fn new(costs: Vec<SharedCost>, beta: f64, consensus: ConsensusMatrix) -> Result<Self> {
        check_dim("PenaltyProblem costs", consensus.node_count(), costs.len())?;
        let n = costs[0].dim();
        if let Some(c) = costs.iter().find(|c| c.dim() != n) {
            return Err(Error::DimensionMismatch { context: "PenaltyProblem cost dim", expected: n, found: c.dim() });
        }
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")));
        }
        Ok(Self { costs, beta, consensus })
    }

    /// Same costs and network, different penalty parameter.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.costs.clone(), beta, self.consensus.clone())
    }

    pub fn costs(&self) -> &[SharedCost] {
        &self.costs
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn consensus(&self) -> &ConsensusMatrix {
        &self.consensus
    }

    pub fn node_count(&self) -> usize {
        self.costs.len()
    }

    pub fn dim(&self) -> usize {
        self.costs[0].dim()
    }

    pub fn check_point(&self, x: &StackedPoint) -> Result<()> {
        check_dim("stacked point nodes", self.node_count(), x.node_count())?;
        check_dim("stacked point dim", self.dim(), x.dim())
    }

    /// `(1 - w_ii) x_i - sum_{j in O_i} w_ij x_j`, node `i`'s row of `(I - W) x`.
    pub fn mixing_residual(&self, i: usize, x: &StackedPoint) -> DVector<f64> {
        let w = &self.consensus;
        let mut out = x.block(i) * (1.0 - w.weight(i, i));
        for &j in w.topology().neighbors(i) {
            out.axpy(-w.weight(i, j), x.block(j), 1.0);
        }
        out
    }

    /// Node `i`'s gradient block, using only its own cost and its neighbors'
    /// blocks.
    pub fn local_gradient(&self, i: usize, x: &StackedPoint) -> DVector<f64> {
        let mut g = self.costs[i].gradient(x.block(i));
        g.axpy(1.0 / self.beta, &self.mixing_residual(i, x), 1.0);
        g
    }

    pub fn penalty_value(&self, x: &StackedPoint) -> Result<f64> {
        self.check_point(x)?;
        let f: f64 = (0..self.node_count()).map(|i| self.costs[i].value(x.block(i))).sum();
        let quad: f64 = (0..self.node_count()).map(|i| x.block(i).dot(&self.mixing_residual(i, x))).sum();
        Ok(f + quad / (2.0 * self.beta))
    }

    pub fn penalty_gradient(&self, x: &StackedPoint) -> Result<StackedPoint> {
        self.check_point(x)?;
        StackedPoint::from_blocks((0..self.node_count()).map(|i| self.local_gradient(i, x)).collect())
    }

    /// Dense `grad^2 F(x) + (1/beta)(I - W (x) I_n)`. Small instances only.
    pub fn dense_hessian(&self, x: &StackedPoint) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        let (nodes, n) = (self.node_count(), self.dim());
        let mut h = DMatrix::zeros(nodes * n, nodes * n);
        for i in 0..nodes {
            let hi = self.costs[i].hessian(x.block(i));
            h.view_mut((i * n, i * n), (n, n)).copy_from(&hi);
            for j in 0..nodes {
                let coef = if i == j { 1.0 - self.consensus.weight(i, i) } else { -self.consensus.weight(i, j) };
                for k in 0..n {
                    h[(i * n + k, j * n + k)] += coef / self.beta;
                }
            }
        }
        Ok(h)
    }
}
