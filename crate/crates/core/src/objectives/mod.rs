//! Local costs, problem generators and the penalty objective.

mod constants;
mod dataset;
mod generators;
mod logistic;
mod penalty;
mod quadratic;

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use constants::{estimate_constants, reference_solution, SampleBox, REFERENCE_TOLERANCE};
pub use dataset::{load_logistic_csv, partition_logistic, LabeledData};
pub use generators::{generate_logistic_partition, generate_quadratic_family};
pub use logistic::Logistic;
pub use penalty::PenaltyProblem;
pub use quadratic::Quadratic;

/// A twice differentiable, strongly convex local cost `f_i : R^n -> R`.
pub trait LocalCost: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// Scalar operations charged for one gradient evaluation.
    fn gradient_ops(&self) -> u64;
    /// Scalar operations charged for one Hessian evaluation.
    fn hessian_ops(&self) -> u64;

    /// `Some` when the cost is the quadratic `x'Ax + x'b`.
    fn as_quadratic(&self) -> Option<&Quadratic> {
        None
    }
}

pub type SharedCost = Arc<dyn LocalCost>;

/// Regularity constants: `mu I <= hess f_i <= M I` and inf-norm Hessian
/// Lipschitz constant `L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub mu: f64,
    pub big_m: f64,
    pub lip_hess: f64,
}

impl ProblemConstants {
    /// `mu^2 / L`, or `None` when `L = 0`.
    pub fn polyak_gamma(&self) -> Option<f64> {
        (self.lip_hess > 0.0).then(|| self.mu * self.mu / self.lip_hess)
    }
}

/// The sum `f = sum_i f_i` as a single cost.
#[derive(Debug, Clone)]
pub struct SumCost {
    parts: Vec<SharedCost>,
}

impl SumCost {
    pub fn new(parts: Vec<SharedCost>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidParameter("sum of zero costs".into()))?
            .dim();
        if let Some(bad) = parts.iter().find(|c| c.dim() != first) {
            return Err(Error::DimensionMismatch { context: "SumCost", expected: first, found: bad.dim() });
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[SharedCost] {
        &self.parts
    }
}

impl LocalCost for SumCost {
    fn dim(&self) -> usize {
        self.parts[0].dim()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.parts.iter().map(|c| c.value(x)).sum()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = self.parts[0].gradient(x);
        for c in &self.parts[1..] {
            g += c.gradient(x);
        }
        g
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut h = self.parts[0].hessian(x);
        for c in &self.parts[1..] {
            h += c.hessian(x);
        }
        h
    }
    fn gradient_ops(&self) -> u64 {
        self.parts.iter().map(|c| c.gradient_ops() + self.dim() as u64).sum()
    }
    fn hessian_ops(&self) -> u64 {
        let n = self.dim() as u64;
        self.parts.iter().map(|c| c.hessian_ops() + n * n).sum()
    }
}

/// Per-node blocks `x_1, ..., x_N`, each in `R^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedPoint {
    blocks: Vec<DVector<f64>>,
}

impl StackedPoint {
    pub fn zeros(nodes: usize, dim: usize) -> Self {
        Self { blocks: vec![DVector::zeros(dim); nodes] }
    }

    /// Every node holds `y`.
    pub fn consensus(nodes: usize, y: &DVector<f64>) -> Self {
        Self { blocks: vec![y.clone(); nodes] }
    }

    pub fn from_blocks(blocks: Vec<DVector<f64>>) -> Result<Self> {
        let dim = blocks
            .first()
            .ok_or_else(|| Error::InvalidParameter("stacked point needs at least one block".into()))?
            .len();
        if let Some(b) = blocks.iter().find(|b| b.len() != dim) {
            return Err(Error::DimensionMismatch { context: "StackedPoint", expected: dim, found: b.len() });
        }
        Ok(Self { blocks })
    }

    pub fn from_flat(flat: &DVector<f64>, nodes: usize) -> Result<Self> {
        if nodes == 0 || flat.len() % nodes != 0 {
            return Err(Error::DimensionMismatch { context: "StackedPoint::from_flat", expected: nodes, found: flat.len() });
        }
        let dim = flat.len() / nodes;
        Ok(Self {
            blocks: (0..nodes).map(|i| flat.rows(i * dim, dim).into_owned()).collect(),
        })
    }

    pub fn to_flat(&self) -> DVector<f64> {
        DVector::from_iterator(self.len_flat(), self.blocks.iter().flat_map(|b| b.iter().copied()))
    }

    pub fn node_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.blocks[0].len()
    }

    pub fn len_flat(&self) -> usize {
        self.node_count() * self.dim()
    }

    pub fn blocks(&self) -> &[DVector<f64>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &DVector<f64> {
        &self.blocks[i]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut DVector<f64> {
        &mut self.blocks[i]
    }

    /// Per-node block inf-norms.
    pub fn block_inf_norms(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.amax()).collect()
    }

    /// Max over nodes of the block inf-norms.
    pub fn inf_norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.amax()).fold(0.0, f64::max)
    }

    /// `self - alpha * other`.
    pub fn minus_scaled(&self, alpha: f64, other: &StackedPoint) -> StackedPoint {
        StackedPoint {
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b * alpha).collect(),
        }
    }

    pub fn sub(&self, other: &StackedPoint) -> StackedPoint {
        self.minus_scaled(1.0, other)
    }

    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim());
        for b in &self.blocks {
            m += b;
        }
        m / self.node_count() as f64
    }
}

fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { context, expected, found })
    }
}
