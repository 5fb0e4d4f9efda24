use nalgebra::{DMatrix, DVector};

use super::{check_dim, LocalCost};
use crate::error::{Error, Result};

/// `ln(1 + exp(-t))` without overflow.
fn softplus_neg(t: f64) -> f64 {
    if t >= 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

/// `1 / (1 + exp(-t))` without overflow.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// L2-regularized logistic loss
/// `sum_j ln(1 + exp(-b_j a_j'y)) + (rho/2) |y|^2`.
#[derive(Clone, Debug)]
pub struct Logistic {
    points: DMatrix<f64>,
    labels: DVector<f64>,
    rho: f64,
}

impl Logistic {
    /// `points` is `m x n` (one row per sample), `labels` entries are `+-1`.
    pub fn new(points: DMatrix<f64>, labels: DVector<f64>, rho: f64) -> Result<Self> {
        check_dim("Logistic labels", points.nrows(), labels.len())?;
        if let Some(b) = labels.iter().find(|&&b| b != 1.0 && b != -1.0) {
            return Err(Error::InvalidParameter(format!("label {b} is not +-1")));
        }
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter(format!("rho must be > 0, got {rho}")));
        }
        Ok(Self { points, labels, rho })
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.labels
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    fn margins(&self, y: &DVector<f64>) -> DVector<f64> {
        (&self.points * y).component_mul(&self.labels)
    }
}

impl LocalCost for Logistic {
    fn dim(&self) -> usize {
        self.points.ncols()
    }

    fn value(&self, y: &DVector<f64>) -> f64 {
        let loss: f64 = self.margins(y).iter().map(|&t| softplus_neg(t)).sum();
        loss + 0.5 * self.rho * y.norm_squared()
    }

    fn gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        // d/dy ln(1+exp(-t)) = -sigmoid(-t) b a
        let weights = self.margins(y).zip_map(&self.labels, |t, b| -b * sigmoid(-t));
        self.points.tr_mul(&weights) + y * self.rho
    }

    fn hessian(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut h = DMatrix::identity(n, n) * self.rho;
        for (j, t) in self.margins(y).iter().enumerate() {
            let s = sigmoid(*t);
            let c = s * (1.0 - s);
            let a = self.points.row(j).transpose();
            h.ger(c, &a, &a, 1.0);
        }
        h
    }

    fn gradient_ops(&self) -> u64 {
        let (m, n) = (self.points.nrows() as u64, self.dim() as u64);
        2 * m * n + 3 * m + n
    }

    fn hessian_ops(&self) -> u64 {
        let (m, n) = (self.points.nrows() as u64, self.dim() as u64);
        m * n + 3 * m + m * n * n + n
    }
}
