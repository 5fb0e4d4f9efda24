use nalgebra::{DMatrix, DVector};

use super::{check_dim, LocalCost};
use crate::error::{Error, Result};

/// `f(y) = y'Ay + y'b` with `A` symmetric positive definite.
///
/// There is no `1/2` in front of the quadratic term, so the Hessian is `2A`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    a: DMatrix<f64>,
    b: DVector<f64>,
    hessian: DMatrix<f64>,
}

impl Quadratic {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch { context: "Quadratic A", expected: a.nrows(), found: a.ncols() });
        }
        check_dim("Quadratic b", a.nrows(), b.len())?;
        let asym = (&a - a.transpose()).amax();
        if asym > 1e-12 * a.amax().max(1.0) {
            return Err(Error::NonSymmetric(asym));
        }
        if a.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("quadratic A".into()));
        }
        let hessian = &a * 2.0;
        Ok(Self { a, b, hessian })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }
}

impl LocalCost for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, y: &DVector<f64>) -> f64 {
        y.dot(&(&self.a * y)) + y.dot(&self.b)
    }

    fn gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.hessian * y + &self.b
    }

    fn hessian(&self, _y: &DVector<f64>) -> DMatrix<f64> {
        self.hessian.clone()
    }

    fn gradient_ops(&self) -> u64 {
        let n = self.dim() as u64;
        n * n + n
    }

    fn hessian_ops(&self) -> u64 {
        0
    }

    fn as_quadratic(&self) -> Option<&Quadratic> {
        Some(self)
    }
}
