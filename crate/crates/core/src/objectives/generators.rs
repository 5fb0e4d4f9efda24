use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{partition_logistic, LabeledData, Quadratic, SharedCost};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Random orthogonal matrix: QR of a Gaussian matrix with the signs of
/// `diag(R)` folded into `Q`.
fn random_orthogonal(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Quadratics `y'A_i y + y'b_i` with `A_i = P_i D_i P_i'`, `D_i` uniform in
/// `[lambda_min, lambda_max]`, `P_i` random orthogonal and `b_i` uniform in
/// `[0, 1]`.
pub fn generate_quadratic_family(
    n: usize,
    n_nodes: usize,
    lambda_min: f64,
    lambda_max: f64,
    rng_seed: u64,
) -> Result<Vec<SharedCost>> {
    if !(lambda_min > 0.0 && lambda_min <= lambda_max) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < lambda_min <= lambda_max, got [{lambda_min}, {lambda_max}]"
        )));
    }
    let mut rng = stream_rng(rng_seed, Stream::Problem);
    (0..n_nodes)
        .map(|_| {
            let diag = DVector::from_fn(n, |_, _| rng.random_range(lambda_min..=lambda_max));
            let p = random_orthogonal(n, &mut rng);
            let b = DVector::from_fn(n, |_, _| rng.random::<f64>());
            let a = if lambda_min == lambda_max {
                DMatrix::identity(n, n) * lambda_min
            } else {
                let a = &p * DMatrix::from_diagonal(&diag) * p.transpose();
                (&a + a.transpose()) * 0.5
            };
            Ok(Arc::new(Quadratic::new(a, b)?) as SharedCost)
        })
        .collect()
}

/// Synthetic logistic data: features uniform in `(0, 1)`, labels `+-1` with
/// equal probability, node `i` holding the `i`-th contiguous block of
/// `m / n_nodes` samples and `rho = 0.01 m`.
pub fn generate_logistic_partition(n: usize, m: usize, n_nodes: usize, rng_seed: u64) -> Result<Vec<SharedCost>> {
    let data = synthetic_logistic_data(n, m, rng_seed);
    partition_logistic(&data, n_nodes, 0.01 * m as f64)
}

pub(crate) fn synthetic_logistic_data(n: usize, m: usize, rng_seed: u64) -> LabeledData {
    let mut rng = stream_rng(rng_seed, Stream::Dataset);
    let mut points = DMatrix::zeros(m, n);
    let mut labels = DVector::zeros(m);
    for j in 0..m {
        for k in 0..n {
            points[(j, k)] = rng.random::<f64>();
        }
        labels[j] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    LabeledData { points, labels }
}
