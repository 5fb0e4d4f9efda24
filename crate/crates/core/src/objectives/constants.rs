use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use super::{LocalCost, ProblemConstants, SharedCost, SumCost};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Gradient inf-norm reached by [`reference_solution`].
pub const REFERENCE_TOLERANCE: f64 = 1e-10;
const REFERENCE_MAX_ITERS: usize = 500;

/// Axis-aligned sampling region.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBox {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl SampleBox {
    /// Bounding box of `points`, widened by `margin` on every side.
    pub fn around(points: &[&DVector<f64>], margin: f64) -> Self {
        let n = points[0].len();
        let lower = DVector::from_fn(n, |k, _| points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min) - margin);
        let upper = DVector::from_fn(n, |k, _| points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max) + margin);
        Self { lower, upper }
    }

    fn sample(&self, rng: &mut impl Rng) -> DVector<f64> {
        DVector::from_fn(self.lower.len(), |k, _| {
            let (lo, hi) = (self.lower[k], self.upper[k]);
            if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        })
    }

    fn width(&self) -> f64 {
        (&self.upper - &self.lower).amax()
    }
}

fn matrix_inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Empirical `mu`, `M`, `L` over `n_samples` points of `sample_box`.
///
/// `mu` and `M` are the extreme Hessian eigenvalues seen at any sample and
/// node. `L` is the largest ratio `|H(y) - H(z)|_inf / |y - z|_inf` over
/// consecutive sample pairs and over short perturbations of each sample;
/// costs with constant Hessians give exactly 0.
pub fn estimate_constants(
    costs: &[SharedCost],
    sample_box: &SampleBox,
    n_samples: usize,
    rng_seed: u64,
) -> ProblemConstants {
    assert!(n_samples >= 1, "n_samples must be >= 1");
    let mut rng = stream_rng(rng_seed, Stream::Constants);
    let samples: Vec<DVector<f64>> = (0..n_samples).map(|_| sample_box.sample(&mut rng)).collect();
    let step = 1e-3 * sample_box.width().max(1.0);
    let perturbed: Vec<DVector<f64>> = samples
        .iter()
        .map(|y| {
            let dir = DVector::from_fn(y.len(), |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
            y + dir * step
        })
        .collect();

    let (mut mu, mut big_m, mut lip) = (f64::INFINITY, 0.0f64, 0.0f64);
    for cost in costs {
        let hessians: Vec<DMatrix<f64>> = samples.iter().map(|y| cost.hessian(y)).collect();
        for h in &hessians {
            let eig = SymmetricEigen::new(h.clone()).eigenvalues;
            mu = mu.min(eig.min());
            big_m = big_m.max(eig.max());
        }
        let mut ratio = |hy: &DMatrix<f64>, hz: &DMatrix<f64>, y: &DVector<f64>, z: &DVector<f64>| {
            let dist = (y - z).amax();
            if dist > 0.0 {
                lip = lip.max(matrix_inf_norm(&(hy - hz)) / dist);
            }
        };
        for s in 0..n_samples {
            let hp = cost.hessian(&perturbed[s]);
            ratio(&hessians[s], &hp, &samples[s], &perturbed[s]);
            if s + 1 < n_samples {
                ratio(&hessians[s], &hessians[s + 1], &samples[s], &samples[s + 1]);
            }
        }
    }
    ProblemConstants { mu, big_m, lip_hess: lip }
}

/// Minimizer of `sum_i f_i`.
///
/// Quadratic families are solved directly from `2 (sum A_i) y = -sum b_i`;
/// anything else runs a damped Newton method on the summed cost until the
/// gradient inf-norm is at most [`REFERENCE_TOLERANCE`].
pub fn reference_solution(costs: &[SharedCost]) -> Result<DVector<f64>> {
    let quads: Option<Vec<_>> = costs.iter().map(|c| c.as_quadratic()).collect();
    if let Some(quads) = quads {
        let n = quads[0].dim();
        let mut a = DMatrix::zeros(n, n);
        let mut b = DVector::zeros(n);
        for q in quads {
            a += q.a();
            b += q.b();
        }
        let chol = (a * 2.0)
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("sum of quadratic Hessians".into()))?;
        return Ok(chol.solve(&(-b)));
    }

    let f = SumCost::new(costs.to_vec())?;
    let mut y = DVector::zeros(f.dim());
    let mut value = f.value(&y);
    for _ in 0..REFERENCE_MAX_ITERS {
        let g = f.gradient(&y);
        if g.amax() <= REFERENCE_TOLERANCE {
            return Ok(y);
        }
        let d = f
            .hessian(&y)
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("summed Hessian in reference oracle".into()))?
            .solve(&g);
        // Near the minimizer function values stop resolving the decrease, so
        // a full step that halves the gradient is taken without line search.
        let full = &y - &d;
        if f.gradient(&full).amax() <= 0.5 * g.amax() {
            value = f.value(&full);
            y = full;
            continue;
        }
        let slope = g.dot(&d);
        let mut t = 1.0;
        loop {
            let trial = &y - &d * t;
            let tv = f.value(&trial);
            if tv <= value - 1e-4 * t * slope {
                y = trial;
                value = tv;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                // Function values no longer resolve the decrease; a full
                // Newton step is safe this close to the minimizer.
                y -= &d;
                value = f.value(&y);
                break;
            }
        }
    }
    let grad_norm = f.gradient(&y).amax();
    if grad_norm <= REFERENCE_TOLERANCE {
        Ok(y)
    } else {
        Err(Error::OracleIterationCap { iterations: REFERENCE_MAX_ITERS, grad_norm })
    }
}
