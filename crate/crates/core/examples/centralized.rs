//! Centralized inexact Newton with the adaptive and the fixed step, using a
//! direct and an iterative Newton solver.

use std::sync::Arc;

use dinas::centralized::{dinasc_run, CentralizedConfig, DenseCholesky, NewtonSolver, StationarySolver, StepPolicy};
use dinas::dinas::ForcingSchedule;
use dinas::objectives::{estimate_constants, generate_logistic_partition, reference_solution, SampleBox, SharedCost, SumCost};
use nalgebra::DVector;

fn main() -> dinas::Result<()> {
    let seed = 3;
    let parts = generate_logistic_partition(20, 200, 5, seed)?;
    let y = reference_solution(&parts)?;
    let f: SharedCost = Arc::new(SumCost::new(parts)?);
    let zero = DVector::zeros(20);
    let c = estimate_constants(&[f.clone()], &SampleBox::around(&[&zero, &y], 1.0), 32, seed);
    println!("mu = {:.3}, L = {:.3}", c.mu, c.lip_hess);

    let stationary = StationarySolver { max_iters: 100_000 };
    let solvers: [(&str, &dyn NewtonSolver); 2] = [("dense", &DenseCholesky), ("stationary", &stationary)];
    for (label, solver) in solvers {
        for (step_name, step) in [("adaptive", StepPolicy::Adaptive), ("fixed", StepPolicy::FixedPolyak { constants: c })] {
            let mut cfg = CentralizedConfig::new(ForcingSchedule::new(0.1, 0.0)?, 1.0);
            cfg.step = step;
            cfg.max_outer = 10_000;
            let run = dinasc_run(f.as_ref(), zero.clone(), &cfg, solver)?;
            let err = (run.final_point.block(0) - &y).amax();
            println!(
                "{label:>10} {step_name:>8}: {:>4} iterations, {} rejections, |y - y*|_inf = {err:.2e}, ops = {}",
                run.iterations(),
                run.total_rejections(),
                run.ledger.scalar_ops
            );
        }
    }
    Ok(())
}
