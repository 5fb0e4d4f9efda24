//! Penalty continuation: shrink beta until the nodes agree on the minimizer
//! of the summed cost.

use dinas::continuation::{sdinas_run, ConsensusTarget, ContinuationSchedule, StageSolver};
use dinas::dinas::{DinasConfig, ForcingSchedule};
use dinas::linear_solvers::SolverConfig;
use dinas::network::{default_radius, metropolis_weights, random_geometric_graph};
use dinas::objectives::{generate_quadratic_family, reference_solution, StackedPoint};

fn main() -> dinas::Result<()> {
    let (n, nodes, seed) = (10, 5, 1);
    let costs = generate_quadratic_family(n, nodes, 0.1, 10.0, seed)?;
    let w = metropolis_weights(&random_geometric_graph(nodes, default_radius(nodes), seed)?);
    let y = reference_solution(&costs)?;

    let mut cfg = DinasConfig::new(ForcingSchedule::new(0.9, 0.0)?, 1.0, SolverConfig::damped_block());
    cfg.max_outer = 5000;
    let target = ConsensusTarget { y_star: y, target: 1e-4 };
    let out = sdinas_run(
        &costs,
        &w,
        StackedPoint::zeros(nodes, n),
        &ContinuationSchedule::coupled(0.1, 0.1),
        &cfg,
        StageSolver::Fixed,
        Some(&target),
    )?;

    println!("{:>5} {:>8} {:>8} {:>6} {:>11} {:>11} {:>11}", "stage", "beta", "eps", "iters", "|g|_inf", "e_k", "max dist");
    for s in &out.stages {
        println!(
            "{:>5} {:>8.0e} {:>8.0e} {:>6} {:>11.3e} {:>11.3e} {:>11.3e}",
            s.stage,
            s.beta,
            s.eps,
            s.outer_iters,
            s.final_grad_inf,
            s.consensus_error.unwrap_or(f64::NAN),
            s.max_distance.unwrap_or(f64::NAN)
        );
    }
    println!("target reached: {}, total cost (r = 0.1) {:.3e}", out.reached_target, out.ledger.total_cost(0.1));
    Ok(())
}
