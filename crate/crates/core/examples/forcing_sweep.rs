//! Iterations and total cost for delta in {0, 1} and eta in {0.9, 0.1, 0.001}.

use dinas::dinas::{dinas_run, DinasConfig, ForcingSchedule};
use dinas::linear_solvers::SolverConfig;
use dinas::network::{default_radius, metropolis_weights, random_geometric_graph};
use dinas::objectives::{estimate_constants, generate_logistic_partition, reference_solution, PenaltyProblem, SampleBox, StackedPoint};
use nalgebra::DVector;

fn main() -> dinas::Result<()> {
    let (n, nodes, beta, seed) = (20, 5, 0.1, 1);
    let costs = generate_logistic_partition(n, 200, nodes, seed)?;
    let w = metropolis_weights(&random_geometric_graph(nodes, default_radius(nodes), seed)?);
    let y = reference_solution(&costs)?;
    let c = estimate_constants(&costs, &SampleBox::around(&[&DVector::zeros(n), &y], 1.0), 32, seed);
    let problem = PenaltyProblem::new(costs, beta, w.clone())?;

    println!("{:>5} {:>6} {:>6} {:>12} {:>12} {:>12}", "delta", "eta", "iters", "cost r=0.1", "cost r=1", "cost r=10");
    for delta in [0.0, 1.0] {
        for eta in [0.9, 0.1, 0.001] {
            let mut cfg = DinasConfig::new(ForcingSchedule::new(eta, delta)?, 1.0, SolverConfig::jor_default(c.big_m, beta, w.w_bar()));
            cfg.max_outer = 5000;
            let run = dinas_run(&problem, StackedPoint::zeros(nodes, n), &cfg)?;
            let l = run.ledger;
            println!(
                "{delta:>5} {eta:>6} {:>6} {:>12.3e} {:>12.3e} {:>12.3e}",
                run.iterations(),
                l.total_cost(0.1),
                l.total_cost(1.0),
                l.total_cost(10.0)
            );
        }
    }
    Ok(())
}
