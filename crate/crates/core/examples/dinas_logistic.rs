//! DINAS on a distributed logistic regression, printing the iteration trace.

use dinas::dinas::{dinas_run, DinasConfig, ForcingSchedule};
use dinas::linear_solvers::SolverConfig;
use dinas::network::{default_radius, metropolis_weights, random_geometric_graph};
use dinas::objectives::{estimate_constants, generate_logistic_partition, reference_solution, PenaltyProblem, SampleBox, StackedPoint};
use nalgebra::DVector;

fn main() -> dinas::Result<()> {
    let (n, m, nodes, beta, seed) = (20, 200, 5, 0.1, 1);
    let costs = generate_logistic_partition(n, m, nodes, seed)?;
    let w = metropolis_weights(&random_geometric_graph(nodes, default_radius(nodes), seed)?);
    let y = reference_solution(&costs)?;
    let c = estimate_constants(&costs, &SampleBox::around(&[&DVector::zeros(n), &y], 1.0), 32, seed);

    let solver = SolverConfig::jor_default(c.big_m, beta, w.w_bar());
    let cfg = DinasConfig::new(ForcingSchedule::new(0.1, 1.0)?, 1.0, solver);
    let problem = PenaltyProblem::new(costs, beta, w)?;
    let run = dinas_run(&problem, StackedPoint::zeros(nodes, n), &cfg)?;

    println!("{:>3} {:>11} {:>9} {:>8} {:>6} {:>6} {:>9}", "k", "|g|_inf", "eta_k", "alpha", "inner", "cond", "cost(r=1)");
    for r in &run.records {
        println!(
            "{:>3} {:>11.4e} {:>9.2e} {:>8.4} {:>6} {:>6} {:>9.3e}",
            r.k,
            r.grad_inf,
            r.eta_k,
            r.alpha_k,
            r.inner_iterations,
            r.condition.label(),
            r.ledger.total_cost(1.0)
        );
    }
    println!("final |g|_inf = {:.3e} after {} iterations, {} step reductions", run.final_grad_inf, run.iterations(), run.total_rejections());
    run.write_csv(std::io::stdout().lock())?;
    Ok(())
}
