//! JOR, the damped block iteration and the dense direct solve on one
//! Newton system.

use dinas::linear_solvers::{
    assemble_block_hessian, inner_iteration_bound, inner_solve, iteration_matrix_inf_norm, SolverConfig,
};
use dinas::network::{metropolis_weights, Topology};
use dinas::objectives::{generate_quadratic_family, PenaltyProblem, StackedPoint};

fn main() -> dinas::Result<()> {
    let (nodes, n, beta) = (6, 5, 1.0);
    let costs = generate_quadratic_family(n, nodes, 1.0, 2.0, 4)?;
    let w = metropolis_weights(&Topology::ring(nodes)?);
    let p = PenaltyProblem::new(costs, beta, w.clone())?;
    let x = StackedPoint::zeros(nodes, n);
    let blocks = assemble_block_hessian(&p, &x)?;
    let g = p.penalty_gradient(&x)?;

    let (exact, _) = inner_solve(&blocks, &g, 0.0, &SolverConfig::dense_oracle(), StackedPoint::zeros(nodes, n))?;
    let jor = SolverConfig::jor_default(4.0, beta, w.w_bar());
    let m = iteration_matrix_inf_norm(&blocks, jor.omega);
    println!("omega = {:.4}, |M(omega)|_inf = {m:.4}", jor.omega);

    println!("{:>8} {:>14} {:>8} {:>8} {:>12} {:>10}", "eta", "solver", "rounds", "bound", "sent", "|d - d*|");
    for eta in [0.5, 0.1, 1e-3, 1e-6] {
        for (name, cfg) in [("jor", jor), ("damped_block", SolverConfig::damped_block())] {
            let (d, report) = inner_solve(&blocks, &g, eta, &cfg, StackedPoint::zeros(nodes, n))?;
            let bound = if name == "jor" { inner_iteration_bound(eta, m).map(|b| b.to_string()).unwrap_or("-".into()) } else { "-".into() };
            let err = d.sub(&exact).inf_norm();
            println!("{eta:>8.0e} {name:>14} {:>8} {bound:>8} {:>12} {err:>10.2e}", report.iterations, report.scalars_sent);
        }
    }
    Ok(())
}
