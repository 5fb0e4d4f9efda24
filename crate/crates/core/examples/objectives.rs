//! Local costs, their constants and the penalty reformulation.

use dinas::network::{default_radius, metropolis_weights, random_geometric_graph};
use dinas::objectives::{
    estimate_constants, generate_logistic_partition, generate_quadratic_family, reference_solution, PenaltyProblem, SampleBox,
    StackedPoint,
};
use nalgebra::DVector;

fn main() -> dinas::Result<()> {
    let seed = 2;
    let logistic = generate_logistic_partition(20, 200, 5, seed)?;
    let y = reference_solution(&logistic)?;
    let zero = DVector::zeros(20);
    let c = estimate_constants(&logistic, &SampleBox::around(&[&zero, &y], 1.0), 32, seed);
    println!("logistic: mu = {:.3}, M = {:.3}, L = {:.3}, mu^2/L = {:.4}", c.mu, c.big_m, c.lip_hess, c.polyak_gamma().unwrap());
    println!("  |y*|_inf = {:.4}", y.amax());

    let quad = generate_quadratic_family(10, 5, 0.1, 10.0, seed)?;
    let yq = reference_solution(&quad)?;
    let cq = estimate_constants(&quad, &SampleBox::around(&[&DVector::zeros(10), &yq], 1.0), 8, seed);
    println!("quadratic: mu = {:.3}, M = {:.3}, L = {}", cq.mu, cq.big_m, cq.lip_hess);

    let w = metropolis_weights(&random_geometric_graph(5, default_radius(5), seed)?);
    let at_opt = StackedPoint::consensus(5, &y);
    for beta in [1.0, 0.1, 0.01] {
        let p = PenaltyProblem::new(logistic.clone(), beta, w.clone())?;
        let g = p.penalty_gradient(&at_opt)?;
        println!("beta = {beta:<5} penalty gradient at (y*, ..., y*): {:.3e}", g.inf_norm());
    }
    Ok(())
}
