//! Total cost to e_k <= 1e-4 for continuation DINAS and the first-order
//! baselines, as lambda_max grows.
//!
//! Run with `cargo run --release --example cost_comparison -- [r]`.

use dinas::baselines::{baseline_run, BaselineConfig, BaselineMethod};
use dinas::continuation::{sdinas_run, ConsensusTarget, ContinuationSchedule, StageSolver};
use dinas::dinas::{DinasConfig, ForcingSchedule};
use dinas::linear_solvers::SolverConfig;
use dinas::network::{default_radius, metropolis_weights, random_geometric_graph};
use dinas::objectives::{estimate_constants, generate_quadratic_family, reference_solution, SampleBox, StackedPoint};
use nalgebra::DVector;

fn main() -> dinas::Result<()> {
    let r: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.1);
    let (n, nodes, seed) = (10, 10, 1);
    let w = metropolis_weights(&random_geometric_graph(nodes, default_radius(nodes), seed)?);
    println!("r = {r}");
    println!("{:>10} {:>12} {:>12} {:>12} {:>12}", "lambda_max", "dinas", "diging", "extra", "dg");
    for lambda_max in [1.0, 10.0, 100.0] {
        let costs = generate_quadratic_family(n, nodes, 0.1, lambda_max, seed)?;
        let y = reference_solution(&costs)?;
        let c = estimate_constants(&costs, &SampleBox::around(&[&DVector::zeros(n), &y], 1.0), 8, seed);
        let target = ConsensusTarget { y_star: y, target: 1e-4 };

        let mut cfg = DinasConfig::new(ForcingSchedule::new(0.9, 0.0)?, 1.0, SolverConfig::damped_block());
        cfg.max_outer = 5000;
        let staged = sdinas_run(
            &costs,
            &w,
            StackedPoint::zeros(nodes, n),
            &ContinuationSchedule::coupled(0.1, 0.1),
            &cfg,
            StageSolver::Fixed,
            Some(&target),
        )?;
        let mut row = vec![if staged.reached_target { format!("{:.3e}", staged.ledger.total_cost(r)) } else { "-".into() }];
        for method in [BaselineMethod::Diging, BaselineMethod::Extra, BaselineMethod::Dg] {
            let mut bcfg = BaselineConfig::from_constants(method, c.big_m);
            bcfg.max_iters = 100_000;
            let out = baseline_run(&costs, &w, StackedPoint::zeros(nodes, n), &bcfg, Some(&target))?;
            row.push(if out.reached_target { format!("{:.3e}", out.ledger.total_cost(r)) } else { "-".into() });
        }
        println!("{lambda_max:>10} {:>12} {:>12} {:>12} {:>12}", row[0], row[1], row[2], row[3]);
    }
    println!("'-' marks a method that did not reach the target.");
    Ok(())
}
