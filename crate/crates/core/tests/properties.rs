use std::sync::Arc;

use dinas::baselines::{baseline_run, BaselineConfig, BaselineMethod};
use dinas::continuation::{sdinas_run, ContinuationSchedule, StageSolver};
use dinas::dinas::{acceptance_check, adaptive_step, dinas_run, dsf_max, forcing_term, Condition, DinasConfig, ForcingSchedule};
use dinas::linear_solvers::{assemble_block_hessian, inner_solve, iteration_matrix_inf_norm, jor_step, SolverConfig};
use dinas::network::{default_radius, metropolis_weights, random_geometric_graph, spectral_gap, Topology};
use dinas::objectives::{
    estimate_constants, generate_logistic_partition, generate_quadratic_family, reference_solution, PenaltyProblem, Quadratic,
    SampleBox, SharedCost, StackedPoint,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn rgg(nodes: usize, seed: u64) -> Topology {
    random_geometric_graph(nodes, default_radius(nodes), seed).unwrap()
}

fn stacked(nodes: usize, n: usize, values: &[f64]) -> StackedPoint {
    StackedPoint::from_blocks((0..nodes).map(|i| DVector::from_fn(n, |a, _| values[(i * n + a) % values.len()])).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn metropolis_weights_are_doubly_stochastic(nodes in 2usize..20, seed in 0u64..10_000) {
        let topo = rgg(nodes, seed);
        let w = metropolis_weights(&topo);
        let m = w.weights();
        for i in 0..nodes {
            prop_assert!((m.row(i).sum() - 1.0).abs() < 1e-12);
            for j in 0..nodes {
                prop_assert!((m[(i, j)] - m[(j, i)]).abs() < 1e-15);
                prop_assert!(m[(i, j)] >= 0.0);
                if i != j {
                    prop_assert_eq!(m[(i, j)] > 0.0, topo.has_edge(i, j));
                }
            }
        }
        prop_assert!(spectral_gap(&w).lambda2 < 1.0 - 1e-10);
    }

    #[test]
    fn topology_is_a_function_of_the_seed(nodes in 1usize..30, seed in 0u64..10_000) {
        let (a, b) = (rgg(nodes, seed), rgg(nodes, seed));
        prop_assert_eq!(a.edges(), b.edges());
    }

    #[test]
    fn flooding_finds_the_maximum_within_the_diameter(
        nodes in 1usize..25,
        seed in 0u64..10_000,
        values in prop::collection::vec(-1e6f64..1e6, 25),
    ) {
        let topo = rgg(nodes, seed);
        let vals = &values[..nodes];
        let out = dsf_max(vals, &topo);
        prop_assert_eq!(out.max, vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        prop_assert!(out.rounds <= topo.diameter());
    }

    #[test]
    fn forcing_terms_never_increase(
        eta in 0.001f64..0.99,
        delta in prop::sample::select(vec![0.0, 0.5, 1.0]),
        grads in prop::collection::vec(1e-8f64..1e3, 1..40),
    ) {
        let mut s = ForcingSchedule::new(eta, delta).unwrap();
        let mut prev = f64::INFINITY;
        for g in grads {
            let e = forcing_term(&mut s, g);
            prop_assert!(e > 0.0 && e <= eta);
            prop_assert!(e <= prev);
            prev = e;
        }
    }

    #[test]
    fn step_lengths_lie_in_unit_interval(eta in 0.0f64..0.99, gamma in 1e-6f64..1e3, g in 1e-12f64..1e6) {
        let a = adaptive_step(eta, gamma, g);
        prop_assert!(a > 0.0 && a <= 1.0);
    }

    #[test]
    fn acceptance_matches_its_two_conditions(
        alpha in 0.01f64..1.0,
        full in any::<bool>(),
        g in 1e-6f64..10.0,
        ratio in 0.0f64..2.0,
        eta in 0.0f64..0.99,
        gamma in 1e-3f64..10.0,
    ) {
        let alpha = if full { 1.0 } else { alpha };
        let new_g = ratio * g;
        let c = acceptance_check(alpha, new_g, g, eta, gamma);
        let cond1 = alpha < 1.0 && new_g <= g - 0.5 * gamma * (1.0 - eta).powi(2) / (1.0 + eta).powi(2);
        let cond2 = alpha == 1.0 && new_g <= eta * g + (1.0 + eta).powi(2) * g * g / (2.0 * gamma);
        match c {
            Condition::Cond1 => prop_assert!(cond1),
            Condition::Cond2 => prop_assert!(cond2),
            Condition::Rejected => prop_assert!(!cond1 && !cond2),
        }
    }

    #[test]
    fn penalty_dominates_sum_of_local_costs(
        seed in 0u64..1000,
        beta in 0.01f64..10.0,
        values in prop::collection::vec(-3.0f64..3.0, 12),
    ) {
        let costs = generate_quadratic_family(3, 4, 0.5, 2.0, seed).unwrap();
        let p = PenaltyProblem::new(costs.clone(), beta, metropolis_weights(&rgg(4, seed))).unwrap();
        let x = stacked(4, 3, &values);
        let sum: f64 = (0..4).map(|i| costs[i].value(x.block(i))).sum();
        prop_assert!(p.penalty_value(&x).unwrap() >= sum - 1e-12 * sum.abs().max(1.0));
        let y = StackedPoint::consensus(4, x.block(0));
        let sum_y: f64 = (0..4).map(|i| costs[i].value(y.block(i))).sum();
        prop_assert!((p.penalty_value(&y).unwrap() - sum_y).abs() <= 1e-12 * sum_y.abs().max(1.0));
    }

    #[test]
    fn inner_messages_match_round_structure(seed in 0u64..1000, nodes in 2usize..8, n in 1usize..5) {
        let costs = generate_quadratic_family(n, nodes, 1.0, 3.0, seed).unwrap();
        let topo = rgg(nodes, seed);
        let w = metropolis_weights(&topo);
        let p = PenaltyProblem::new(costs, 1.0, w.clone()).unwrap();
        let x = StackedPoint::zeros(nodes, n);
        let blocks = assemble_block_hessian(&p, &x).unwrap();
        let g = p.penalty_gradient(&x).unwrap();
        let edges: usize = (0..nodes).map(|i| topo.degree(i)).sum();
        for cfg in [SolverConfig::jor_default(8.0, 1.0, w.w_bar()), SolverConfig::damped_block()] {
            let (_, report) = inner_solve(&blocks, &g, 0.1, &cfg, StackedPoint::zeros(nodes, n)).unwrap();
            prop_assert_eq!(report.scalars_sent, (report.iterations * edges * n) as u64);
        }
    }

    #[test]
    fn jor_residual_never_grows_under_a_contraction(seed in 0u64..1000, ring in any::<bool>()) {
        let nodes = 5;
        let costs = generate_quadratic_family(4, nodes, 1.0, 2.0, seed).unwrap();
        let topo = if ring { Topology::ring(nodes).unwrap() } else { rgg(nodes, seed) };
        let w = metropolis_weights(&topo);
        let p = PenaltyProblem::new(costs, 1.0, w.clone()).unwrap();
        let x = StackedPoint::zeros(nodes, 4);
        let blocks = assemble_block_hessian(&p, &x).unwrap();
        let g = p.penalty_gradient(&x).unwrap();
        let omega = SolverConfig::jor_default(4.0, 1.0, w.w_bar()).omega;
        prop_assume!(iteration_matrix_inf_norm(&blocks, omega) < 1.0);
        let mut d = StackedPoint::zeros(nodes, 4);
        let mut res = blocks.residual(&d, &g).inf_norm();
        for _ in 0..200 {
            d = jor_step(&blocks, &d, &g, omega).unwrap();
            let next = blocks.residual(&d, &g).inf_norm();
            prop_assert!(next <= res * (1.0 + 1e-12) + 1e-15);
            res = next;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn dinas_runs_respect_step_invariants(
        seed in 0u64..500,
        eta in prop::sample::select(vec![0.5, 0.1, 0.01]),
        delta in prop::sample::select(vec![0.0, 1.0]),
        gamma0 in prop::sample::select(vec![1.0, 10.0, 100.0]),
    ) {
        let costs = generate_logistic_partition(6, 60, 4, seed).unwrap();
        let w = metropolis_weights(&rgg(4, seed));
        let y = reference_solution(&costs).unwrap();
        let c = estimate_constants(&costs, &SampleBox::around(&[&DVector::zeros(6), &y], 1.0), 16, seed);
        let p = PenaltyProblem::new(costs, 0.1, w).unwrap();
        let mut cfg = DinasConfig::new(ForcingSchedule::new(eta, delta).unwrap(), gamma0, SolverConfig::damped_block());
        cfg.max_outer = 5000;
        let run = dinas_run(&p, StackedPoint::zeros(4, 6), &cfg).unwrap();
        prop_assert!(run.converged);
        let mut g: Vec<f64> = run.records.iter().map(|r| r.grad_inf).collect();
        g.push(run.final_grad_inf);
        let mut full_seen = false;
        let mut prev_ledger = run.start_ledger;
        for (k, r) in run.records.iter().enumerate() {
            prop_assert!(r.alpha_k > 0.0 && r.alpha_k <= 1.0);
            prop_assert!(r.ledger.scalar_ops >= prev_ledger.scalar_ops && r.ledger.scalars_sent >= prev_ledger.scalars_sent);
            prev_ledger = r.ledger;
            if r.alpha_k == 1.0 {
                prop_assert!(g[k + 1] <= 0.5 * (1.0 + eta) * g[k]);
                full_seen = true;
            } else {
                // Once a full step is taken the iteration stays in the full-step regime.
                prop_assert!(!full_seen, "damped step at k={} after a full step", k);
                let decrease = 0.5 * r.gamma_k * (1.0 - r.eta_k).powi(2) / (1.0 + r.eta_k).powi(2);
                prop_assert!(g[k + 1] <= g[k] - decrease);
            }
        }
        let floor = cfg.q * c.polyak_gamma().unwrap();
        prop_assert!(run.min_gamma() >= floor.min(gamma0) - 1e-12);
    }

    #[test]
    fn baselines_charge_a_fixed_message_count_per_round(seed in 0u64..500, nodes in 2usize..7) {
        let costs = generate_quadratic_family(3, nodes, 0.5, 2.0, seed).unwrap();
        let topo = rgg(nodes, seed);
        let w = metropolis_weights(&topo);
        let edges: u64 = (0..nodes).map(|i| topo.degree(i) as u64).sum();
        for method in [BaselineMethod::Dg, BaselineMethod::Extra, BaselineMethod::Diging] {
            let mut cfg = BaselineConfig::from_constants(method, 4.0);
            cfg.max_iters = 30;
            cfg.tol_inf = 0.0;
            let out = baseline_run(&costs, &w, StackedPoint::zeros(nodes, 3), &cfg, None).unwrap();
            let per_round = edges * 3 * if method == BaselineMethod::Diging { 2 } else { 1 };
            for pair in out.records.windows(2) {
                prop_assert_eq!(pair[1].ledger.scalars_sent - pair[0].ledger.scalars_sent, per_round);
            }
        }
    }

    #[test]
    fn identical_costs_keep_baselines_at_consensus(seed in 0u64..500, start in prop::collection::vec(-2.0f64..2.0, 3)) {
        let nodes = 5;
        let a = DMatrix::from_fn(3, 3, |i, j| if i == j { 2.0 } else { 0.3 });
        let b = DVector::from_fn(3, |i, _| i as f64 * 0.5);
        let cost: SharedCost = Arc::new(Quadratic::new(a, b).unwrap());
        let costs = vec![cost; nodes];
        let w = metropolis_weights(&rgg(nodes, seed));
        let x0 = StackedPoint::consensus(nodes, &DVector::from_column_slice(&start));
        for method in [BaselineMethod::Dg, BaselineMethod::Extra, BaselineMethod::Diging] {
            let mut cfg = BaselineConfig::from_constants(method, 4.0);
            cfg.max_iters = 25;
            cfg.tol_inf = 0.0;
            let out = baseline_run(&costs, &w, x0.clone(), &cfg, None).unwrap();
            let x = &out.final_point;
            for i in 1..nodes {
                let gap = (x.block(i) - x.block(0)).amax();
                prop_assert!(gap <= 1e-10, "{:?} gap {:e} scale {:e}", method, gap, x.block(0).amax());
            }
        }
    }

    #[test]
    fn continuation_stages_meet_their_tolerances(seed in 0u64..200) {
        let costs = generate_quadratic_family(4, 4, 0.5, 4.0, seed).unwrap();
        let w = metropolis_weights(&rgg(4, seed));
        let y = reference_solution(&costs).unwrap();
        let schedule = ContinuationSchedule { max_stages: 4, ..ContinuationSchedule::coupled(0.1, 0.1) };
        let mut cfg = DinasConfig::new(ForcingSchedule::new(0.5, 0.0).unwrap(), 1.0, SolverConfig::damped_block());
        cfg.max_outer = 5000;
        let out = sdinas_run(&costs, &w, StackedPoint::zeros(4, 4), &schedule, &cfg, StageSolver::Fixed, None).unwrap();
        let mut prev = f64::INFINITY;
        for (stage, run) in out.stages.iter().zip(&out.runs) {
            let p = PenaltyProblem::new(costs.clone(), stage.beta, w.clone()).unwrap();
            let g = p.penalty_gradient(&run.final_point).unwrap().inf_norm();
            prop_assert!(g <= stage.eps, "stage {} gradient {} > {}", stage.stage, g, stage.eps);
            let dist = run.final_point.blocks().iter().map(|b| (b - &y).norm()).fold(0.0, f64::max);
            prop_assert!(dist <= prev * (1.0 + 1e-9));
            prev = dist;
        }
    }
}
