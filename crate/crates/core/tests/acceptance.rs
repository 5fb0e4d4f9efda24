//! Acceptance gate: runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use dinas::baselines::{baseline_run, BaselineConfig, BaselineMethod};
use dinas::centralized::{dinasc_run, CentralizedConfig, DenseCholesky, StepPolicy};
use dinas::continuation::{max_distance, sdinas_run, log_log_slope, ConsensusTarget, ContinuationSchedule, StageSolver};
use dinas::dinas::{complexity_bound, dinas_run, dsf_max, DinasConfig, ForcingSchedule, RunResult};
use dinas::harness::{run_experiment, ExperimentConfig};
use dinas::linear_solvers::{assemble_block_hessian, damped_block_step, inner_solve, SolverConfig};
use dinas::network::{default_radius, metropolis_weights, random_geometric_graph, ConsensusMatrix, Topology};
use dinas::objectives::{
    estimate_constants, generate_logistic_partition, generate_quadratic_family, reference_solution, LocalCost,
    PenaltyProblem, ProblemConstants, SampleBox, SharedCost, StackedPoint, SumCost,
};
use dinas::rng::{stream_rng, Stream};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;

struct Desk {
    costs: Vec<SharedCost>,
    consensus: ConsensusMatrix,
    constants: ProblemConstants,
    y_star: DVector<f64>,
}

fn desk(costs: Vec<SharedCost>, nodes: usize, seed: u64) -> Desk {
    let topo = random_geometric_graph(nodes, default_radius(nodes), seed).expect("topology");
    let consensus = metropolis_weights(&topo);
    let y_star = reference_solution(&costs).expect("reference solution");
    let zero = DVector::zeros(y_star.len());
    let constants = estimate_constants(&costs, &SampleBox::around(&[&zero, &y_star], 1.0), 32, seed);
    Desk { costs, consensus, constants, y_star }
}

fn logistic_desk(seed: u64) -> Desk {
    desk(generate_logistic_partition(20, 200, 5, seed).expect("logistic"), 5, seed)
}

fn penalty(d: &Desk, beta: f64) -> PenaltyProblem {
    PenaltyProblem::new(d.costs.clone(), beta, d.consensus.clone()).expect("penalty")
}

fn jor_config(d: &Desk, beta: f64, eta: f64, delta: f64, gamma0: f64) -> DinasConfig {
    let solver = SolverConfig::jor_default(d.constants.big_m, beta, d.consensus.w_bar());
    let mut cfg = DinasConfig::new(ForcingSchedule::new(eta, delta).expect("schedule"), gamma0, solver);
    cfg.max_outer = 5000;
    cfg
}

fn grad_sequence(run: &RunResult) -> Vec<f64> {
    let mut g: Vec<f64> = run.records.iter().map(|r| r.grad_inf).collect();
    g.push(run.final_grad_inf);
    g
}

fn rate_regimes() -> Outcome {
    let d = logistic_desk(1);
    let p = penalty(&d, 0.1);
    let mut checked = 0;
    let mut notes = Vec::new();
    for eta in [0.9, 0.1, 0.001] {
        let run = dinas_run(&p, StackedPoint::zeros(5, 20), &jor_config(&d, 0.1, eta, 0.0, 1.0)).map_err(|e| e.to_string())?;
        if !run.converged {
            return Err(format!("delta=0 eta={eta} did not converge"));
        }
        let g = grad_sequence(&run);
        for (k, r) in run.records.iter().enumerate() {
            if r.alpha_k == 1.0 {
                checked += 1;
                if g[k + 1] > 0.5 * (1.0 + eta) * g[k] {
                    return Err(format!("delta=0 eta={eta} k={k}: {:.3e} > {:.3e}", g[k + 1], 0.5 * (1.0 + eta) * g[k]));
                }
            }
        }
    }
    if checked == 0 {
        return Err("no full steps observed with delta=0".into());
    }
    for eta in [0.9, 0.1, 0.001] {
        let run = dinas_run(&p, StackedPoint::zeros(5, 20), &jor_config(&d, 0.1, eta, 1.0, 1.0)).map_err(|e| e.to_string())?;
        if !run.converged {
            return Err(format!("delta=1 eta={eta} did not converge"));
        }
        let g = grad_sequence(&run);
        let bound = eta + 1.0 / run.final_gamma + 0.5;
        let ratios: Vec<f64> = g.windows(2).map(|w| w[1] / (w[0] * w[0])).collect();
        let tail = &ratios[ratios.len().saturating_sub(5)..];
        let worst = tail.iter().cloned().fold(0.0, f64::max);
        if worst > bound {
            return Err(format!("delta=1 eta={eta}: ratio {worst:.3e} > {bound:.3}"));
        }
        notes.push(format!("eta={eta}: max tail ratio {worst:.3} <= {bound:.3}"));
    }
    Ok(format!("{checked} full steps within (1+eta)/2; delta=1 {}", notes.join(", ")))
}

fn polyak_start_no_rejections() -> Outcome {
    let d = logistic_desk(1);
    let p = penalty(&d, 0.1);
    let gamma0 = d.constants.polyak_gamma().ok_or("L = 0 on a logistic instance")?;
    let mut iters = Vec::new();
    for delta in [0.0, 1.0] {
        let run = dinas_run(&p, StackedPoint::zeros(5, 20), &jor_config(&d, 0.1, 0.1, delta, gamma0)).map_err(|e| e.to_string())?;
        if !run.converged {
            return Err(format!("delta={delta} did not converge"));
        }
        if run.total_rejections() != 0 {
            return Err(format!("delta={delta}: {} rejections", run.total_rejections()));
        }
        iters.push(run.iterations());
    }
    Ok(format!("gamma0 = mu^2/L = {gamma0:.4}, zero rejections over {iters:?} iterations"))
}

fn gamma_floor() -> Outcome {
    let mut worst_margin = f64::INFINITY;
    for seed in 1..=20 {
        let d = logistic_desk(seed);
        let p = penalty(&d, 0.1);
        let cfg = jor_config(&d, 0.1, 0.1, 0.0, 1.0);
        let run = dinas_run(&p, StackedPoint::zeros(5, 20), &cfg).map_err(|e| e.to_string())?;
        let floor = cfg.q * d.constants.polyak_gamma().ok_or("L = 0")?;
        let min_gamma = run.min_gamma();
        if min_gamma < floor - 1e-12 {
            return Err(format!("seed {seed}: min gamma {min_gamma:.3e} < {floor:.3e}"));
        }
        worst_margin = worst_margin.min(min_gamma - floor);
    }
    Ok(format!("20 seeds, smallest margin above q mu^2/L = {worst_margin:.3e}"))
}

fn inner_iteration_lemma() -> Outcome {
    let mut checked = 0;
    let mut vacuous = 0;
    let mut tightest = 0.0f64;
    let mut instances: Vec<(Desk, usize, usize, f64)> = Vec::new();
    for (lmin, lmax) in [(1.0, 1.0), (1.0, 2.0), (1.0, 4.0)] {
        for ring in [true, false] {
            for beta in [1.0, 0.1] {
                let costs = generate_quadratic_family(5, 5, lmin, lmax, 1).map_err(|e| e.to_string())?;
                let mut d = desk(costs, 5, 1);
                if ring {
                    d.consensus = metropolis_weights(&Topology::ring(5).expect("ring"));
                }
                instances.push((d, 5, 5, beta));
            }
        }
    }
    instances.push((logistic_desk(1), 5, 20, 0.1));
    for (d, nodes, n, beta) in &instances {
        let p = penalty(d, *beta);
        for delta in [0.0, 1.0] {
            let mut cfg = jor_config(d, *beta, 0.1, delta, 1.0);
            cfg.warm_start = false;
            cfg.diagnostics = true;
            cfg.max_outer = 50;
            let run = dinas_run(&p, StackedPoint::zeros(*nodes, *n), &cfg).map_err(|e| e.to_string())?;
            for r in &run.records {
                match (r.m_norm, r.inner_bound) {
                    (Some(m), Some(bound)) if m < 1.0 => {
                        checked += 1;
                        tightest = tightest.max(r.inner_iterations as f64 / bound as f64);
                        if r.inner_iterations > bound {
                            return Err(format!("k={}: {} rounds > bound {bound} (|M| = {m:.4})", r.k, r.inner_iterations));
                        }
                    }
                    _ => vacuous += 1,
                }
            }
        }
    }
    if checked == 0 {
        return Err("no outer iteration had a contracting iteration matrix".into());
    }
    Ok(format!("{checked} iterations checked (largest rounds/bound {tightest:.3}), {vacuous} without a certificate"))
}

fn damped_contraction() -> Outcome {
    let mut rounds = 0;
    let mut worst_slack = f64::INFINITY;
    for (beta, seed) in [(1.0, 1), (0.1, 2), (0.01, 3)] {
        let costs = generate_quadratic_family(4, 5, 0.5, 3.0, seed).map_err(|e| e.to_string())?;
        let d = desk(costs, 5, seed);
        let mu = d
            .costs
            .iter()
            .map(|c| c.hessian(&DVector::zeros(4)).symmetric_eigenvalues().min())
            .fold(f64::INFINITY, f64::min);
        let p = penalty(&d, beta);
        let x = StackedPoint::zeros(5, 4);
        let blocks = assemble_block_hessian(&p, &x).map_err(|e| e.to_string())?;
        let g = StackedPoint::from_blocks((0..5).map(|i| p.local_gradient(i, &x)).collect()).map_err(|e| e.to_string())?;
        let exact = blocks.to_dense().lu().solve(&g.to_flat()).ok_or("singular Hessian")?;
        let bound = (1.0 / beta) / (1.0 / beta + mu);
        let mut dir = StackedPoint::zeros(5, 4);
        let mut err = (dir.to_flat() - &exact).norm();
        let floor = 1e-10 * exact.norm();
        for _ in 0..2000 {
            if err <= floor {
                break;
            }
            dir = damped_block_step(&blocks, &dir, &g).map_err(|e| e.to_string())?;
            let next = (dir.to_flat() - &exact).norm();
            let ratio = next / err;
            if ratio > bound + 1e-10 {
                return Err(format!("beta={beta}: ratio {ratio:.12} > {bound:.12}"));
            }
            worst_slack = worst_slack.min(bound - ratio);
            err = next;
            rounds += 1;
        }
    }
    Ok(format!("{rounds} rounds over 3 instances, min slack {worst_slack:.2e}"))
}

/// `grad^2 F + (1/beta)(I - W) (x) I_n`, assembled entry by entry.
fn dense_penalty_hessian(costs: &[SharedCost], w: &ConsensusMatrix, beta: f64, x: &StackedPoint) -> DMatrix<f64> {
    let (nodes, n) = (costs.len(), x.dim());
    let mut h = DMatrix::zeros(nodes * n, nodes * n);
    for i in 0..nodes {
        let local = costs[i].hessian(x.block(i));
        h.view_mut((i * n, i * n), (n, n)).copy_from(&local);
        for j in 0..nodes {
            let coupling = (if i == j { 1.0 } else { 0.0 } - w.weight(i, j)) / beta;
            for a in 0..n {
                h[(i * n + a, j * n + a)] += coupling;
            }
        }
    }
    h
}

fn inner_solver_oracle() -> Outcome {
    let mut rng = stream_rng(6, Stream::Custom(6));
    let mut worst = 0.0f64;
    let mut solves = 0;
    for case in 0..20u64 {
        let nodes = rng.random_range(1..=8usize);
        let n = rng.random_range(1..=(60 / nodes).min(8));
        let beta = [1.0, 0.1][rng.random_range(0..2)];
        let costs = if case % 2 == 0 {
            generate_quadratic_family(n, nodes, 0.5, 4.0, case).map_err(|e| e.to_string())?
        } else {
            generate_logistic_partition(n, 10 * nodes, nodes, case).map_err(|e| e.to_string())?
        };
        let topo = random_geometric_graph(nodes, default_radius(nodes), case).map_err(|e| e.to_string())?;
        let w = metropolis_weights(&topo);
        let p = PenaltyProblem::new(costs.clone(), beta, w.clone()).map_err(|e| e.to_string())?;
        let x = StackedPoint::from_blocks((0..nodes).map(|_| DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))).collect())
            .map_err(|e| e.to_string())?;
        let g = StackedPoint::from_blocks((0..nodes).map(|i| p.local_gradient(i, &x)).collect()).map_err(|e| e.to_string())?;
        let exact = dense_penalty_hessian(&costs, &w, beta, &x).lu().solve(&g.to_flat()).ok_or("singular")?;
        let blocks = assemble_block_hessian(&p, &x).map_err(|e| e.to_string())?;
        let big_m = costs.iter().map(|c| c.hessian(&DVector::zeros(n)).symmetric_eigenvalues().max()).fold(0.0, f64::max) * 1.5;
        let mut modes = vec![SolverConfig::damped_block()];
        if nodes > 1 {
            let mut jor = SolverConfig::jor_default(big_m, beta, w.w_bar());
            jor.max_inner_iters = 5_000_000;
            modes.push(jor);
        }
        for mode in modes {
            let mut cfg = mode;
            cfg.max_inner_iters = cfg.max_inner_iters.max(200_000);
            let (d, _) = inner_solve(&blocks, &g, 1e-9, &cfg, StackedPoint::zeros(nodes, n)).map_err(|e| format!("case {case}: {e}"))?;
            let diff = (d.to_flat() - &exact).amax();
            if diff > 1e-7 {
                return Err(format!("case {case} ({:?}, N={nodes}, n={n}): diff {diff:.3e}", cfg.mode));
            }
            worst = worst.max(diff);
            solves += 1;
        }
    }
    Ok(format!("{solves} solves on 20 instances, worst inf-norm gap {worst:.2e}"))
}

fn complexity_bound_holds() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 1..=10 {
        let d = logistic_desk(seed);
        let p = penalty(&d, 0.1);
        let eta = 0.1;
        let cfg = jor_config(&d, 0.1, eta, 0.0, 1.0);
        let run = dinas_run(&p, StackedPoint::zeros(5, 20), &cfg).map_err(|e| e.to_string())?;
        if !run.converged {
            return Err(format!("seed {seed} did not converge"));
        }
        let c = d.constants;
        let bound = complexity_bound(run.initial_grad_inf, eta, cfg.q, c.mu, c.lip_hess, cfg.tol_inf).ok_or("L = 0")?;
        if run.iterations() > bound {
            return Err(format!("seed {seed}: {} iterations > k_eps = {bound}", run.iterations()));
        }
        worst = worst.max(run.iterations() as f64 / bound as f64);
    }
    Ok(format!("10 seeds, largest iterations/k_eps = {worst:.4}"))
}

fn centralized_consistency() -> Outcome {
    let costs = generate_logistic_partition(20, 200, 1, 4).map_err(|e| e.to_string())?;
    let w = metropolis_weights(&Topology::new(1, []).map_err(|e| e.to_string())?);
    let p = PenaltyProblem::new(costs.clone(), 0.1, w).map_err(|e| e.to_string())?;
    let mut gap = 0.0f64;
    let mut compared = 0;
    for (eta, delta) in [(0.1, 0.0), (0.5, 1.0)] {
        let schedule = ForcingSchedule::new(eta, delta).map_err(|e| e.to_string())?;
        let mut dcfg = DinasConfig::new(schedule.clone(), 1.0, SolverConfig::dense_oracle());
        dcfg.keep_iterates = true;
        let mut ccfg = CentralizedConfig::new(schedule, 1.0);
        ccfg.keep_iterates = true;
        let a = dinas_run(&p, StackedPoint::zeros(1, 20), &dcfg).map_err(|e| e.to_string())?;
        let b = dinasc_run(costs[0].as_ref(), DVector::zeros(20), &ccfg, &DenseCholesky).map_err(|e| e.to_string())?;
        if a.iterates.len() != b.iterates.len() {
            return Err(format!("iterate counts differ: {} vs {}", a.iterates.len(), b.iterates.len()));
        }
        for (x, y) in a.iterates.iter().zip(&b.iterates) {
            gap = gap.max((x.block(0) - y.block(0)).amax());
            compared += 1;
        }
    }
    if gap > 1e-12 {
        return Err(format!("trajectories differ by {gap:.3e}"));
    }
    let mut fixed_iters = Vec::new();
    for seed in 1..=5 {
        let d = logistic_desk(seed);
        let sum: SharedCost = Arc::new(SumCost::new(d.costs.clone()).map_err(|e| e.to_string())?);
        let zero = DVector::zeros(20);
        let constants = estimate_constants(&[sum.clone()], &SampleBox::around(&[&zero, &d.y_star], 1.0), 32, seed);
        let mut cfg = CentralizedConfig::new(ForcingSchedule::new(0.1, 0.0).map_err(|e| e.to_string())?, 1.0);
        cfg.step = StepPolicy::FixedPolyak { constants };
        cfg.max_outer = 10_000;
        let run = dinasc_run(sum.as_ref(), zero, &cfg, &DenseCholesky).map_err(|e| e.to_string())?;
        if !run.converged || run.total_rejections() != 0 {
            return Err(format!("fixed step seed {seed}: converged {} rejections {}", run.converged, run.total_rejections()));
        }
        fixed_iters.push(run.iterations());
    }
    Ok(format!("{compared} iterates agree within {gap:.1e}; fixed step zero rejections ({fixed_iters:?} iterations)"))
}

fn sdinas_consensus() -> Outcome {
    let costs = generate_quadratic_family(10, 5, 0.1, 10.0, 1).map_err(|e| e.to_string())?;
    let d = desk(costs, 5, 1);
    let schedule = ContinuationSchedule::coupled(0.1, 0.1);
    let mut cfg = DinasConfig::new(ForcingSchedule::new(0.9, 0.0).map_err(|e| e.to_string())?, 1.0, SolverConfig::damped_block());
    cfg.max_outer = 5000;
    let target = ConsensusTarget { y_star: d.y_star.clone(), target: 1e-4 };
    let out = sdinas_run(&d.costs, &d.consensus, StackedPoint::zeros(5, 10), &schedule, &cfg, StageSolver::Fixed, Some(&target))
        .map_err(|e| e.to_string())?;
    if !out.reached_target {
        return Err("e_k <= 1e-4 not reached".into());
    }
    let final_e = out.error_trace.last().map(|t| t.1).unwrap_or(f64::NAN);
    // Stage error needs stages run to their own tolerance, so measure on a
    // run that is never cut short by the consensus target.
    let probe = ContinuationSchedule { max_stages: 4, ..schedule };
    let full = sdinas_run(&d.costs, &d.consensus, StackedPoint::zeros(5, 10), &probe, &cfg, StageSolver::Fixed, None)
        .map_err(|e| e.to_string())?;
    let points: Vec<(f64, f64)> = full.stages.iter().map(|s| (s.beta, max_distance(&full.runs[s.stage].final_point, &d.y_star))).collect();
    let slope = log_log_slope(&points).ok_or("fewer than two stages")?;
    if !(0.7..=1.3).contains(&slope) {
        return Err(format!("slope {slope:.3} outside [0.7, 1.3]; stage errors {points:?}"));
    }
    Ok(format!("e = {final_e:.2e} after {} stages; stage-error slope {slope:.3}", out.stages.len()))
}

fn dsf_correctness() -> Outcome {
    let mut rng = stream_rng(10, Stream::Custom(10));
    let mut max_rounds = 0;
    for draw in 0..1000u64 {
        let nodes = rng.random_range(1..=25usize);
        let topo = random_geometric_graph(nodes, default_radius(nodes), draw).map_err(|e| e.to_string())?;
        let values: Vec<f64> = (0..nodes).map(|_| rng.random_range(-1e3..1e3)).collect();
        let out = dsf_max(&values, &topo);
        let direct = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if out.max != direct {
            return Err(format!("draw {draw}: {} != {direct}", out.max));
        }
        if out.rounds > topo.diameter() {
            return Err(format!("draw {draw}: {} rounds > diameter {}", out.rounds, topo.diameter()));
        }
        max_rounds = max_rounds.max(out.rounds);
    }
    Ok(format!("1000 draws exact, at most {max_rounds} rounds"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn hash_outputs(dir: &Path) -> Result<String, String> {
    let mut h = Sha256::new();
    for name in ["trace.csv", "plot.csv", "stages.csv"] {
        let path = dir.join(name);
        if path.exists() {
            h.update(name.as_bytes());
            h.update(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn determinism() -> Outcome {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(configs_dir()).map_err(|e| e.to_string())? {
        let dir = entry.map_err(|e| e.to_string())?.path();
        if dir.is_dir() {
            files.extend(dinas::harness::config_files(&dir).map_err(|e| e.to_string())?);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err("no configs found".into());
    }
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (i, file) in files.iter().enumerate() {
        let cfg = ExperimentConfig::load(file).map_err(|e| format!("{}: {e}", file.display()))?;
        let base = file.parent().unwrap_or(Path::new("."));
        let mut hashes = Vec::new();
        for rep in 0..2 {
            let out = tmp.path().join(format!("{i}-{rep}"));
            run_experiment(&cfg, Some(base), &out).map_err(|e| format!("{}: {e}", file.display()))?;
            hashes.push(hash_outputs(&out)?);
        }
        if hashes[0] != hashes[1] {
            return Err(format!("{} differs between runs", file.display()));
        }
    }
    Ok(format!("{} configs byte-identical across two runs", files.len()))
}

fn central_gradient(cost: &dyn LocalCost, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| {
        let mut p = x.clone();
        let mut m = x.clone();
        p[i] += h;
        m[i] -= h;
        (cost.value(&p) - cost.value(&m)) / (2.0 * h)
    })
}

fn central_hessian(cost: &dyn LocalCost, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut p = x.clone();
        let mut m = x.clone();
        p[j] += h;
        m[j] -= h;
        out.set_column(j, &((cost.gradient(&p) - cost.gradient(&m)) / (2.0 * h)));
    }
    out
}

fn finite_differences() -> Outcome {
    let mut rng = stream_rng(12, Stream::Custom(12));
    let costs: Vec<SharedCost> = generate_logistic_partition(6, 40, 2, 12)
        .map_err(|e| e.to_string())?
        .into_iter()
        .chain(generate_quadratic_family(6, 2, 0.1, 10.0, 12).map_err(|e| e.to_string())?)
        .collect();
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    for point in 0..10 {
        let x = DVector::from_fn(6, |_, _| rng.random_range(-2.0..2.0));
        for cost in &costs {
            let g = cost.gradient(&x);
            let eg = (central_gradient(cost.as_ref(), &x, 1e-5) - &g).norm() / g.norm().max(1e-12);
            let hm = cost.hessian(&x);
            let eh = (central_hessian(cost.as_ref(), &x, 1e-5) - &hm).norm() / hm.norm().max(1e-12);
            if eg > 1e-6 || eh > 1e-4 {
                return Err(format!("point {point}: gradient {eg:.2e}, Hessian {eh:.2e}"));
            }
            worst_g = worst_g.max(eg);
            worst_h = worst_h.max(eh);
        }
    }
    Ok(format!("10 points x 4 costs, worst relative gradient {worst_g:.1e}, Hessian {worst_h:.1e}"))
}

fn cost_ordering() -> Outcome {
    let r = 0.1;
    let costs = generate_quadratic_family(10, 10, 0.1, 100.0, 1).map_err(|e| e.to_string())?;
    let d = desk(costs, 10, 1);
    let target = ConsensusTarget { y_star: d.y_star.clone(), target: 1e-4 };
    let mut cfg = DinasConfig::new(ForcingSchedule::new(0.9, 0.0).map_err(|e| e.to_string())?, 1.0, SolverConfig::damped_block());
    cfg.max_outer = 5000;
    let staged = sdinas_run(
        &d.costs,
        &d.consensus,
        StackedPoint::zeros(10, 10),
        &ContinuationSchedule::coupled(0.1, 0.1),
        &cfg,
        StageSolver::Fixed,
        Some(&target),
    )
    .map_err(|e| e.to_string())?;
    if !staged.reached_target {
        return Err("DINAS did not reach e_k <= 1e-4".into());
    }
    let dinas_cost = staged.ledger.total_cost(r);
    let mut lines = vec![format!("DINAS {dinas_cost:.3e}")];
    let mut beaten = Vec::new();
    for method in [BaselineMethod::Diging, BaselineMethod::Dg] {
        let mut bcfg = BaselineConfig::from_constants(method, d.constants.big_m);
        bcfg.max_iters = 200_000;
        let out = baseline_run(&d.costs, &d.consensus, StackedPoint::zeros(10, 10), &bcfg, Some(&target)).map_err(|e| e.to_string())?;
        let cost = if out.reached_target { out.ledger.total_cost(r) } else { f64::INFINITY };
        lines.push(format!("{} {cost:.3e}", method.label()));
        if dinas_cost >= cost {
            beaten.push(method.label());
        }
    }
    let summary = lines.join(", ");
    if beaten.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; DINAS not cheaper than {}", beaten.join(", ")))
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("rate regimes", rate_regimes),
        ("no rejections from gamma0 <= mu^2/L", polyak_start_no_rejections),
        ("gamma floor", gamma_floor),
        ("inner iteration bound", inner_iteration_lemma),
        ("damped solver contraction", damped_contraction),
        ("inner solver vs dense solve", inner_solver_oracle),
        ("outer complexity bound", complexity_bound_holds),
        ("centralized consistency", centralized_consistency),
        ("continuation reaches consensus", sdinas_consensus),
        ("flooding max", dsf_correctness),
        ("deterministic outputs", determinism),
        ("finite differences", finite_differences),
        ("cost ordering at lambda_max = 100", cost_ordering),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("{} of 13 criteria passed in {:.1}s", 13 - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
