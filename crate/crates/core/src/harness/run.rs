//! Building instances from configs, dispatching methods and writing results.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{
    CentralSolver, CentralStep, ExperimentConfig, MethodSpec, NewtonSpec, OmegaPolicy, ProblemSpec, SolverSpec, TopologySpec,
    SCHEMA_VERSION,
};
use crate::baselines::{baseline_run, BaselineConfig};
use crate::centralized::{dinasc_run, CentralizedConfig, DenseCholesky, NewtonSolver, StationarySolver, StepPolicy};
use crate::continuation::{consensus_error, sdinas_run, ConsensusTarget, ContinuationSchedule, StageSolver};
use crate::cost::CostLedger;
use crate::dinas::{dinas_run, DinasConfig, ForcingSchedule, RunResult, TRACE_COLUMNS};
use crate::error::{Error, Result};
use crate::linear_solvers::{jor_omega_bound, SolverConfig};
use crate::network::{default_radius, metropolis_weights, random_geometric_graph, ConsensusMatrix, Topology};
use crate::objectives::{
    estimate_constants, generate_logistic_partition, generate_quadratic_family, load_logistic_csv, partition_logistic,
    reference_solution, ProblemConstants, SampleBox, SharedCost, SumCost,
};

/// A fully built experiment instance.
#[derive(Clone, Debug)]
pub struct Instance {
    pub costs: Vec<SharedCost>,
    pub consensus: ConsensusMatrix,
    pub constants: ProblemConstants,
    /// Minimizer of the summed cost.
    pub y_star: DVector<f64>,
}

impl Instance {
    pub fn dim(&self) -> usize {
        self.costs[0].dim()
    }

    pub fn node_count(&self) -> usize {
        self.costs.len()
    }
}

fn resolve(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}

/// Builds costs, graph, reference solution and constants. Relative paths in
/// the config are taken relative to `base_dir`.
pub fn build_instance(config: &ExperimentConfig, base_dir: Option<&Path>) -> Result<Instance> {
    let seed = config.seed;
    let costs = match &config.problem {
        ProblemSpec::Logistic { n, m, nodes } => generate_logistic_partition(*n, *m, *nodes, seed)?,
        ProblemSpec::LogisticCsv { path, nodes, rho } => partition_logistic(&load_logistic_csv(resolve(base_dir, path))?, *nodes, *rho)?,
        ProblemSpec::Quadratic { n, nodes, lambda_min, lambda_max } => {
            generate_quadratic_family(*n, *nodes, *lambda_min, *lambda_max, seed)?
        }
    };
    let nodes = costs.len();
    let topology = match &config.topology {
        TopologySpec::RandomGeometric { radius } => random_geometric_graph(nodes, radius.unwrap_or_else(|| default_radius(nodes)), seed)?,
        TopologySpec::Ring => Topology::ring(nodes)?,
        TopologySpec::Path => Topology::path(nodes)?,
        TopologySpec::Complete => Topology::complete(nodes)?,
        TopologySpec::Edges { edges } => Topology::new(nodes, edges.iter().copied())?,
        TopologySpec::EdgeListFile { path } => {
            let t = Topology::from_edge_list(&fs::read_to_string(resolve(base_dir, path))?)?;
            if t.node_count() != nodes {
                return Err(Error::Config(format!("topology has {} nodes but the problem has {nodes}", t.node_count())));
            }
            t
        }
    };
    let consensus = metropolis_weights(&topology);
    let y_star = reference_solution(&costs)?;
    let origin = DVector::zeros(y_star.len());
    let sample_box = SampleBox::around(&[&origin, &y_star], config.constants.margin);
    let constants = estimate_constants(&costs, &sample_box, config.constants.samples, seed);
    Ok(Instance { costs, consensus, constants, y_star })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    NotConverged,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub name: String,
    pub method: String,
    pub seed: u64,
    pub status: RunStatus,
    #[serde(default)]
    pub error: Option<String>,
    pub iterations: usize,
    /// `None` when the method failed before producing an iterate.
    pub final_grad_inf: Option<f64>,
    pub consensus_error: Option<f64>,
    pub scalar_ops: u64,
    pub scalars_sent: u64,
    pub cost_factor: f64,
    pub total_cost: f64,
    pub gamma_reductions: usize,
    pub stages: Option<usize>,
    pub constants: ProblemConstants,
    pub wall_time_s: f64,
}

/// One point of the plot data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlotPoint {
    pub iteration: usize,
    pub ledger: CostLedger,
    pub grad_inf: f64,
    pub consensus_error: Option<f64>,
}

/// In-memory artifacts of a run, before they are written.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub summary: RunSummary,
    pub trace_csv: Vec<u8>,
    pub plot_csv: Vec<u8>,
    pub stages_csv: Option<Vec<u8>>,
}

fn forcing(n: &NewtonSpec) -> Result<ForcingSchedule> {
    ForcingSchedule::new(n.eta, n.delta)
}

fn solver_for(spec: &SolverSpec, constants: &ProblemConstants, beta: f64, w_bar: f64) -> SolverConfig {
    match spec {
        SolverSpec::Jor { omega: OmegaPolicy::FractionOfBound(f) } => SolverConfig::jor(f * jor_omega_bound(constants.big_m, beta, w_bar)),
        SolverSpec::Jor { omega: OmegaPolicy::Fixed(w) } => SolverConfig::jor(*w),
        SolverSpec::DampedBlock => SolverConfig::damped_block(),
        SolverSpec::DenseOracle => SolverConfig::dense_oracle(),
    }
}

fn plot_from_run(run: &RunResult, y_star: Option<&DVector<f64>>, offset: usize) -> Vec<PlotPoint> {
    let errors: Vec<Option<f64>> = match y_star {
        Some(y) if !run.iterates.is_empty() => run.iterates.iter().map(|x| consensus_error(x, y).ok()).collect(),
        _ => Vec::new(),
    };
    run.gradient_history()
        .into_iter()
        .map(|(k, g, ledger)| PlotPoint { iteration: offset + k, ledger, grad_inf: g, consensus_error: errors.get(k).copied().flatten() })
        .collect()
}

fn plot_csv(points: &[PlotPoint], r: f64) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "total_cost", "log10_grad_inf", "consensus_error"])?;
    for p in points {
        w.write_record([
            p.iteration.to_string(),
            p.ledger.total_cost(r).to_string(),
            p.grad_inf.log10().to_string(),
            p.consensus_error.map(|e| e.to_string()).unwrap_or_default(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn run_csv(run: &RunResult) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    run.write_csv(&mut buf)?;
    Ok(buf)
}

struct Outcome {
    status: RunStatus,
    iterations: usize,
    final_grad_inf: f64,
    consensus_error: Option<f64>,
    ledger: CostLedger,
    gamma_reductions: usize,
    stages: Option<usize>,
    trace_csv: Vec<u8>,
    plot: Vec<PlotPoint>,
    stages_csv: Option<Vec<u8>>,
}

fn status(converged: bool) -> RunStatus {
    if converged {
        RunStatus::Converged
    } else {
        RunStatus::NotConverged
    }
}

fn dispatch(config: &ExperimentConfig, inst: &Instance) -> Result<Outcome> {
    let nodes = inst.node_count();
    let n = inst.dim();
    let x0 = crate::objectives::StackedPoint::zeros(nodes, n);
    let w_bar = inst.consensus.w_bar();
    match &config.method {
        MethodSpec::Dinas { beta, newton, solver, tol, max_outer, warm_start } => {
            let problem = crate::objectives::PenaltyProblem::new(inst.costs.clone(), *beta, inst.consensus.clone())?;
            let mut cfg = DinasConfig::new(forcing(newton)?, newton.gamma0, solver_for(solver, &inst.constants, *beta, w_bar));
            cfg.q = newton.q;
            cfg.tol_inf = *tol;
            cfg.max_outer = *max_outer;
            cfg.warm_start = *warm_start;
            cfg.keep_iterates = true;
            let run = dinas_run(&problem, x0, &cfg)?;
            Ok(Outcome {
                status: status(run.converged),
                iterations: run.iterations(),
                final_grad_inf: run.final_grad_inf,
                consensus_error: consensus_error(&run.final_point, &inst.y_star).ok(),
                ledger: run.ledger,
                gamma_reductions: run.total_reductions,
                stages: None,
                trace_csv: run_csv(&run)?,
                plot: plot_from_run(&run, Some(&inst.y_star), 0),
                stages_csv: None,
            })
        }
        MethodSpec::Sdinas { beta0, theta, eps0, max_stages, newton, solver, max_outer, target_error } => {
            let schedule = ContinuationSchedule {
                beta0: *beta0,
                eps0: eps0.unwrap_or(0.01 * beta0),
                theta: *theta,
                max_stages: *max_stages,
            };
            let (base_solver, stage_solver) = match solver {
                SolverSpec::Jor { omega: OmegaPolicy::FractionOfBound(f) } => {
                    (SolverConfig::jor(1.0), StageSolver::JorFraction { fraction: *f, big_m: inst.constants.big_m })
                }
                other => (solver_for(other, &inst.constants, *beta0, w_bar), StageSolver::Fixed),
            };
            let mut cfg = DinasConfig::new(forcing(newton)?, newton.gamma0, base_solver);
            cfg.q = newton.q;
            cfg.max_outer = *max_outer;
            cfg.keep_iterates = true;
            let target = ConsensusTarget { y_star: inst.y_star.clone(), target: target_error.unwrap_or(0.0) };
            let staged = sdinas_run(&inst.costs, &inst.consensus, x0, &schedule, &cfg, stage_solver, Some(&target))?;
            let mut trace = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["stage"];
            header.extend(TRACE_COLUMNS);
            trace.write_record(&header)?;
            let mut plot = Vec::new();
            let mut offset = 0;
            for (s, run) in staged.runs.iter().enumerate() {
                for row in run.csv_rows() {
                    let mut full = vec![s.to_string()];
                    full.extend(row);
                    trace.write_record(&full)?;
                }
                let mut pts = plot_from_run(run, Some(&inst.y_star), offset);
                if s > 0 {
                    pts.remove(0);
                }
                plot.extend(pts);
                offset += run.iterations();
            }
            let mut stages_csv = Vec::new();
            staged.write_csv(&mut stages_csv)?;
            let last = staged.stages.last().expect("at least one stage");
            let converged = match target_error {
                Some(_) => staged.reached_target,
                None => staged.runs.last().is_some_and(|r| r.converged),
            };
            Ok(Outcome {
                status: status(converged),
                iterations: staged.total_iterations(),
                final_grad_inf: last.final_grad_inf,
                consensus_error: last.consensus_error,
                ledger: staged.ledger,
                gamma_reductions: staged.runs.iter().map(|r| r.total_reductions).sum(),
                stages: Some(staged.stages.len()),
                trace_csv: trace.into_inner().map_err(|e| Error::Io(e.into_error()))?,
                plot,
                stages_csv: Some(stages_csv),
            })
        }
        MethodSpec::Dinasc { newton, step, linear_solver, tol, max_outer } => {
            let f = SumCost::new(inst.costs.clone())?;
            let mut cfg = CentralizedConfig::new(forcing(newton)?, newton.gamma0);
            cfg.q = newton.q;
            cfg.tol_inf = *tol;
            cfg.max_outer = *max_outer;
            cfg.keep_iterates = true;
            cfg.step = match step {
                CentralStep::Adaptive => StepPolicy::Adaptive,
                CentralStep::FixedPolyak => StepPolicy::FixedPolyak { constants: inst.constants },
            };
            let solver: &dyn NewtonSolver = match linear_solver {
                CentralSolver::Dense => &DenseCholesky,
                CentralSolver::Stationary => &StationarySolver::default(),
            };
            let run = dinasc_run(&f, DVector::zeros(n), &cfg, solver)?;
            Ok(Outcome {
                status: status(run.converged),
                iterations: run.iterations(),
                final_grad_inf: run.final_grad_inf,
                consensus_error: consensus_error(&run.final_point, &inst.y_star).ok(),
                ledger: run.ledger,
                gamma_reductions: run.total_reductions,
                stages: None,
                trace_csv: run_csv(&run)?,
                plot: plot_from_run(&run, Some(&inst.y_star), 0),
                stages_csv: None,
            })
        }
        MethodSpec::Baseline { method, step_scale, max_iters, tol, target_error } => {
            let mut cfg = BaselineConfig::from_constants(*method, inst.constants.big_m);
            if let Some(s) = step_scale {
                cfg.step_size = s / inst.constants.big_m;
            }
            cfg.max_iters = *max_iters;
            cfg.tol_inf = *tol;
            let target = target_error.map(|t| ConsensusTarget { y_star: inst.y_star.clone(), target: t });
            let out = baseline_run(&inst.costs, &inst.consensus, x0, &cfg, target.as_ref())?;
            let mut trace = Vec::new();
            out.write_csv(&mut trace)?;
            let plot = out
                .records
                .iter()
                .map(|r| PlotPoint { iteration: r.k, ledger: r.ledger, grad_inf: r.grad_inf, consensus_error: r.consensus_error })
                .collect();
            let last = out.records.last().expect("initial record");
            let converged = if target_error.is_some() { out.reached_target } else { out.converged };
            Ok(Outcome {
                status: status(converged && !out.diverged),
                iterations: out.iterations(),
                final_grad_inf: last.grad_inf,
                consensus_error: consensus_error(&out.final_point, &inst.y_star).ok(),
                ledger: out.ledger,
                gamma_reductions: 0,
                stages: None,
                trace_csv: trace,
                plot,
                stages_csv: None,
            })
        }
    }
}

/// Runs a config in memory. Method failures become a `Failed` summary;
/// instance construction errors are returned.
pub fn execute(config: &ExperimentConfig, base_dir: Option<&Path>) -> Result<RunArtifacts> {
    config.validate()?;
    let inst = build_instance(config, base_dir)?;
    let started = Instant::now();
    let outcome = dispatch(config, &inst);
    let wall_time_s = started.elapsed().as_secs_f64();
    let mut summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        name: config.name.clone(),
        method: config.method.label().to_string(),
        seed: config.seed,
        status: RunStatus::Failed,
        error: None,
        iterations: 0,
        final_grad_inf: None,
        consensus_error: None,
        scalar_ops: 0,
        scalars_sent: 0,
        cost_factor: config.cost_factor,
        total_cost: 0.0,
        gamma_reductions: 0,
        stages: None,
        constants: inst.constants,
        wall_time_s,
    };
    match outcome {
        Ok(o) => {
            summary.status = o.status;
            summary.iterations = o.iterations;
            summary.final_grad_inf = Some(o.final_grad_inf);
            summary.consensus_error = o.consensus_error;
            summary.scalar_ops = o.ledger.scalar_ops;
            summary.scalars_sent = o.ledger.scalars_sent;
            summary.total_cost = o.ledger.total_cost(config.cost_factor);
            summary.gamma_reductions = o.gamma_reductions;
            summary.stages = o.stages;
            Ok(RunArtifacts {
                summary,
                trace_csv: o.trace_csv,
                plot_csv: plot_csv(&o.plot, config.cost_factor)?,
                stages_csv: o.stages_csv,
            })
        }
        Err(e) => {
            summary.error = Some(e.to_string());
            let mut trace = csv::Writer::from_writer(Vec::new());
            trace.write_record(TRACE_COLUMNS)?;
            Ok(RunArtifacts {
                summary,
                trace_csv: trace.into_inner().map_err(|e| Error::Io(e.into_error()))?,
                plot_csv: plot_csv(&[], config.cost_factor)?,
                stages_csv: None,
            })
        }
    }
}

/// Writes `bytes` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Runs `config` and writes `trace.csv`, `plot.csv`, `summary.json` and,
/// for continuation runs, `stages.csv` into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, base_dir: Option<&Path>, out_dir: &Path) -> Result<RunSummary> {
    let art = execute(config, base_dir)?;
    fs::create_dir_all(out_dir)?;
    write_atomic(&out_dir.join("trace.csv"), &art.trace_csv)?;
    write_atomic(&out_dir.join("plot.csv"), &art.plot_csv)?;
    if let Some(stages) = &art.stages_csv {
        write_atomic(&out_dir.join("stages.csv"), stages)?;
    }
    let mut json = serde_json::to_vec_pretty(&art.summary)?;
    json.push(b'\n');
    write_atomic(&out_dir.join("summary.json"), &json)?;
    Ok(art.summary)
}

/// Config files (`*.json`) in `dir`, sorted by name.
pub fn config_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs every config in `dir` in parallel, each into `out_root/<name>`.
pub fn sweep(dir: &Path, out_root: &Path, seed_override: Option<u64>) -> Result<Vec<(PathBuf, Result<RunSummary>)>> {
    let files = config_files(dir)?;
    Ok(files
        .into_par_iter()
        .map(|path| {
            let result = ExperimentConfig::load(&path).and_then(|mut cfg| {
                if let Some(seed) = seed_override {
                    cfg.seed = seed;
                }
                run_experiment(&cfg, path.parent(), &out_root.join(&cfg.name))
            });
            (path, result)
        })
        .collect())
}

/// Collects every `summary.json` below `results_dir` (one level deep or the
/// directory itself), sorted by name.
pub fn collect_summaries(results_dir: &Path) -> Result<Vec<RunSummary>> {
    let mut paths = Vec::new();
    let own = results_dir.join("summary.json");
    if own.is_file() {
        paths.push(own);
    }
    for entry in fs::read_dir(results_dir)? {
        let p = entry?.path().join("summary.json");
        if p.is_file() {
            paths.push(p);
        }
    }
    let mut out = paths
        .iter()
        .map(|p| Ok(serde_json::from_str::<RunSummary>(&fs::read_to_string(p)?)?))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out)
}

/// Writes `report.csv` into `results_dir` and returns a plain-text table.
pub fn report(results_dir: &Path) -> Result<String> {
    let rows = collect_summaries(results_dir)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "method", "status", "iterations", "final_grad_inf", "consensus_error", "total_cost", "cost_factor"])?;
    let mut text = format!("{:<28} {:<8} {:<14} {:>8} {:>12} {:>12} {:>14}\n", "name", "method", "status", "iters", "grad_inf", "cons_err", "total_cost");
    for s in &rows {
        let status = serde_json::to_value(s.status)?.as_str().unwrap_or_default().to_string();
        let err = s.consensus_error.map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into());
        let grad = s.final_grad_inf.map(|g| format!("{g:.3e}")).unwrap_or_else(|| "-".into());
        w.write_record([
            s.name.clone(),
            s.method.clone(),
            status.clone(),
            s.iterations.to_string(),
            s.final_grad_inf.map(|g| g.to_string()).unwrap_or_default(),
            s.consensus_error.map(|e| e.to_string()).unwrap_or_default(),
            s.total_cost.to_string(),
            s.cost_factor.to_string(),
        ])?;
        text.push_str(&format!(
            "{:<28} {:<8} {:<14} {:>8} {:>12} {:>12} {:>14.4e}\n",
            s.name, s.method, status, s.iterations, grad, err, s.total_cost
        ));
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(&results_dir.join("report.csv"), &bytes)?;
    Ok(text)
}
