//! Experiment configuration, execution and result files.
//!
//! A run writes `trace.csv` (one row per outer iteration), `plot.csv`
//! (`log10` gradient norm against iteration and total cost),
//! `summary.json`, and for continuation runs `stages.csv`.

pub mod config;
mod run;

pub use config::{ExperimentConfig, SCHEMA_VERSION};
pub use run::{
    build_instance, collect_summaries, config_files, execute, report, run_experiment, sweep, write_atomic, Instance, PlotPoint,
    RunArtifacts, RunStatus, RunSummary,
};
