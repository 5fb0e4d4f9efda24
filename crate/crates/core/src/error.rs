use thiserror::Error;

/// Errors raised across the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("disconnected topology: no connected draw after {attempts} attempts (seed {seed}, radius {radius})")]
    DisconnectedTopology { seed: u64, radius: f64, attempts: usize },

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid consensus matrix: {0}")]
    InvalidConsensusMatrix(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NonSymmetric(f64),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("{m} data points cannot be split evenly over {nodes} nodes")]
    NotDivisible { m: usize, nodes: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("JOR diagonal breakdown at node {node}, component {component}")]
    JorDiagonalBreakdown { node: usize, component: usize },

    #[error("JOR unusable: relaxation bound is zero (w_bar = {w_bar})")]
    JorUnusable { w_bar: f64 },

    #[error("inner solver stalled after {iterations} rounds (best residual {best_residual:e}, target {target:e})")]
    InnerSolverStalled {
        iterations: usize,
        best_residual: f64,
        target: f64,
    },

    #[error("no contraction certificate: iteration matrix norm {0} >= 1")]
    NoContractionCertificate(f64),

    #[error("local factorization failed at node {node}")]
    FactorizationFailed { node: usize },

    #[error("reference oracle did not converge in {iterations} iterations (gradient norm {grad_norm:e})")]
    OracleIterationCap { iterations: usize, grad_norm: f64 },

    #[error("outer loop stopped after {iterations} iterations with gradient inf-norm {grad_inf:e}")]
    OuterIterationCap { iterations: usize, grad_inf: f64 },

    #[error("step rejected {reductions} consecutive times at outer iteration {iteration}")]
    RejectionCap { iteration: usize, reductions: usize },

    #[error("relative consensus error undefined for a zero reference solution")]
    UndefinedRelativeError,

    #[error("stage {stage} failed: {source}")]
    StageFailed {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
