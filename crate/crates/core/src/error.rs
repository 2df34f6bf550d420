use thiserror::Error;

#[derive(Debug, Error)]
pub enum CbfError {
    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("non-conforming mesh: edge ({0}, {1}) is shared by more than two triangles")]
    NonConforming(usize, usize),

    #[error("unsupported {what}: {value}")]
    Unsupported { what: &'static str, value: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("point ({x}, {y}) lies outside triangle {triangle}")]
    OutsideElement { triangle: usize, x: f64, y: f64 },

    #[error("linear solver failed: {0}")]
    LinearSolver(String),

    #[error(
        "nonlinear solver did not converge after {iterations} iterations (last relative change {last_change:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        last_change: f64,
        history: Vec<f64>,
    },

    #[error("adaptive loop aborted at step {step}: {source}")]
    Adaptive {
        step: usize,
        #[source]
        source: Box<CbfError>,
    },

    #[error("estimator is zero while the error is {0:.3e}")]
    Inconsistent(f64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CbfError>;
