use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid physical parameters: {0}")]
    Physics(String),

    #[error("height field is not admissible: sup|h| = {linf:.6e} exceeds {limit:.6e}")]
    Inadmissible { linf: f64, limit: f64 },

    #[error("grid size {0} is not a power of two >= 8")]
    GridSize(usize),

    #[error("field is not conjugate symmetric (defect {0:.3e})")]
    NotReal(f64),

    #[error("deformation is not invertible: det = {det:.3e} at r = {r:.6}, theta = {theta:.6}")]
    Degenerate { det: f64, r: f64, theta: f64 },

    #[error("linear solve did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    Solver { residual: f64, iterations: usize },

    #[error("potential field was computed for a different height field")]
    Mismatch,

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("eigen solve failed for mode {k}: {msg}")]
    Eigen { k: usize, msg: String },

    #[error("singular assembly for mode {k}: {msg}")]
    Assembly { k: usize, msg: String },

    #[error("time step {dt:.3e} rejected: {reason}")]
    StepRejected { dt: f64, reason: String },

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
