use thiserror::Error;

/// Errors produced by mask construction, the grid solvers, and the
/// experiment drivers.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid spacing {h} leaves no interior nodes; choose h below the domain inradius")]
    EmptyInterior { h: f64 },

    #[error(
        "drift cap {cap} too large for spacing {h} (need cap*h <= 2); refine the grid to h <= {max_h}"
    )]
    GridTooCoarse { cap: f64, h: f64, max_h: f64 },

    #[error("iterative solve did not reach tolerance: residual {residual:.3e} after {iterations} iterations")]
    SolveDiverged { iterations: usize, residual: f64 },

    #[error(
        "policy sweep {sweep} decreased the solution by {max_decrease:.3e} (> 1e-12); \
         the discrete comparison principle is violated, aborting"
    )]
    PolicyNotMonotone { sweep: usize, max_decrease: f64 },

    #[error("policy iteration did not converge: change {last_change:.3e} after {sweeps} sweeps")]
    PolicyDiverged { sweeps: usize, last_change: f64 },

    #[error("level {eps} is not inside (0, {u_max}); cannot extract a superlevel set")]
    LevelOutOfRange { eps: f64, u_max: f64 },

    #[error("start point ({x}, {y}) is not strictly inside the domain")]
    StartOutsideDomain { x: f64, y: f64 },

    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
