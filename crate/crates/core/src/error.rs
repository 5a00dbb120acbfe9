use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    Validation {
        what: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("eigenvalue within {distance:.3e} of the square-root branch cut at -1")]
    BranchCut { distance: f64 },

    #[error("Lyapunov superoperator is singular (smallest |λi + λj + shift| = {smallest:.3e})")]
    SingularSuperoperator { smallest: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("constraints violated upstream: {0}")]
    Constraint(String),

    #[error("system is unstable (stability margin {margin:.3e})")]
    Unstable { margin: f64 },

    #[error("synthesis failed: {0}")]
    Synthesis(String),

    #[error("bare-coupling infeasible: worst row {row} has residual {residual:.3e}")]
    BareCouplingInfeasible { row: usize, residual: f64 },

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
