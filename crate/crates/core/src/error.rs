use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field law: {0}")]
    InvalidLaw(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {requested} sites requested, budget is {budget}")]
    Capacity { requested: usize, budget: usize },

    #[error("lattice site {site:?} lies outside the scenery box of halfwidth {halfwidth}")]
    OutOfRange { site: Vec<i64>, halfwidth: i64 },

    #[error("walk left the scenery box at time {time}")]
    WalkExited { time: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("mollifier width {delta} is not resolvable on a grid of spacing {h} (need delta >= 2h)")]
    Resolution { delta: f64, h: f64 },

    #[error("test function is not normalized: sum f^2 h^d = {norm}")]
    Unnormalized { norm: f64 },

    #[error("eigen solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("box side {big} is not an integer multiple of sub-box side {sub} on this grid")]
    Partition { big: f64, sub: f64 },

    #[error("constraint <mu,u> = {target} not reached: best achieved {achieved}")]
    Infeasible { target: f64, achieved: f64 },

    #[error("objective increased across alternations ({before} -> {after})")]
    NonMonotone { before: f64, after: f64 },

    #[error("alpha grid too narrow: maximizer at boundary alpha = {alpha}")]
    GridTooNarrow { alpha: f64 },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
