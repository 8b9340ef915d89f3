use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("point lies outside the domain of h")]
    OutsideDomain,

    #[error(
        "ACG stopping test not met after {iterations} iterations \
         (theoretical bound {bound}, last ratio {last_ratio:.3e})"
    )]
    AcgBudget {
        iterations: usize,
        bound: usize,
        last_ratio: f64,
    },

    #[error("wall-clock deadline reached")]
    Deadline,

    #[error("wall-clock limit reached after {} cycles", report.cycles.len())]
    Timeout { report: Box<crate::driver::SolveReport> },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("penalty cycle cap of {cap} reached without an approximate stationary point")]
    CycleCap {
        cap: usize,
        report: Box<crate::driver::SolveReport>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
