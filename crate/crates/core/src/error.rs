use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("operator is not injective: smallest singular value {sigma_min:e} <= threshold {threshold:e}")]
    NotInjective { sigma_min: f64, threshold: f64 },

    #[error("numerical overflow while computing power {0}")]
    Overflow(usize),

    #[error("operator norm estimate did not converge in {iterations} iterations (best bound {best_bound:e})")]
    Estimation { iterations: usize, best_bound: f64 },

    #[error("linear program stalled after {0} pivots")]
    Stalled(usize),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("certificate check `{check}` failed (slack {slack:e}, tolerance {tol:e})")]
    Certificate { check: &'static str, slack: f64, tol: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("trace aborted at n = {n}: {source}")]
    Trace {
        n: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension { expected, found });
    }
    Ok(())
}
