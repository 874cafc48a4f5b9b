use thiserror::Error;

/// Errors raised by the numerical layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("solver did not converge: {0}")]
    Solver(String),
    #[error("degenerate roots: minimum separation {min_gap:e} is below tolerance {tol:e}; perturb q by ~1e-9 and retry")]
    DegenerateRoots { min_gap: f64, tol: f64 },
    #[error("ill-conditioned polynomial: relative residual {residual:e} after polishing")]
    IllConditioned { residual: f64 },
    #[error("quadrature did not converge: best estimate {value} with error estimate {err_est:e}")]
    Quadrature { value: f64, err_est: f64 },
    #[error("u = {u} sits on the atom at a = {a}; use atom_at_a for the point mass")]
    AtomPoint { u: f64, a: f64 },
    #[error("{}", config_message(*line, key, message))]
    Config { line: usize, key: String, message: String },
}

fn config_message(line: usize, key: &str, message: &str) -> String {
    if line == 0 {
        format!("config key `{key}`: {message}")
    } else {
        format!("config line {line}, key `{key}`: {message}")
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Precondition(msg()))
    }
}
