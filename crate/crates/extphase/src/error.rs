use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("step size underflow at t = {t}: step {step:e}")]
    Stiffness { t: f64, step: f64 },

    #[error("constraint violation: |phi| = {residual:e} exceeds {bound:e} at param {param}")]
    ConstraintViolation { param: f64, residual: f64, bound: f64 },

    #[error("singularity: {what} (last valid t = {last_valid_t})")]
    Singularity { what: String, last_valid_t: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("separability error: {0}")]
    Separability(String),

    #[error("gauge condition violated: {0}")]
    GaugeCondition(String),

    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Numerical(format!("{what} is not finite ({x})")))
    }
}
