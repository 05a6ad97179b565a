use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("hypergeometric series hits a zero Pochhammer factor (c = {c}) at term {term}")]
    SingularParameter { c: f64, term: usize },

    #[error("root isolation failed for N = {n}: {reason}")]
    RootIsolation { n: usize, reason: String },

    #[error("singular configuration: {0}")]
    SingularConfiguration(String),

    #[error("time step {dt} violates the stability bound {limit}")]
    Stability { dt: f64, limit: f64 },

    #[error("time step {dt} exceeds the CFL limit {max_dt}; use a smaller step")]
    Cfl { dt: f64, max_dt: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
