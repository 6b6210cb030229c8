use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid {family} parameter {theta}: {constraint}")]
    InvalidParameter {
        family: &'static str,
        theta: f64,
        constraint: &'static str,
    },

    #[error("theta(z) leaves the {family} domain at z = {z} (theta = {theta}): {constraint}")]
    ThetaOutOfDomain {
        family: &'static str,
        z: f64,
        theta: f64,
        constraint: &'static str,
    },

    #[error("bracket [{lo}, {hi}] has no sign change (f = {f_lo}, {f_hi})")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("non-finite integrand value {value} at node {node}")]
    Evaluation { node: f64, value: f64 },

    #[error("h-function inversion failed for w = {w}, conditioning value {v}")]
    Inversion { w: f64, v: f64 },

    #[error("sampling failed at row {row}: {source}")]
    Sampling {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("input error: {0}")]
    Input(String),

    #[error("undefined statistic: {0}")]
    UndefinedStatistic(&'static str),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
