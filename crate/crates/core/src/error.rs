use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{x} lies outside the support of the {target} target")]
    OutsideSupport { target: &'static str, x: f64 },

    #[error(
        "benchmark p = {p} is too large for resolution n = {n}: p_n = 1 - p/sqrt(n) would be <= 0"
    )]
    DegenerateBenchmark { p: f64, n: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty sample")]
    EmptySample,

    #[error("chain of length {len} is too short for burn-in {burn_in}")]
    ChainTooShort { len: usize, burn_in: usize },

    #[error("unknown target kind `{0}` (expected normal, cauchy, t2 or exp)")]
    UnknownTarget(String),

    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
