use thiserror::Error;

/// Which of the two decision parameters an error or result refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    A,
    B,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::A => f.write_str("A"),
            Axis::B => f.write_str("B"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("geometric ratio {alpha} has modulus >= 1; series diverges")]
    Divergent { alpha: f64 },

    #[error("coefficient {requested} requested but series is retained only to order {available}")]
    Order { requested: usize, available: usize },

    #[error("singular constant: {0}")]
    Singular(String),

    #[error("closed form requires memoryless (exponential) observation intervals")]
    RequiresMemoryless,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("axis {0} has zero intensity; threshold is never exceeded")]
    NoExit(Axis),

    #[error(
        "{censored} of {total} paths hit the horizon of {horizon} observations; \
         raise simulation.horizon"
    )]
    Horizon {
        censored: u64,
        total: u64,
        horizon: usize,
    },

    #[error("no uncensored samples available")]
    NoData,

    #[error("bundle mismatch: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
