use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Every variant carries enough context to produce a one-line diagnostic; the
/// CLI maps each variant onto a stable reason code via [`Error::code`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("power series orders differ ({left} vs {right})")]
    OrderMismatch { left: usize, right: usize },

    #[error("power series must have order >= 1")]
    EmptySeries,

    #[error("series division needs a nonzero constant term in the divisor")]
    DivisionByZeroConstant,

    #[error("series composition needs an inner series with zero constant term (got {0})")]
    NonZeroInnerConstant(f64),

    #[error("series logarithm needs a positive constant term (got {0})")]
    LogDomain(f64),

    #[error("{name} = {value} is outside the admissible range {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("{0}")]
    Unsupported(String),

    #[error("mean is 1 at this parameter point; the exponent b is undefined (log sigma2 = {log_sigma2})")]
    SingularMean { log_sigma2: f64 },

    #[error(
        "b = {target} is not attainable{branch}; attainable ranges: {ranges}; excluded: {excluded}"
    )]
    NoSolution {
        target: f64,
        branch: String,
        ranges: String,
        excluded: String,
    },

    #[error("coefficient {index} of the series is {value:e}, below -{tol:e}; increase the truncation order")]
    NegativeCoefficient { index: usize, value: f64, tol: f64 },

    #[error("distribution is not self-decomposable: canonical h has coefficient {value:e} at index {index}")]
    NotSelfDecomposable { index: usize, value: f64 },

    #[error("invalid cluster pgf: {0}")]
    InvalidClusterPgf(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),
}

impl Error {
    /// Stable machine-readable reason code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::OrderMismatch { .. } => "order_mismatch",
            Error::EmptySeries => "empty_series",
            Error::DivisionByZeroConstant => "division_by_zero_constant",
            Error::NonZeroInnerConstant(_) => "nonzero_inner_constant",
            Error::LogDomain(_) => "log_domain",
            Error::Domain { .. } => "domain",
            Error::Unsupported(_) => "unsupported",
            Error::SingularMean { .. } => "singular_mean",
            Error::NoSolution { .. } => "no_solution",
            Error::NegativeCoefficient { .. } => "negative_coefficient",
            Error::NotSelfDecomposable { .. } => "not_self_decomposable",
            Error::InvalidClusterPgf(_) => "invalid_cluster_pgf",
            Error::Config(_) => "config",
            Error::InsufficientData(_) => "insufficient_data",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
