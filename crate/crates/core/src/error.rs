use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure categories shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("derivative budget exceeded: 2k+alpha = {requested} (k={k}, alpha={alpha}) but only {budget} is available")]
    DerivativeBudget {
        k: usize,
        alpha: usize,
        requested: usize,
        budget: usize,
    },

    #[error("index error: {0}")]
    Index(String),

    #[error("time-order error: need t > s, got s={s}, t={t}")]
    TimeOrder { s: f64, t: f64 },

    #[error("window error: step {dt} exceeds T*hbar = {limit}{}", .slice.map(|j| format!(" on slice {j}")).unwrap_or_default())]
    Window {
        dt: f64,
        limit: f64,
        slice: Option<usize>,
    },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("oracle resolution: {0}")]
    OracleResolution(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("support error: {0}")]
    Support(String),

    #[error("lattice error: {0}")]
    Lattice(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("validation error in `{key}`: {message}")]
    Validation { key: String, message: String },
}

impl Error {
    /// Short machine-readable category name, used in run summaries.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Shape(_) => "shape",
            Error::DerivativeBudget { .. } => "derivative_budget",
            Error::Index(_) => "index",
            Error::TimeOrder { .. } => "time_order",
            Error::Window { .. } => "window",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::OracleResolution(_) => "oracle_resolution",
            Error::Singular(_) => "singular",
            Error::Support(_) => "support",
            Error::Lattice(_) => "lattice",
            Error::Io(_) => "io",
            Error::Validation { .. } => "validation",
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
