use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// Model-file problems are split into `Schema` (malformed or out-of-range
/// fields) and `InvalidModel` (well-formed input that is not a valid
/// Markov-modulated process, e.g. a reducible chain).
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("invalid model at `{path}`: {message}")]
    InvalidModel { path: String, message: String },

    #[error("argument r = {r} outside the cumulant domain ({lo}, {hi})")]
    Domain { r: f64, lo: f64, hi: f64 },

    #[error("singular matrix in {what}")]
    Singular { what: String },

    #[error("no Lundberg root: {0}")]
    NoRoot(String),

    #[error("spectral failure: {0}")]
    Spectral(String),

    #[error("repeated pole near {root}: only simple poles are supported")]
    MultiplePole { root: String },

    #[error("improper rational function: numerator degree {num} > denominator degree {den}")]
    ImproperRational { num: usize, den: usize },

    #[error("projection undefined: pole {pole} lies on the imaginary axis")]
    ProjectionUndefined { pole: String },

    #[error("pipeline inconsistency: {0}")]
    Inconsistent(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("drift condition violated: {0}")]
    Drift(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("invalid argument: {0}")]
    Argument(String),
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidModel {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn singular(what: impl Into<String>) -> Self {
        Error::Singular { what: what.into() }
    }

    /// Module that raised the error, used by the CLI when reporting.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Schema { .. } | Error::InvalidModel { .. } | Error::Unsupported(_) => "model",
            Error::Domain { .. } | Error::Singular { .. } => "transforms",
            Error::NoRoot(_) | Error::Spectral(_) => "spectral",
            Error::MultiplePole { .. }
            | Error::ImproperRational { .. }
            | Error::ProjectionUndefined { .. }
            | Error::Inconsistent(_) => "factorization",
            Error::Drift(_) | Error::Convergence(_) => "overshoot",
            Error::DegenerateSample(_) => "montecarlo",
            Error::Argument(_) => "cli",
        }
    }
}
