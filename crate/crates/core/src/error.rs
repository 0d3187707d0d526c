use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature failed to converge within the subdivision budget.
    #[error("quadrature did not converge after {subdivisions} subdivisions")]
    QuadratureDiverged { subdivisions: usize },

    /// A root-finding bracket does not enclose a sign change.
    #[error("no sign change on bracket ({0}, {1})")]
    NoSignChange(f64, f64),

    /// The conjugate maximizer hit the search cap even after automatic doubling.
    #[error("conjugate maximizer truncated at z_cap = {z_cap:e}; supremum not bracketed")]
    Truncated { z_cap: f64 },

    /// Operation not defined for this law (e.g. density of a discrete law).
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// A tail curve was requested without a passing iteration certificate.
    #[error("missing or failed iteration certificate")]
    MissingCertificate,

    /// Grid search exhausted without a passing candidate.
    #[error("no candidate found: {0}")]
    NotFound(String),

    /// A specification string could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// The sample set was empty.
    #[error("empty sample set")]
    EmptySamples,
}

pub type Result<T> = std::result::Result<T, Error>;
