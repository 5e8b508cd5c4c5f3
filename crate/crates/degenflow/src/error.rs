use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (e.g. `m` outside
    /// the profile's interval, or `lambda = 0` where the density of states is
    /// not defined).
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural parameter is invalid (grid sizes, exponents, counts).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A computed quantity exceeded the overflow guard; the input is not a
    /// member of the requested space.
    #[error("divergent quantity: {0}")]
    Divergent(String),

    /// The energy level sits on a constant segment of the branch, i.e. it is
    /// an eigenvalue embedded in the spectrum.
    #[error("embedded eigenvalue at level {value}")]
    EmbeddedEigenvalue { value: f64 },

    /// The energy level is not a regular value of the branch.
    #[error("non-regular level {lambda}: {reason}")]
    NonRegular { lambda: f64, reason: String },

    /// An iterative procedure failed to converge within its budget.
    #[error("did not converge: {0}")]
    NotConverged(String),

    /// Malformed expression or configuration text.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
