use thiserror::Error;

use crate::linalg::LeadingTriple;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{op} did not converge after {iterations} iterations")]
    NotConverged { op: &'static str, iterations: usize },

    #[error("leading singular triple did not converge after {iterations} iterations (best sigma {:.6e})", best.sigma)]
    LeadingTripleNotConverged { iterations: usize, best: Box<LeadingTriple> },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension { op, detail: detail.into() }
    }
}
