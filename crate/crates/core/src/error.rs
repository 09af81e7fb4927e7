use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on a user-supplied parameter failed.
    #[error("{module}: invalid parameter `{param}`: {reason}")]
    InvalidParameter {
        module: &'static str,
        param: &'static str,
        reason: String,
    },

    #[error("mesh file line {line}: {reason}")]
    MalformedMesh { line: usize, reason: String },

    #[error("mesh: duplicate element {first} and {second}")]
    DuplicateElement { first: usize, second: usize },

    #[error("mesh: non-conforming connectivity: {0}")]
    NonConforming(String),

    #[error("mesh: inverted or degenerate triangle {index} (signed area {area:e})")]
    InvertedTriangle { index: usize, area: f64 },

    #[error("mesh: element quality check failed: {0}")]
    MeshQuality(String),

    #[error("mesh: Dirichlet boundary (inflow + elliptic) has zero length")]
    EmptyDirichletBoundary,

    #[error("solver: {0}")]
    Solver(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("certificate failed: {0}")]
    Certificate(String),

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(module: &'static str, param: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            module,
            param,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
