use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh sizing: {0}")]
    Sizing(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {0}")]
    DegenerateTriangle(usize),

    #[error("layout mismatch: expected {expected} coefficients, got {got}")]
    LayoutMismatch { expected: usize, got: usize },

    #[error("coincident deformed points at nodes {0} and {1}: nodal configuration self-intersects")]
    Intersection(usize, usize),

    #[error("rank-deficient nodal gradient at nodes {0:?}")]
    DegenerateGradient(Vec<usize>),

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("non-finite energy at iteration {iteration}")]
    BlowUp { iteration: usize },

    #[error("meshes are not nested: {0}")]
    NotNested(String),

    #[error("undefined convergence order: {0}")]
    UndefinedOrder(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("config {path}:{line}: {msg}")]
    Config { path: PathBuf, line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
