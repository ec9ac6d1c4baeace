use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate triangle {triangle:?}: area {area:e} below tolerance")]
    DegenerateTriangle { triangle: Option<usize>, area: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("fields live on different meshes (lengths {left} and {right})")]
    MeshMismatch { left: usize, right: usize },

    #[error("Newton iteration did not converge after {iterations} steps (last update {last_update:e})")]
    NoConvergence { iterations: usize, last_update: f64 },

    #[error("active set iteration did not settle after {iterations} steps")]
    ActiveSetNoConvergence { iterations: usize },

    #[error("singular Jacobian: {0}")]
    SingularJacobian(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
