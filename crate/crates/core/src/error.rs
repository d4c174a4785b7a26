use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rotation matrix is not a proper rotation (residual {residual:e}, det {det})")]
    NotARotation { residual: f64, det: f64 },

    #[error("scenario file line {line}: {message}")]
    ScenarioParse { line: usize, message: String },

    #[error("unknown scenario key `{0}`")]
    UnknownKey(String),

    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },

    #[error(
        "no feasible particle after {evaluations} evaluations (best fitness {best_fitness:e})"
    )]
    NoFeasibleParticle {
        best_fitness: f64,
        evaluations: usize,
    },

    #[error("conic solver failed: {0}")]
    Conic(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
