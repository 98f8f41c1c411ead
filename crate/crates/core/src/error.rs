use thiserror::Error;

/// Errors produced by geometry construction, evaluation and the winding
/// number engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("parameter {0} outside the evaluable domain [{1}, {2}]")]
    Domain(f64, f64, f64),

    #[error("query point coincides with the curve")]
    Coincident,

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("unresolved line/surface intersection: {0}")]
    UnresolvedIntersection(String),

    #[error("integrand is singular: point lies on the discontinuity axis")]
    SingularIntegrand,

    #[error("query point coincides with cloud sample {0}")]
    SingularSample(usize),

    #[error("adaptive quadrature exceeded depth {depth} (partial value {partial})")]
    QuadratureFailure { depth: u32, partial: f64 },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
