use thiserror::Error;

/// Errors produced by mesh handling, assembly, solving and the adaptive driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("non-finite value {value} when evaluating at ({x}, {y})")]
    Evaluation { x: f64, y: f64, value: f64 },

    #[error("capability missing: {0}")]
    Capability(String),

    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {relative_residual:e})")]
    Solver {
        iterations: usize,
        relative_residual: f64,
    },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("iteration {step}: {source}")]
    AtIteration {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at_iteration(self, step: usize) -> Self {
        Error::AtIteration {
            step,
            source: Box::new(self),
        }
    }
}
