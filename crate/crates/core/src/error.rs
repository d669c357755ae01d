use std::path::PathBuf;

use thiserror::Error;

/// Errors produced while building, solving, or exporting a two-phase problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("degenerate triangle {triangle} (signed area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },

    #[error("dimension mismatch: expected {expected}, got {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("matrix is not positive definite: pivot {pivot:e} at row {row}")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("conjugate gradient breakdown: nonpositive curvature {curvature:e} at iteration {iteration}")]
    Breakdown { iteration: usize, curvature: f64 },

    #[error("iteration limit {max_iterations} reached (relative residual {residual:e})")]
    IterationLimit {
        max_iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("multiplier value {value} on triangle {triangle} lies outside [{lower}, {upper}]")]
    InfeasibleMultiplier {
        triangle: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("reference energy {reference} exceeds the approximate energy {approximate}")]
    InputOrder { reference: f64, approximate: f64 },

    #[error("missing exact solution for problem `{0}`")]
    MissingExactSolution(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(expected: usize, found: usize, context: &'static str) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected,
            found,
            context,
        })
    }
}
