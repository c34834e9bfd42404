use std::path::PathBuf;

use crate::complex::Simplex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("simplex must have at least one vertex")]
    EmptySimplex,

    #[error("vertex {vertex} appears more than once in {vertices:?}")]
    DuplicateVertex { vertex: usize, vertices: Vec<usize> },

    #[error("simplex {0} is not part of the complex")]
    UnknownSimplex(Simplex),

    #[error("weight of {simplex} must be strictly positive and finite, got {weight}")]
    NonPositiveWeight { simplex: Simplex, weight: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("vertex {vertex} is isolated; the normalized graph Laplacian is undefined")]
    IsolatedVertex { vertex: usize },

    #[error("rejection sampling gave up after {attempts} attempts ({accepted} of {requested} points accepted)")]
    SamplingExhausted {
        attempts: usize,
        accepted: usize,
        requested: usize,
    },

    #[error("no degree-{degree} homology: the harmonic space is trivial")]
    NoHarmonics { degree: usize },

    #[error("no embedded point has norm above {min_norm}")]
    NoPointsAboveNorm { min_norm: f64 },

    #[error(
        "eigensolver did not converge after {iterations} iterations (best residuals {residuals:?})"
    )]
    NonConvergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error(
        "degree-{degree} kernel mismatch: {eigen_count} eigenvalues below {tolerance:e} but Betti number is {betti}"
    )]
    KernelMismatch {
        degree: usize,
        eigen_count: usize,
        betti: usize,
        tolerance: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Parse(String),

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

    /// True for failures of the numerical pipeline (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::KernelMismatch { .. }
        )
    }
}
