use thiserror::Error;

/// Errors shared across the crate.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension must be an odd integer >= 3, got {0}")]
    InvalidDimension(i64),

    #[error("point (t={t}, r={r}) lies outside the backward light cone with vertex T={vertex}")]
    OutsideCone { t: f64, r: f64, vertex: f64 },

    #[error("vertex time T={t} outside the allowed bracket [{lo}, {hi}]")]
    VertexOutOfBracket { t: f64, lo: f64, hi: f64 },

    #[error("initial datum does not vanish at r=0: |F(0)| = {value:.3e} exceeds {tol:.1e}")]
    NonvanishingAtOrigin { value: f64, tol: f64 },

    #[error("grid needs at least {min} nodes, got {n}")]
    GridTooSmall { n: usize, min: usize },

    #[error("Sobolev order {k} exceeds the maximal order {max} for this dimension")]
    OrderTooLarge { k: usize, max: usize },

    #[error("quadrature failed to converge on [{a}, {b}] (error estimate {err:.3e})")]
    QuadratureNoConvergence { a: f64, b: f64, err: f64 },

    #[error("ODE step size underflow near x = {x} (lambda = {lambda})")]
    StepSizeUnderflow { x: f64, lambda: String },

    #[error("no discrete eigenvalue within {tol:.1e} of {target}; closest was {closest}")]
    EigenvalueNotFound {
        target: f64,
        tol: f64,
        closest: f64,
    },

    #[error("eigenvalue count mismatch: winding number {winding} but {roots} refined roots")]
    SpectrumInconsistency { winding: i64, roots: usize },

    #[error("no sign change of the correction functional on [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("blowup-time series is not usable: {0}")]
    UnreliableSeries(String),

    #[error("matrix eigendecomposition failed: {0}")]
    Eigendecomposition(String),

    #[error("invalid configuration: {field}: {message}")]
    InvalidConfig { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
