use thiserror::Error;

/// Errors raised by the numerical kernels and experiment harnesses.
///
/// Every variant carries enough context to diagnose the rejection without
/// re-running the computation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "matrix is not Hermitian: entries ({row},{col}) and ({col},{row}) deviate by {deviation:e} (relative)"
    )]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("matrix is not unitary: ||U*U - I|| = {defect:e}")]
    NotUnitary { defect: f64 },

    #[error("matrix is not an orthogonal projection: idempotency defect {idempotency:e}, self-adjointness defect {adjointness:e}")]
    NotProjection { idempotency: f64, adjointness: f64 },

    #[error("λ = {lambda} on spectrum; counting ambiguous (nearest eigenvalue {eigenvalue}, gap tolerance {tol:e})")]
    OnSpectrum {
        lambda: f64,
        eigenvalue: f64,
        tol: f64,
    },

    #[error("pair numerically non-Fredholm at this tolerance: eigenvalue {eigenvalue} of P-Q inside the separation band (eig_tol {eig_tol:e})")]
    NonFredholm { eigenvalue: f64, eig_tol: f64 },

    #[error("eigen-iteration failed to converge after {iterations} sweeps")]
    NoConvergence { iterations: usize },

    #[error("λ = {lambda}: λ outside open band (−2,2) (required margin {margin:e})")]
    OutsideBand { lambda: f64, margin: f64 },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("linear system numerically singular (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("test function support [{support_lo}, {support_hi}] does not cover spectral range [{spec_lo}, {spec_hi}]")]
    SupportTooSmall {
        support_lo: f64,
        support_hi: f64,
        spec_lo: f64,
        spec_hi: f64,
    },

    #[error("counting ambiguous at endpoint: eigenphase {phase} within {tol:e} of {endpoint}")]
    AmbiguousEndpoint {
        phase: f64,
        endpoint: f64,
        tol: f64,
    },

    #[error("angle {0} outside (0, 2π)")]
    AngleOutOfRange(f64),

    #[error("refinement budget of {budget} nodes exhausted; worst subinterval [{lo}, {hi}] moves {movement:e} rad")]
    RefinementExhausted {
        budget: usize,
        lo: f64,
        hi: f64,
        movement: f64,
    },

    #[error("box half-width L = {l} below the minimum {min}")]
    BoxTooSmall { l: usize, min: usize },

    #[error("predicted non-Fredholm: -1 in or near σ(S(λ)) at λ = {lambda} (α = {alpha}, required α < {limit})")]
    PredictedNonFredholm { lambda: f64, alpha: f64, limit: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
