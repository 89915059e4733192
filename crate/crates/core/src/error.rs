//! Error types shared by all solvers in this crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A discretized linear system lost rank; carries the grid spacing that
    /// produced it so the caller can refine.
    #[error("numerically degenerate system at grid spacing {spacing}")]
    NumericalDegeneracy { spacing: f64 },

    /// Outward integration of a radial problem produced an unusable solution.
    #[error("radial integration failed: {0}")]
    IntegrationFailure(String),

    /// A bracketing scan did not find a sign change below the configured cap.
    #[error("no root below cap: s({r_lo}) = {s_lo}, s({r_hi}) = {s_hi}; increase the scan cap")]
    RootNotFound {
        r_lo: f64,
        s_lo: f64,
        r_hi: f64,
        s_hi: f64,
    },

    /// The requested time step violates the accuracy guard of the splitting.
    #[error("time step {dt} too large: dt * sup|potential| = {product} > {limit}")]
    StepTooLarge { dt: f64, product: f64, limit: f64 },

    /// The requested problem size exceeds what the implementation enumerates.
    #[error("capability exceeded: {0}")]
    Capability(String),

    /// Grids or tensor shapes of the operands do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Krylov propagation could not reach the requested accuracy.
    #[error("Krylov propagation stalled, residual estimate {residual:.3e} > tolerance {tol:.3e}")]
    KrylovBreakdown { residual: f64, tol: f64 },

    /// The Dirichlet wall of an eigenvalue problem is too close: the
    /// eigenfunction carries visible mass at the boundary.
    #[error("domain too small: boundary mass {boundary_mass:.3e} of the eigenfunction exceeds {limit:.1e}")]
    DomainSize { boundary_mass: f64, limit: f64 },

    /// Inconsistent parameters were passed across module boundaries.
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
