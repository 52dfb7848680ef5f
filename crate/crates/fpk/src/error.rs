//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum FpkError {
    /// Arguments outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A denominator that the supported regime guarantees nonzero vanished.
    #[error("singularity: {0}")]
    Singularity(String),

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failure: requested abs tol {requested:.3e}, achieved {achieved:.3e} after {segments} segments")]
    QuadratureFailure {
        requested: f64,
        achieved: f64,
        segments: usize,
    },

    /// The Volterra kernel exponent c/(a t^{2v-1}) reached 1 where the
    /// right-hand side is not negligible; the flux equation is not integrable.
    #[error("non-integrable kernel: exponent {exponent:.6} at t = {t:.6} with |g| = {g_abs:.3e}")]
    NonIntegrableKernel { exponent: f64, t: f64, g_abs: f64 },

    /// Linear-solve or collocation conditioning problem, with diagnostics.
    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    /// A series or iteration failed to converge.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// Time-stepping blow-up detected by the stability monitor.
    #[error("instability detected: {0}")]
    Instability(String),

    /// Parameters outside the supported regime (e.g. b < 0).
    #[error("unsupported regime: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, FpkError>;
