//! The x → 0 limit of the norm-preserving solution.
//!
//! In the Laplace domain this is the s → ∞ limit of ω(t,s): the π-argument
//! tends to the finite value −1/Ψ(t), and the Ĝ denominator tends to
//! Δ(μ,t) exactly, so
//!
//! ```text
//! lim = e^{−∫₀^t c/Δ(μ,t) dμ} · π(−1/Ψ(t)).
//! ```
//!
//! The limit measures the mass concentrating at the origin. For c = 0 the
//! exponent vanishes and the value is finite and nonzero; for c ≠ 0 the
//! exponent integral diverges logarithmically at μ = t (Δ vanishes linearly
//! there, the same singularity the flux solver weights absorb), so the value
//! degenerates to 0 (c > 0) or +∞ (c < 0). That divergence is classified and
//! reported rather than regularized.

use num_complex::Complex64;

use crate::error::{FpkError, Result};
use crate::laplace::{FpkParams, InitialDistribution};
use crate::special::psi;

#[derive(Debug, Clone, Copy)]
pub struct BoundaryLimit {
    /// The limit value: `pi_factor` for c = 0, else 0 or +∞.
    pub value: f64,
    /// π(−1/Ψ(t)).
    pub pi_factor: f64,
    /// ∫₀^t c/Δ(μ,t) dμ when finite (only c = 0), `None` when divergent.
    pub exponent: Option<f64>,
    /// True when the exponent integral diverges (c ≠ 0).
    pub diverged: bool,
}

pub fn boundary_limit(
    t: f64,
    init: &InitialDistribution,
    params: &FpkParams,
) -> Result<BoundaryLimit> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(FpkError::Domain(format!(
            "boundary_limit: t must be positive, got {t}"
        )));
    }
    let psi_t = psi(t, params)?;
    if psi_t == 0.0 {
        return Err(FpkError::Singularity(format!(
            "boundary_limit: gamma difference vanished at t = {t}"
        )));
    }
    let pi_factor = init.pi_eval(Complex64::new(-1.0 / psi_t, 0.0)).re;
    if params.c == 0.0 {
        return Ok(BoundaryLimit {
            value: pi_factor,
            pi_factor,
            exponent: Some(0.0),
            diverged: false,
        });
    }
    let value = if params.c > 0.0 { 0.0 } else { f64::INFINITY };
    Ok(BoundaryLimit {
        value,
        pi_factor,
        exponent: None,
        diverged: true,
    })
}
