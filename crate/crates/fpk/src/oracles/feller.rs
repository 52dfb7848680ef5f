//! Closed-form transition law at v = 1/2.
//!
//! At v = 1/2 the forward equation is the classical square-root-diffusion
//! (Feller/CIR) equation for dX = (bX + c) dt + √(2aX) dW, whose transition
//! density is a scaled noncentral chi-squared:
//!
//! ```text
//! 2 c_F X_t+Δ ~ χ'²(δ, λ),  c_F = b / (a (e^{bΔ} − 1)),  δ = 2c/a,
//! λ = 2 c_F ξ e^{bΔ}        (b → 0: c_F = 1/(aΔ)).
//! ```
//!
//! Derivation locked in against the standard CIR law with κ = −b, θ = −c/b,
//! σ² = 2a; at b > 0 the mean-fleeing sign carries through unchanged.

use crate::error::{FpkError, Result};
use crate::laplace::FpkParams;
use crate::special::{noncentral_chi2_cdf, noncentral_chi2_pdf};

/// The (c_F, dof, noncentrality) triple of the scaled noncentral-χ² law.
pub fn feller_v_half_law(t: f64, xi: f64, params: &FpkParams) -> Result<(f64, f64, f64)> {
    if params.v != 0.5 {
        return Err(FpkError::Domain(format!(
            "feller oracle requires v = 1/2 exactly, got {}",
            params.v
        )));
    }
    if !(params.c > 0.0) {
        return Err(FpkError::Domain(format!(
            "feller oracle validity needs 2c/a > 0, got c = {}",
            params.c
        )));
    }
    if !(t > 0.0) || !(xi > 0.0) {
        return Err(FpkError::Domain(format!(
            "feller oracle needs t > 0 and xi > 0, got t={t}, xi={xi}"
        )));
    }
    let c_f = if params.b == 0.0 {
        1.0 / (params.a * t)
    } else {
        params.b / (params.a * ((params.b * t).exp() - 1.0))
    };
    let dof = 2.0 * params.c / params.a;
    let lam = 2.0 * c_f * xi * (params.b * t).exp();
    Ok((c_f, dof, lam))
}

/// Transition density u(t, x; ξ) at v = 1/2.
pub fn feller_v_half_density(t: f64, x: f64, xi: f64, params: &FpkParams) -> Result<f64> {
    let (c_f, dof, lam) = feller_v_half_law(t, xi, params)?;
    Ok(2.0 * c_f * noncentral_chi2_pdf(2.0 * c_f * x, dof, lam)?)
}

/// Transition CDF P(X_t ≤ x) at v = 1/2.
pub fn feller_v_half_cdf(t: f64, x: f64, xi: f64, params: &FpkParams) -> Result<f64> {
    let (c_f, dof, lam) = feller_v_half_law(t, xi, params)?;
    noncentral_chi2_cdf(2.0 * c_f * x, dof, lam)
}
