//! Incomplete-gamma machinery and the Ψ/Δ kernel combinations.
//!
//! Everything downstream is built from the upper incomplete gamma
//! Γ(q,p) = ∫_p^∞ x^{q−1} e^{−x} dx and two derived combinations
//! (Ψ has no e^{bμ} factor, Δ does):
//!
//! ```text
//! Ψ(μ)        = a b^{−2v} (Γ(2v, bμ) − Γ(2v))              (≤ 0 for b ≥ 0)
//! Δ(μ, t_ref) = a b^{−2v} e^{bμ} (Γ(2v, bμ) − Γ(2v, b·t_ref))
//! ```
//!
//! Both are evaluated through the *scaled* lower incomplete gamma
//! γ(q,x)/x^q, which removes the b^{−2v} blow-up analytically: the raw
//! difference form cancels catastrophically as b → 0 and must never be
//! formed there. With the scaled series the b = 0 limits
//! Ψ → −a μ^{2v}/(2v), Δ → a (t^{2v} − μ^{2v})/(2v) fall out continuously.

mod chi2;

pub use chi2::{noncentral_chi2_cdf, noncentral_chi2_pdf};

use crate::error::{FpkError, Result};
use crate::laplace::FpkParams;

const MAX_ITER: usize = 500;

/// ln Γ(x) for x > 0, Lanczos approximation (g = 7, 9 coefficients).
///
/// Relative accuracy ~1e-15 over the range used here.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    debug_assert!(x > 0.0);
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Γ(x) for x > 0.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// Validated arguments for the incomplete-gamma routines.
///
/// `order` is the paper-level 2v, `argument` the scaled time bμ or bt.
/// Negative arguments are rejected: for non-integer order the defining
/// integral is not real-valued there (unsupported regime, b ≥ 0 only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaArgs {
    order: f64,
    argument: f64,
}

impl GammaArgs {
    pub fn new(order: f64, argument: f64) -> Result<Self> {
        if !(order > 0.0) || !order.is_finite() {
            return Err(FpkError::Domain(format!(
                "incomplete gamma order must be positive, got {order}"
            )));
        }
        if !(argument >= 0.0) || !argument.is_finite() {
            return Err(FpkError::Domain(format!(
                "incomplete gamma argument must be non-negative, got {argument}"
            )));
        }
        Ok(Self { order, argument })
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn argument(&self) -> f64 {
        self.argument
    }
}

/// Regularized pair (P(q,x), Q(q,x)) with P + Q = 1.
///
/// Series for x < q + 1, Lentz continued fraction otherwise; the side
/// computed directly is the numerically small one, so no cancellation.
fn reg_gamma_pair(q: f64, x: f64) -> Result<(f64, f64)> {
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    let log_prefactor = q * x.ln() - x - ln_gamma(q);
    let prefactor = log_prefactor.exp();
    if x < q + 1.0 {
        let p = prefactor * lower_series_sum(q, x)? / q;
        Ok((p, 1.0 - p))
    } else {
        let q_val = prefactor * upper_cf(q, x)?;
        Ok((1.0 - q_val, q_val))
    }
}

/// Σ_{n≥0} x^n / ((q+1)(q+2)…(q+n)), so that γ(q,x) = x^q e^{−x} Σ / q.
fn lower_series_sum(q: f64, x: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut denom = q;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            return Ok(sum);
        }
    }
    Err(FpkError::Convergence(format!(
        "lower incomplete gamma series (q={q}, x={x})"
    )))
}

/// Modified Lentz continued fraction for Q(q,x)/prefactor.
fn upper_cf(q: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - q;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / if b.abs() < TINY { TINY } else { b };
    let mut f = d;
    for n in 1..=MAX_ITER {
        let an = -(n as f64) * (n as f64 - q);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        f *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok(f);
        }
    }
    Err(FpkError::Convergence(format!(
        "upper incomplete gamma continued fraction (q={q}, x={x})"
    )))
}

/// Regularized lower incomplete gamma P(q, x).
pub fn reg_gamma_p(q: f64, x: f64) -> Result<f64> {
    GammaArgs::new(q, x)?;
    Ok(reg_gamma_pair(q, x)?.0)
}

/// Upper incomplete gamma Γ(q, p) = ∫_p^∞ x^{q−1} e^{−x} dx.
///
/// At p = 0 this is the complete Γ(q). Relative accuracy ≤ 1e-12 over the
/// supported (q, p) range.
pub fn upper_incomplete_gamma(q: f64, p: f64) -> Result<f64> {
    let args = GammaArgs::new(q, p)?;
    let (_, q_reg) = reg_gamma_pair(args.order, args.argument)?;
    Ok(q_reg * gamma(args.order))
}

/// γ(q,x) / x^q, the scaled lower incomplete gamma.
///
/// Continuous down to x = 0 where it equals 1/q; this is the form that keeps
/// Ψ and Δ finite as b → 0.
pub fn lower_gamma_scaled(q: f64, x: f64) -> Result<f64> {
    GammaArgs::new(q, x)?;
    if x == 0.0 {
        return Ok(1.0 / q);
    }
    if x < q + 1.0 {
        // γ(q,x)/x^q = e^{−x} Σ_{n≥0} x^n / (q (q+1) … (q+n))
        Ok((-x).exp() * lower_series_sum(q, x)? / q)
    } else {
        let (p, _) = reg_gamma_pair(q, x)?;
        Ok((p.ln() + ln_gamma(q) - q * x.ln()).exp())
    }
}

/// Raw-difference route for Ψ, kept only to test branch consistency against
/// the scaled-series route near the b → 0 switchover.
#[doc(hidden)]
pub fn psi_via_gamma_difference(mu: f64, params: &FpkParams) -> Result<f64> {
    let q = 2.0 * params.v;
    let b = params.b;
    if mu == 0.0 {
        return Ok(0.0);
    }
    if b == 0.0 {
        return Ok(-params.a * mu.powf(q) / q);
    }
    let diff = upper_incomplete_gamma(q, b * mu)? - gamma(q);
    Ok(params.a * b.powf(-q) * diff)
}

/// Ψ(μ) = a b^{−2v} (Γ(2v, bμ) − Γ(2v)), via the stable scaled form
/// Ψ(μ) = −a μ^{2v} · γ(2v, bμ)/(bμ)^{2v}.
///
/// Ψ(0) = 0 exactly; Ψ(μ) < 0 for μ > 0; b → 0 limit is −a μ^{2v}/(2v).
pub fn psi(mu: f64, params: &FpkParams) -> Result<f64> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(FpkError::Domain(format!("psi: mu must be >= 0, got {mu}")));
    }
    if mu == 0.0 {
        return Ok(0.0);
    }
    let q = 2.0 * params.v;
    Ok(-params.a * mu.powf(q) * lower_gamma_scaled(q, params.b * mu)?)
}

/// Δ(μ, t_ref) = a b^{−2v} e^{bμ} (Γ(2v, bμ) − Γ(2v, b t_ref)).
///
/// Positive for μ < t_ref (b ≥ 0), zero at μ = t_ref, slope −a t_ref^{2v−1}
/// there. Near the diagonal a three-term Taylor expansion replaces the
/// cancelling difference.
pub fn delta(mu: f64, t_ref: f64, params: &FpkParams) -> Result<f64> {
    if !(mu >= 0.0) || mu > t_ref {
        return Err(FpkError::Domain(format!(
            "delta: need 0 <= mu <= t_ref, got mu={mu}, t_ref={t_ref}"
        )));
    }
    if mu == t_ref {
        return Ok(0.0);
    }
    let q = 2.0 * params.v;
    let b = params.b;
    let w = t_ref - mu;
    if w <= 1e-4 * t_ref {
        return Ok(delta_near_diagonal(w, t_ref, params));
    }
    let sc_t = lower_gamma_scaled(q, b * t_ref)?;
    let sc_mu = lower_gamma_scaled(q, b * mu)?;
    Ok(params.a * (b * mu).exp() * (t_ref.powf(q) * sc_t - mu.powf(q) * sc_mu))
}

/// Taylor form of Δ(t−w, t) for w ≪ t:
/// Δ = a t^{2v−1} w e^{−bw} (1 − (w/2) p₁ + (w²/6) p₂),
/// p₁ = (2v−1)/t − b, p₂ = p₁² − (2v−1)/t².
fn delta_near_diagonal(w: f64, t_ref: f64, params: &FpkParams) -> f64 {
    let q = 2.0 * params.v;
    let b = params.b;
    let p1 = (q - 1.0) / t_ref - b;
    let p2 = p1 * p1 - (q - 1.0) / (t_ref * t_ref);
    params.a * t_ref.powf(q - 1.0) * w * (-b * w).exp() * (1.0 - 0.5 * w * p1 + w * w / 6.0 * p2)
}

/// Per-`t_ref` cache of the quantities the Laplace-domain kernels reuse.
///
/// Immutable after construction; all methods are pure.
#[derive(Debug, Clone)]
pub struct KernelContext {
    params: FpkParams,
    t_ref: f64,
    /// a·t_ref^{2v−1}, the diffusion scale at t_ref (also |∂Δ/∂μ| at μ=t_ref).
    a_t: f64,
    /// c / (a·t_ref^{2v−1}), the kernel singularity exponent.
    beta: f64,
    /// Ψ(t_ref).
    psi_t_ref: f64,
}

impl KernelContext {
    pub fn new(params: &FpkParams, t_ref: f64) -> Result<Self> {
        if !(t_ref > 0.0) || !t_ref.is_finite() {
            return Err(FpkError::Domain(format!(
                "KernelContext: t_ref must be positive, got {t_ref}"
            )));
        }
        let a_t = params.a * t_ref.powf(2.0 * params.v - 1.0);
        Ok(Self {
            params: params.clone(),
            t_ref,
            a_t,
            beta: params.c / a_t,
            psi_t_ref: psi(t_ref, params)?,
        })
    }

    pub fn params(&self) -> &FpkParams {
        &self.params
    }

    pub fn t_ref(&self) -> f64 {
        self.t_ref
    }

    /// a·t_ref^{2v−1}.
    pub fn diffusion_scale(&self) -> f64 {
        self.a_t
    }

    /// Kernel singularity exponent β = c/(a t_ref^{2v−1}).
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn psi_t_ref(&self) -> f64 {
        self.psi_t_ref
    }

    /// Δ(0, t_ref) = −Ψ(t_ref).
    pub fn delta_at_origin(&self) -> f64 {
        -self.psi_t_ref
    }

    /// Φ(μ) = a b^{−2v} Γ(2v, bμ) e^{bμ}. Diverges as b → 0; only exposed for
    /// diagnostics on the b > 0 branch.
    pub fn phi(&self, mu: f64) -> Result<f64> {
        let b = self.params.b;
        if b == 0.0 {
            return Err(FpkError::Domain(
                "phi diverges at b = 0; use delta/psi forms".into(),
            ));
        }
        let q = 2.0 * self.params.v;
        Ok(self.params.a
            * b.powf(-q)
            * upper_incomplete_gamma(q, b * mu)?
            * (b * mu).exp())
    }

    pub fn psi(&self, mu: f64) -> Result<f64> {
        psi(mu, &self.params)
    }

    pub fn delta(&self, mu: f64) -> Result<f64> {
        delta(mu, self.t_ref, &self.params)
    }

    /// Regular part of the kernel integrand:
    /// c/Δ(μ, t_ref) − β/(t_ref − μ), bounded up to μ = t_ref.
    pub fn kernel_regular(&self, mu: f64) -> Result<f64> {
        let c = self.params.c;
        if c == 0.0 {
            return Ok(0.0);
        }
        let t = self.t_ref;
        let w = t - mu;
        if w <= 1e-4 * t {
            // c (1 − E)/(a_t w E) with Δ = a_t w E(w); series for 1 − E.
            let q = 2.0 * self.params.v;
            let b = self.params.b;
            let p1 = (q - 1.0) / t - b;
            let p2 = p1 * p1 - (q - 1.0) / (t * t);
            let e = (-b * w).exp() * (1.0 - 0.5 * w * p1 + w * w / 6.0 * p2);
            let one_minus_e = w * (b + 0.5 * p1) - w * w * (0.5 * b * b + 0.5 * b * p1 + p2 / 6.0);
            return Ok(c * one_minus_e / (self.a_t * w * e));
        }
        let d = self.delta(mu)?;
        Ok(c / d - self.beta / w)
    }
}
