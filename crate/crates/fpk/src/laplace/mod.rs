//! Laplace-domain evaluation of the transform ω(t, s).
//!
//! For the forward equation
//!
//! ```text
//! u_t = (a t^{2v−1} x u)_{xx} − ((b x + c) u)_x ,   0 < x < ∞,
//! ```
//!
//! the transform ω(t,s) = ∫₀^∞ e^{−sx} u(t,x) dx solves
//! ω_t + s(a t^{2v−1} s − b) ω_s = −c s ω + f(t) with ω(0,s) = π(s), and its
//! solution splits into an initial-data part and a boundary-flux part:
//!
//! ```text
//! ω(t,s) = e^{−Ĝ(0→t)} π( s e^{bt} / (1 − s e^{bt} Ψ(t)) )
//!        + e^{−Ĝ(0→t)} ∫₀^t f(τ) e^{Ĝ(0→τ)} dτ ,
//! Ĝ(t₁→t₂) = ∫_{t₁}^{t₂} c / ( Δ(μ,t) + e^{b(μ−t)}/s ) dμ .
//! ```
//!
//! The characteristic constant C₁ = (1 − s a b^{−2v} Γ(2v,bt) e^{bt})/(s e^{bt})
//! never appears in a computation: the denominator Φ(μ) + e^{bμ}C₁ is
//! algebraically identical to Δ(μ,t) + e^{b(μ−t)}/s, which stays finite as
//! b → 0 and cancels nothing. C₁ is still reported for diagnostics when b > 0.

mod boundary;
mod flux;

pub use boundary::{boundary_limit, BoundaryLimit};
pub use flux::{
    lemma2_residual, lemma2_rhs, solve_flux, uniform_grid, FluxDiagnostics, FluxFunction,
    FluxSolverOptions,
};

use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

use crate::error::{FpkError, Result};
use crate::quad::{integrate_complex, QuadOptions};
use crate::special::{psi, KernelContext};

/// Constants of the forward equation. Supported regime: a > 0, v > 0, b ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FpkParams {
    /// Diffusion scale, a > 0.
    pub a: f64,
    /// Drift slope; b ≥ 0 in the supported regime.
    pub b: f64,
    /// Drift intercept (any sign).
    pub c: f64,
    /// Hurst-derived exponent, v > 0.
    pub v: f64,
}

impl FpkParams {
    pub fn new(a: f64, b: f64, c: f64, v: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(FpkError::Domain(format!("a must be positive, got {a}")));
        }
        if !(v > 0.0) || !v.is_finite() {
            return Err(FpkError::Domain(format!("v must be positive, got {v}")));
        }
        if !b.is_finite() || !c.is_finite() {
            return Err(FpkError::Domain("b and c must be finite".into()));
        }
        if b < 0.0 {
            return Err(FpkError::Unsupported(format!(
                "b = {b} < 0: negative gamma arguments are outside the supported regime"
            )));
        }
        Ok(Self { a, b, c, v })
    }

    /// Diffusion coefficient a t^{2v−1} at time t.
    pub fn diffusion_at(&self, t: f64) -> f64 {
        self.a * t.powf(2.0 * self.v - 1.0)
    }

    /// Mean of the drift ODE x' = b x + c started at ξ.
    pub fn drift_mean(&self, xi: f64, t: f64) -> f64 {
        if self.b == 0.0 {
            xi + self.c * t
        } else {
            xi * (self.b * t).exp() + self.c / self.b * ((self.b * t).exp() - 1.0)
        }
    }
}

/// Initial data, represented through its Laplace transform π(s).
#[derive(Clone)]
pub enum InitialDistribution {
    /// Point mass at ξ > 0: π(s) = e^{−sξ}.
    PointMass { xi: f64 },
    /// User-supplied transform; `total_mass` = π(0) = P(∞) must be finite.
    Transform {
        pi: Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
        total_mass: f64,
        description: String,
    },
}

impl InitialDistribution {
    pub fn point_mass(xi: f64) -> Result<Self> {
        if !(xi > 0.0) || !xi.is_finite() {
            return Err(FpkError::Domain(format!(
                "point mass location must be positive, got {xi}"
            )));
        }
        Ok(Self::PointMass { xi })
    }

    pub fn from_transform(
        pi: Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
        total_mass: f64,
        description: impl Into<String>,
    ) -> Result<Self> {
        if !total_mass.is_finite() {
            return Err(FpkError::Domain("total mass must be finite".into()));
        }
        Ok(Self::Transform {
            pi,
            total_mass,
            description: description.into(),
        })
    }

    /// π(z).
    pub fn pi_eval(&self, z: Complex64) -> Complex64 {
        match self {
            Self::PointMass { xi } => (-z * *xi).exp(),
            Self::Transform { pi, .. } => pi(z),
        }
    }

    /// π(0) = P(∞).
    pub fn total_mass(&self) -> f64 {
        match self {
            Self::PointMass { .. } => 1.0,
            Self::Transform { total_mass, .. } => *total_mass,
        }
    }

    /// Source point for point-mass data.
    pub fn xi(&self) -> Option<f64> {
        match self {
            Self::PointMass { xi } => Some(*xi),
            Self::Transform { .. } => None,
        }
    }
}

impl fmt::Debug for InitialDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PointMass { xi } => write!(f, "PointMass {{ xi: {xi} }}"),
            Self::Transform { description, total_mass, .. } => {
                write!(f, "Transform {{ {description}, total_mass: {total_mass} }}")
            }
        }
    }
}

/// π(s) evaluated against `init` (free function mirror of the method).
pub fn pi_eval(init: &InitialDistribution, z: Complex64) -> Complex64 {
    init.pi_eval(z)
}

/// The argument fed to π in the initial-data part:
/// s e^{bt} / (1 − s e^{bt} Ψ(t)).
///
/// For real s > 0 and b ≥ 0 the denominator cannot vanish (Ψ ≤ 0); along
/// inversion contours it is checked and a singularity error raised.
pub fn pi_argument(t: f64, s: Complex64, params: &FpkParams) -> Result<Complex64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(FpkError::Domain(format!("t must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(s);
    }
    let se = s * (params.b * t).exp();
    let den = Complex64::new(1.0, 0.0) - se * psi(t, params)?;
    if den.norm() < 1e-14 * (1.0 + se.norm()) {
        return Err(FpkError::Singularity(format!(
            "pi_argument denominator vanished at t={t}, s={s}"
        )));
    }
    Ok(se / den)
}

/// Definite-integral realization of the paper-level G/G★ pair.
///
/// `Ĝ(lower→upper; t_ref, s) = ∫ c / (Δ(μ, t_ref) + e^{b(μ−t_ref)}/s) dμ`;
/// the identity exponent = −Ĝ(0→t) reproduces e^{−G(t;C₁)+G★(0;C₁)} with the
/// unobservable constant of integration removed.
#[derive(Clone)]
pub struct GHatSpec<'a> {
    pub lower: f64,
    pub upper: f64,
    pub context: &'a KernelContext,
    pub s: Complex64,
    pub tolerance: f64,
}

/// Breakpoints grading the subdivision into the μ ≈ t_ref boundary layer,
/// whose width is |1/(s · a t^{2v−1})|.
fn boundary_layer_seeds(ctx: &KernelContext, s: Complex64, lower: f64, upper: f64) -> Vec<f64> {
    let mut seeds = Vec::new();
    let s_norm = s.norm();
    if s_norm <= 0.0 {
        return seeds;
    }
    let delta = 1.0 / (s_norm * ctx.diffusion_scale());
    if delta >= ctx.t_ref() - lower {
        return seeds;
    }
    let mut d = delta;
    while ctx.t_ref() - d > lower {
        let p = ctx.t_ref() - d;
        if p < upper {
            seeds.push(p);
        }
        d *= 4.0;
        if seeds.len() > 24 {
            break;
        }
    }
    seeds
}

/// Adaptive-quadrature value of Ĝ.
pub fn g_hat(spec: &GHatSpec<'_>) -> Result<Complex64> {
    let ctx = spec.context;
    if !(spec.lower >= 0.0 && spec.lower <= spec.upper && spec.upper <= ctx.t_ref() * (1.0 + 1e-12))
    {
        return Err(FpkError::Domain(format!(
            "g_hat: need 0 <= lower <= upper <= t_ref, got [{}, {}] with t_ref {}",
            spec.lower,
            spec.upper,
            ctx.t_ref()
        )));
    }
    if spec.s.norm() == 0.0 {
        return Err(FpkError::Domain("g_hat: s must be nonzero".into()));
    }
    if !(spec.tolerance > 0.0) {
        return Err(FpkError::Domain("g_hat: tolerance must be positive".into()));
    }
    let c = ctx.params().c;
    if c == 0.0 || spec.lower == spec.upper {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let upper = spec.upper.min(ctx.t_ref());
    let b = ctx.params().b;
    let t_ref = ctx.t_ref();
    let s = spec.s;
    let opts = QuadOptions {
        abs_tol: spec.tolerance,
        max_segments: 2000,
        breakpoints: boundary_layer_seeds(ctx, s, spec.lower, upper),
    };
    let quad = integrate_complex(
        |mu| {
            let d = ctx.delta(mu).expect("delta in-range inside g_hat");
            let den = d + (b * (mu - t_ref)).exp() / s;
            c / den
        },
        spec.lower,
        upper,
        &opts,
    )?;
    Ok(quad.value)
}

/// One evaluation of ω with its diagnostic intermediates.
#[derive(Debug, Clone, Copy)]
pub struct LaplaceEvaluation {
    pub s: Complex64,
    pub t: f64,
    /// Characteristic constant (1 − s a b^{−2v} Γ(2v,bt) e^{bt})/(s e^{bt});
    /// `None` at b = 0 where the raw form diverges.
    pub c1: Option<Complex64>,
    /// Ĝ(0→t).
    pub g_hat: Complex64,
    pub omega: Complex64,
}

/// ω(t, s) for the given initial data; `flux = None` is the reflecting
/// (norm-preserving, f ≡ 0) solution, otherwise the boundary-flux part is
/// added from the supplied grid function.
pub fn omega(
    t: f64,
    s: Complex64,
    init: &InitialDistribution,
    flux: Option<&FluxFunction>,
    params: &FpkParams,
    quad_tol: f64,
) -> Result<LaplaceEvaluation> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(FpkError::Domain(format!("omega: t must be >= 0, got {t}")));
    }
    if t == 0.0 {
        // Ĝ over the empty interval is zero; ω(0,s) = π(s) exactly.
        return Ok(LaplaceEvaluation {
            s,
            t,
            c1: None,
            g_hat: Complex64::new(0.0, 0.0),
            omega: init.pi_eval(s),
        });
    }
    let ctx = KernelContext::new(params, t)?;
    let gh = g_hat(&GHatSpec {
        lower: 0.0,
        upper: t,
        context: &ctx,
        s,
        tolerance: quad_tol,
    })?;
    let arg = pi_argument(t, s, params)?;
    let mut val = (-gh).exp() * init.pi_eval(arg);
    if let Some(f) = flux {
        val += (-gh).exp() * flux_integral(t, s, f, &ctx, quad_tol)?;
    }
    let c1 = if params.b > 0.0 {
        let phi_t = ctx.phi(t)?;
        let se = s * (params.b * t).exp();
        Some((Complex64::new(1.0, 0.0) - s * phi_t) / se)
    } else {
        None
    };
    Ok(LaplaceEvaluation {
        s,
        t,
        c1,
        g_hat: gh,
        omega: val,
    })
}

/// ∫₀^t f(τ) e^{Ĝ(0→τ)} dτ with f piecewise-constant on its grid panels.
fn flux_integral(
    t: f64,
    s: Complex64,
    flux: &FluxFunction,
    ctx: &KernelContext,
    quad_tol: f64,
) -> Result<Complex64> {
    let grid = flux.grid();
    if t > grid[grid.len() - 1] * (1.0 + 1e-12) {
        return Err(FpkError::Domain(format!(
            "flux grid ends at {}, omega requested at t = {t}",
            grid[grid.len() - 1]
        )));
    }
    let b = ctx.params().b;
    let c = ctx.params().c;
    let t_ref = ctx.t_ref();
    let gh_between = |lo: f64, hi: f64| -> Result<Complex64> {
        if c == 0.0 || lo >= hi {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let opts = QuadOptions {
            abs_tol: (quad_tol * 0.1).max(1e-13),
            max_segments: 800,
            breakpoints: boundary_layer_seeds(ctx, s, lo, hi),
        };
        Ok(integrate_complex(
            |mu| {
                let d = ctx.delta(mu).expect("delta in-range");
                c / (d + (b * (mu - t_ref)).exp() / s)
            },
            lo,
            hi,
            &opts,
        )?
        .value)
    };

    let mut total = Complex64::new(0.0, 0.0);
    let mut gh_edge = Complex64::new(0.0, 0.0);
    for k in 1..grid.len() {
        let lo = grid[k - 1];
        if lo >= t {
            break;
        }
        let hi = grid[k].min(t);
        let fk = flux.panel_value(k - 1);
        if fk != 0.0 {
            let opts = QuadOptions {
                abs_tol: (quad_tol * 0.5).max(1e-13),
                max_segments: 400,
                breakpoints: boundary_layer_seeds(ctx, s, lo, hi),
            };
            let panel = integrate_complex(
                |tau| {
                    let gap = gh_between(lo, tau).expect("gap quadrature");
                    (gh_edge + gap).exp()
                },
                lo,
                hi,
                &opts,
            )?;
            total += fk * panel.value;
        }
        gh_edge += gh_between(lo, hi)?;
    }
    Ok(total)
}

/// Finite-difference residual of the Laplace-domain PDE
/// ω_t + s(a t^{2v−1} s − b) ω_s + c s ω − f(t) at real s.
#[derive(Debug, Clone, Copy)]
pub struct PdeResidual {
    pub residual: f64,
    pub omega_norm: f64,
}

pub fn pde_residual(
    t: f64,
    s: f64,
    init: &InitialDistribution,
    flux: Option<&FluxFunction>,
    params: &FpkParams,
    step: f64,
    quad_tol: f64,
) -> Result<PdeResidual> {
    if !(t > step) {
        return Err(FpkError::Domain(format!(
            "pde_residual needs t > step, got t={t}, step={step}"
        )));
    }
    let ev = |tt: f64, ss: f64| -> Result<Complex64> {
        Ok(omega(tt, Complex64::new(ss, 0.0), init, flux, params, quad_tol)?.omega)
    };
    let w0 = ev(t, s)?;
    let dwdt = (ev(t + step, s)? - ev(t - step, s)?) / (2.0 * step);
    let dwds = (ev(t, s + step)? - ev(t, s - step)?) / (2.0 * step);
    let coeff = s * (params.diffusion_at(t) * s - params.b);
    let f_t = flux.map(|f| f.value_at(t)).unwrap_or(0.0);
    let res = dwdt + coeff * dwds + params.c * s * w0 - Complex64::new(f_t, 0.0);
    Ok(PdeResidual {
        residual: res.norm(),
        omega_norm: w0.norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::psi;

    fn rel_c(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    fn typical() -> FpkParams {
        FpkParams::new(1.0, 0.5, 0.3, 0.7).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(FpkParams::new(0.0, 0.0, 0.0, 0.5).is_err());
        assert!(FpkParams::new(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(FpkParams::new(1.0, -0.1, 0.0, 0.5).is_err());
        assert!(FpkParams::new(1.0, 0.0, 0.0, 0.5).is_ok());
    }

    #[test]
    fn pi_eval_point_mass() {
        let init = InitialDistribution::point_mass(1.0).unwrap();
        assert_eq!(init.pi_eval(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
        let init_half = InitialDistribution::point_mass(0.5).unwrap();
        let got = init_half.pi_eval(Complex64::new(2.0, 0.0));
        assert!(rel_c(got, Complex64::new((-1.0_f64).exp(), 0.0)) < 1e-15);
        // complex exponential: e^{−(1+i)} = e^{−1}(cos 1 − i sin 1)
        let got = init.pi_eval(Complex64::new(1.0, 1.0));
        let want = Complex64::new(
            (-1.0_f64).exp() * 1.0_f64.cos(),
            -(-1.0_f64).exp() * 1.0_f64.sin(),
        );
        assert!(rel_c(got, want) < 1e-15);
        assert!(InitialDistribution::point_mass(0.0).is_err());
    }

    #[test]
    fn pi_argument_trivial_and_limit() {
        let p = typical();
        let s = Complex64::new(3.2, 0.0);
        assert_eq!(pi_argument(0.0, s, &p).unwrap(), s);
        // s → ∞ limit is −1/Ψ(t)
        let limit = -1.0 / psi(1.0, &p).unwrap();
        let got = pi_argument(1.0, Complex64::new(1e8, 0.0), &p).unwrap();
        assert!((got.re - limit).abs() / limit < 1e-6);
    }

    #[test]
    fn pi_argument_reference_value() {
        let p = typical();
        let got = pi_argument(1.0, Complex64::new(2.0, 0.0), &p).unwrap();
        assert!((got.re - 1.1880832083193496).abs() < 1e-12);
        assert_eq!(got.im, 0.0);
    }

    #[test]
    fn g_hat_trivial_cases() {
        let p = typical();
        let ctx = KernelContext::new(&p, 1.0).unwrap();
        let spec = GHatSpec {
            lower: 0.4,
            upper: 0.4,
            context: &ctx,
            s: Complex64::new(2.0, 0.0),
            tolerance: 1e-10,
        };
        assert_eq!(g_hat(&spec).unwrap(), Complex64::new(0.0, 0.0));
        let p0 = FpkParams::new(1.0, 0.5, 0.0, 0.7).unwrap();
        let ctx0 = KernelContext::new(&p0, 1.0).unwrap();
        let spec0 = GHatSpec {
            lower: 0.0,
            upper: 1.0,
            context: &ctx0,
            s: Complex64::new(2.0, 0.0),
            tolerance: 1e-10,
        };
        assert_eq!(g_hat(&spec0).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn g_hat_reference_and_gl_cross_check() {
        let p = typical();
        let ctx = KernelContext::new(&p, 1.0).unwrap();
        let s = Complex64::new(2.0, 0.0);
        let spec = GHatSpec {
            lower: 0.0,
            upper: 1.0,
            context: &ctx,
            s,
            tolerance: 1e-11,
        };
        let adaptive = g_hat(&spec).unwrap();
        assert!((adaptive.re - 0.41231287057139639).abs() < 1e-10);
        // independent fixed-order Gauss-Legendre at doubled node counts
        let reference = crate::quad::fixed_gl_complex(
            |mu| {
                let d = ctx.delta(mu).unwrap();
                p.c / (d + (p.b * (mu - 1.0)).exp() / s)
            },
            0.0,
            1.0,
            128,
        );
        assert!((adaptive - reference).norm() < 1e-10);
    }

    #[test]
    fn omega_initial_condition_is_exact() {
        let p = typical();
        let init = InitialDistribution::point_mass(1.0).unwrap();
        for &s in &[0.5, 1.0, 4.0] {
            let sc = Complex64::new(s, 0.0);
            let ev = omega(0.0, sc, &init, None, &p, 1e-10).unwrap();
            assert_eq!(ev.omega, init.pi_eval(sc));
            assert_eq!(ev.g_hat, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn omega_reference_value() {
        let p = typical();
        let init = InitialDistribution::point_mass(1.0).unwrap();
        let ev = omega(1.0, Complex64::new(2.0, 0.0), &init, None, &p, 1e-12).unwrap();
        assert!((ev.omega.re - 0.20181656688028217).abs() < 1e-10);
        // real s, real data: imaginary part is identically zero
        assert_eq!(ev.omega.im, 0.0);
        // C₁ diagnostic present for b > 0
        assert!(ev.c1.is_some());
    }

    #[test]
    fn omega_norm_preservation_small_s() {
        let p = typical();
        let init = InitialDistribution::point_mass(1.0).unwrap();
        let ev = omega(1.0, Complex64::new(1e-8, 0.0), &init, None, &p, 1e-10).unwrap();
        assert!((ev.omega.re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pde_residual_reflecting() {
        let p = typical();
        let init = InitialDistribution::point_mass(1.0).unwrap();
        let r = pde_residual(1.0, 2.0, &init, None, &p, 1e-4, 1e-10).unwrap();
        assert!(r.residual <= 1e-5 * (1.0 + r.omega_norm), "residual {}", r.residual);
    }

    #[test]
    fn pde_residual_with_flux_term() {
        // the flux-mode ω must satisfy the inhomogeneous transform equation
        let p = FpkParams::new(1.0, 0.5, 0.2, 0.7).unwrap();
        let init = InitialDistribution::point_mass(1.0).unwrap();
        let flux = solve_flux(&uniform_grid(1.0, 64), &init, &p, &FluxSolverOptions::default())
            .unwrap();
        // stay inside one flux panel so the piecewise-constant f is smooth
        let t = 0.7265625; // 46.5/64
        let r = pde_residual(t, 1.5, &init, Some(&flux), &p, 1e-4, 1e-11).unwrap();
        assert!(
            r.residual <= 2e-4 * (1.0 + r.omega_norm),
            "flux-mode residual {}",
            r.residual
        );
    }

    #[test]
    fn g_hat_denominator_s_infinity_limit() {
        // dominated-convergence consistency: at s = 1e8 the denominator
        // differs from Δ(μ, t) by ≤ 1e-7 relative away from μ = t
        let p = typical();
        let ctx = KernelContext::new(&p, 1.0).unwrap();
        let s = Complex64::new(1e8, 0.0);
        for &mu in &[0.0, 0.2, 0.5, 0.8, 0.9] {
            let d = ctx.delta(mu).unwrap();
            let den = d + (p.b * (mu - 1.0)).exp() / s;
            assert!(
                (den.re - d).abs() / d <= 1e-7 && den.im.abs() / d <= 1e-7,
                "mu={mu}: {den} vs {d}"
            );
        }
    }

    #[test]
    fn pi_argument_singularity_detection() {
        // the denominator vanishes at real s = 1/(e^{bt} Ψ(t)) < 0
        let p = typical();
        let s_star = 1.0 / ((p.b * 1.0).exp() * psi(1.0, &p).unwrap());
        assert!(s_star < 0.0);
        let res = pi_argument(1.0, Complex64::new(s_star, 0.0), &p);
        assert!(matches!(res, Err(crate::error::FpkError::Singularity(_))));
    }

    #[test]
    fn boundary_limit_cases() {
        let init = InitialDistribution::point_mass(1.0).unwrap();
        // c = 0, b = 0, v = 1/2, t = 2: π(−1/Ψ) with Ψ = −2 gives e^{−1/2}
        let p0 = FpkParams::new(1.0, 0.0, 0.0, 0.5).unwrap();
        let lim = boundary_limit(2.0, &init, &p0).unwrap();
        assert!(!lim.diverged);
        assert!((lim.value - 0.60653065971263342).abs() < 1e-13);
        // c > 0: exponent diverges, value 0
        let pp = FpkParams::new(1.0, 0.5, 0.3, 0.7).unwrap();
        let lim = boundary_limit(1.0, &init, &pp).unwrap();
        assert!(lim.diverged);
        assert_eq!(lim.value, 0.0);
        // c < 0: +∞
        let pm = FpkParams::new(1.0, 0.5, -0.3, 0.7).unwrap();
        let lim = boundary_limit(1.0, &init, &pm).unwrap();
        assert!(lim.diverged && lim.value.is_infinite());
    }
}
