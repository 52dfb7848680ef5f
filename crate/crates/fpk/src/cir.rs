//! Cox-Ingersoll-Ross under fractional Brownian motion: parameter mapping
//! onto the forward-equation constants and the transition density of
//! S_T given S_t.
//!
//! The substitution list is mirrored verbatim: a := Hσ², v := H,
//! b := r − Hσ², c := −h, ξ := S_t, t := ΔT. Note that the drift derivation
//! µ = rS − (aS + h) reads the `a` in the dividend stream b(S,t) = aS + h as
//! the same constant as Hσ²; we follow that identification rather than
//! silently correcting it. ΔT is the Laplace-domain time variable; the
//! numeric value is substituted after inversion.

use crate::error::{FpkError, Result};
use crate::invert::InversionConfig;
use crate::laplace::{FpkParams, InitialDistribution};
use crate::solver::{density_curve, DensityCurve, Mode, SolverOptions};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CirParams {
    /// Hurst parameter H ∈ (0, 1).
    pub hurst: f64,
    /// Volatility σ > 0.
    pub sigma: f64,
    /// Risk-free rate r.
    pub rate: f64,
    /// Dividend intercept h in b(S,t) = aS + h.
    pub dividend_h: f64,
    /// Current price S_t > 0.
    pub s_t: f64,
    /// Horizon ΔT = T − t > 0.
    pub delta_t: f64,
}

impl CirParams {
    pub fn new(
        hurst: f64,
        sigma: f64,
        rate: f64,
        dividend_h: f64,
        s_t: f64,
        delta_t: f64,
    ) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(FpkError::Domain(format!(
                "hurst must be in (0,1), got {hurst}"
            )));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(FpkError::Domain(format!("sigma must be positive, got {sigma}")));
        }
        if !rate.is_finite() || !dividend_h.is_finite() {
            return Err(FpkError::Domain("rate and dividend_h must be finite".into()));
        }
        if !(s_t > 0.0) || !s_t.is_finite() {
            return Err(FpkError::Domain(format!("s_t must be positive, got {s_t}")));
        }
        if !(delta_t > 0.0) || !delta_t.is_finite() {
            return Err(FpkError::Domain(format!(
                "delta_t must be positive, got {delta_t}"
            )));
        }
        Ok(Self {
            hurst,
            sigma,
            rate,
            dividend_h,
            s_t,
            delta_t,
        })
    }
}

/// Map market parameters to the forward-equation constants; returns
/// (params, ξ, t) = (FpkParams, S_t, ΔT).
pub fn map_cir_to_fpk(p: &CirParams) -> Result<(FpkParams, f64, f64)> {
    let a = p.hurst * p.sigma * p.sigma;
    let b = p.rate - a;
    if b < 0.0 {
        return Err(FpkError::Unsupported(format!(
            "mapped drift slope b = r − Hσ² = {b} < 0 is outside the supported regime"
        )));
    }
    let params = FpkParams::new(a, b, -p.dividend_h, p.hurst)?;
    Ok((params, p.s_t, p.delta_t))
}

/// Transition density P(S_T | S_t) on `s_t_grid`, delegated to the solver
/// with π(s) = e^{−s S_t}.
pub fn cir_transition_density(
    p: &CirParams,
    s_t_grid: &[f64],
    mode: Mode,
    inv: &InversionConfig,
    opts: &SolverOptions,
) -> Result<DensityCurve> {
    let (params, xi, t) = map_cir_to_fpk(p)?;
    let init = InitialDistribution::point_mass(xi)?;
    density_curve(t, s_t_grid, &init, mode, &params, inv, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::feller_v_half_density;
    use crate::solver::geometric_grid;

    #[test]
    fn mapping_follows_substitution_list() {
        let p = CirParams::new(0.5, 0.2, 0.05, 0.0, 1.0, 1.0).unwrap();
        let (fpk, xi, t) = map_cir_to_fpk(&p).unwrap();
        assert!((fpk.a - 0.02).abs() < 1e-15);
        assert_eq!(fpk.v, 0.5);
        assert!((fpk.b - 0.03).abs() < 1e-15);
        assert_eq!(fpk.c, 0.0);
        assert_eq!(xi, 1.0);
        assert_eq!(t, 1.0);

        let p = CirParams::new(0.7, 0.1, 0.05, 0.01, 2.0, 0.5).unwrap();
        let (fpk, _, _) = map_cir_to_fpk(&p).unwrap();
        assert!((fpk.a - 0.007).abs() < 1e-15);
        assert_eq!(fpk.v, 0.7);
        assert!((fpk.b - 0.043).abs() < 1e-15);
        assert_eq!(fpk.c, -0.01);
    }

    #[test]
    fn regime_gate_rejects_negative_b() {
        // Hσ² = 0.7 · 0.25 = 0.175 > r = 0.05
        let p = CirParams::new(0.7, 0.5, 0.05, 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            map_cir_to_fpk(&p),
            Err(crate::error::FpkError::Unsupported(_))
        ));
    }

    #[test]
    fn parameter_validation() {
        assert!(CirParams::new(1.0, 0.2, 0.05, 0.0, 1.0, 1.0).is_err());
        assert!(CirParams::new(0.5, 0.0, 0.05, 0.0, 1.0, 1.0).is_err());
        assert!(CirParams::new(0.5, 0.2, 0.05, 0.0, 0.0, 1.0).is_err());
        assert!(CirParams::new(0.5, 0.2, 0.05, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn delegation_is_exact() {
        // the density must be byte-identical to the solver run with mapped
        // parameters; this pins the no-reimplementation contract
        let p = CirParams::new(0.7, 0.3, 0.08, -0.01, 1.0, 1.0).unwrap();
        let grid = geometric_grid(0.1, 5.0, 12);
        let inv = InversionConfig::default();
        let opts = SolverOptions {
            boundary_diagnostic: false,
            ..SolverOptions::default()
        };
        let via_cir = cir_transition_density(&p, &grid, Mode::Reflecting, &inv, &opts).unwrap();
        let (fpk, xi, t) = map_cir_to_fpk(&p).unwrap();
        let init = InitialDistribution::point_mass(xi).unwrap();
        let direct = density_curve(t, &grid, &init, Mode::Reflecting, &fpk, &inv, &opts).unwrap();
        for i in 0..grid.len() {
            assert_eq!(via_cir.u[i], direct.u[i]);
        }
    }

    #[test]
    fn h_half_matches_classical_cir_law() {
        // H = 1/2 with h < 0 (so c = −h > 0) is the classical CIR density
        let p = CirParams::new(0.5, 0.3, 0.05, -0.02, 1.0, 1.0).unwrap();
        let (fpk, xi, t) = map_cir_to_fpk(&p).unwrap();
        let grid = geometric_grid(0.4, 2.5, 10);
        let curve = cir_transition_density(
            &p,
            &grid,
            Mode::Reflecting,
            &InversionConfig::default(),
            &SolverOptions {
                boundary_diagnostic: false,
                ..SolverOptions::default()
            },
        )
        .unwrap();
        for (i, &x) in grid.iter().enumerate() {
            let oracle = feller_v_half_density(t, x, xi, &fpk).unwrap();
            let rel = (curve.u[i] - oracle).abs() / oracle;
            assert!(rel < 2e-3, "x={x}: {} vs {oracle}", curve.u[i]);
        }
    }
}
