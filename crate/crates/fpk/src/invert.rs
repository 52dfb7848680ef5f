//! Numerical inverse Laplace transform.
//!
//! Two independent families are kept on purpose: the transform being
//! inverted is itself quadrature-produced, so cross-agreement between a
//! complex-contour method (fixed Talbot) and a real-axis method
//! (Gaver-Stehfest) is the only practical error certificate. Disagreement is
//! flagged, never silently averaged away.

use num_complex::Complex64;

use crate::error::{FpkError, Result};

/// Method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InversionMethod {
    Talbot,
    Stehfest,
    Both,
}

#[derive(Debug, Clone)]
pub struct InversionConfig {
    pub method: InversionMethod,
    pub talbot_nodes: usize,
    pub stehfest_terms: usize,
    /// Relative Talbot/Stehfest disagreement above which a flag is raised.
    pub cross_check_tolerance: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            method: InversionMethod::Both,
            talbot_nodes: 48,
            stehfest_terms: 16,
            cross_check_tolerance: 1e-4,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.talbot_nodes < 16 {
            return Err(FpkError::Domain(format!(
                "talbot_nodes must be >= 16, got {}",
                self.talbot_nodes
            )));
        }
        if self.stehfest_terms % 2 != 0 || self.stehfest_terms == 0 {
            return Err(FpkError::Domain(format!(
                "stehfest_terms must be even and positive, got {}",
                self.stehfest_terms
            )));
        }
        if self.stehfest_terms > 20 {
            return Err(FpkError::Domain(format!(
                "stehfest_terms > 20 rejected in double precision, got {}",
                self.stehfest_terms
            )));
        }
        if !(self.cross_check_tolerance > 0.0) {
            return Err(FpkError::Domain("cross_check_tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionFlag {
    /// Talbot/Stehfest relative spread above the configured tolerance.
    MethodDisagreement,
    /// The combined estimate came out negative.
    NegativeValue,
    /// One of the selected methods failed; the value comes from the other.
    MethodFailure,
}

#[derive(Debug, Clone)]
pub struct InversionResult {
    /// The reported estimate (Talbot when both methods ran).
    pub value: f64,
    pub method_values: Vec<(InversionMethod, f64)>,
    /// Max pairwise relative difference of the method values.
    pub discrepancy: f64,
    pub flags: Vec<InversionFlag>,
}

/// Fixed-Talbot inversion (Abate-Valkó): M nodes on the contour
/// s(θ) = r θ(cot θ + i), r = 2M/(5x).
///
/// Requires the transform analytic for Re(s) > 0 with singularities confined
/// to the negative real axis — true for ω in the supported regime b ≥ 0,
/// where 1 − s e^{bt} Ψ(t) has its zero at real s < 0 and the Ĝ denominator
/// vanishes only on the negative real axis.
pub fn invert_talbot<F>(transform: F, x: f64, nodes: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if !(x > 0.0) || !x.is_finite() {
        return Err(FpkError::Domain(format!(
            "invert_talbot: x must be positive, got {x}"
        )));
    }
    if nodes < 2 {
        return Err(FpkError::Domain("invert_talbot: need at least 2 nodes".into()));
    }
    let m = nodes as f64;
    let r = 2.0 * m / (5.0 * x);
    let mut acc = 0.5 * (r * x).exp() * transform(Complex64::new(r, 0.0))?.re;
    for k in 1..nodes {
        let theta = k as f64 * std::f64::consts::PI / m;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let term = (s * x).exp() * transform(s)? * Complex64::new(1.0, sigma);
        acc += term.re;
    }
    if !acc.is_finite() {
        return Err(FpkError::Convergence(format!(
            "talbot contour evaluation produced a non-finite sum at x = {x} \
             (transform grows on the left half-plane)"
        )));
    }
    Ok(acc * r / m)
}

/// Gaver-Stehfest weights V_k for an even number of terms.
pub fn stehfest_weights(terms: usize) -> Result<Vec<f64>> {
    if terms % 2 != 0 || terms == 0 {
        return Err(FpkError::Domain(format!(
            "stehfest terms must be even and positive, got {terms}"
        )));
    }
    if terms > 20 {
        return Err(FpkError::Domain(format!(
            "stehfest terms > 20 rejected in double precision, got {terms}"
        )));
    }
    let half = terms / 2;
    let fact = |n: usize| -> f64 { (1..=n).map(|i| i as f64).product() };
    let mut weights = Vec::with_capacity(terms);
    for k in 1..=terms {
        let mut sum = 0.0;
        for j in (k + 1) / 2..=k.min(half) {
            sum += (j as f64).powi(half as i32) * fact(2 * j)
                / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
        }
        let sign = if (half + k) % 2 == 0 { 1.0 } else { -1.0 };
        weights.push(sign * sum);
    }
    Ok(weights)
}

/// Gaver-Stehfest inversion from real-axis samples s = k ln2/x.
pub fn invert_stehfest<F>(transform: F, x: f64, terms: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(x > 0.0) || !x.is_finite() {
        return Err(FpkError::Domain(format!(
            "invert_stehfest: x must be positive, got {x}"
        )));
    }
    let weights = stehfest_weights(terms)?;
    let ln2 = std::f64::consts::LN_2;
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w * transform((k as f64 + 1.0) * ln2 / x)?;
    }
    Ok(acc * ln2 / x)
}

/// Combined inversion honoring the configured method selection.
///
/// With `Both`, the reported value is the Talbot estimate and the relative
/// spread between methods is computed; a spread above
/// `cross_check_tolerance` raises [`InversionFlag::MethodDisagreement`].
pub fn invert<F>(transform: F, x: f64, config: &InversionConfig) -> Result<InversionResult>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    config.validate()?;
    let mut method_values = Vec::new();
    let mut errors = Vec::new();

    if matches!(config.method, InversionMethod::Talbot | InversionMethod::Both) {
        match invert_talbot(&transform, x, config.talbot_nodes) {
            Ok(v) => method_values.push((InversionMethod::Talbot, v)),
            Err(e) => errors.push(e),
        }
    }
    if matches!(config.method, InversionMethod::Stehfest | InversionMethod::Both) {
        match invert_stehfest(
            |s| Ok(transform(Complex64::new(s, 0.0))?.re),
            x,
            config.stehfest_terms,
        ) {
            Ok(v) => method_values.push((InversionMethod::Stehfest, v)),
            Err(e) => errors.push(e),
        }
    }
    if method_values.is_empty() {
        return Err(errors
            .pop()
            .unwrap_or_else(|| FpkError::Domain("no inversion method selected".into())));
    }

    let value = method_values[0].1;
    let mut discrepancy = 0.0;
    for i in 0..method_values.len() {
        for j in i + 1..method_values.len() {
            let (a, b) = (method_values[i].1, method_values[j].1);
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                discrepancy = f64::max(discrepancy, (a - b).abs() / scale);
            }
        }
    }
    let mut flags = Vec::new();
    if method_values.len() > 1 && discrepancy > config.cross_check_tolerance {
        flags.push(InversionFlag::MethodDisagreement);
    }
    if value < 0.0 {
        flags.push(InversionFlag::NegativeValue);
    }
    if !errors.is_empty() {
        flags.push(InversionFlag::MethodFailure);
    }
    Ok(InversionResult {
        value,
        method_values,
        discrepancy,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_transform(s: Complex64) -> Complex64 {
        1.0 / s
    }

    #[test]
    fn talbot_analytic_pairs() {
        let got = invert_talbot(|s| Ok(step_transform(s)), 1.0, 48).unwrap();
        assert!((got - 1.0).abs() < 1e-8);
        let got = invert_talbot(|s| Ok(1.0 / (s * s)), 2.5, 48).unwrap();
        assert!((got - 2.5).abs() < 1e-8);
        let got = invert_talbot(|s| Ok(1.0 / (s + 1.0)), 1.0, 48).unwrap();
        assert!((got - (-1.0_f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn stehfest_analytic_pairs() {
        let got = invert_stehfest(|s| Ok(1.0 / s), 3.0, 16).unwrap();
        assert!((got - 1.0).abs() < 1e-6);
        let got = invert_stehfest(|s| Ok(1.0 / (s * s)), 0.5, 16).unwrap();
        assert!((got - 0.5).abs() < 1e-6);
        let got = invert_stehfest(|s| Ok(1.0 / (s + 1.0)), 1.0, 16).unwrap();
        assert!((got - (-1.0_f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn delayed_step_behavior() {
        // e^{−s}/s is the unit step at x = 1. The transform grows on the left
        // half-plane for x < 1, so Talbot fails there (reported, not NaN) and
        // the combined inverter falls back to Stehfest; past the jump Talbot
        // is accurate and the discrepancy flag fires off Stehfest's smoothing.
        let transform = |s: Complex64| Ok((-s).exp() / s);
        assert!(invert_talbot(transform, 0.5, 48).is_err());
        let cfg = InversionConfig::default();
        let lo = invert(transform, 0.5, &cfg).unwrap();
        assert!(lo.flags.contains(&InversionFlag::MethodFailure));
        assert!(lo.value.abs() < 0.05, "before the step: {}", lo.value);
        let hi = invert(transform, 2.0, &cfg).unwrap();
        assert!((hi.value - 1.0).abs() < 1e-6, "after the step: {}", hi.value);
    }

    #[test]
    fn stehfest_weights_identity() {
        // Σ V_k / k = 1 (the rule is exact on 1/s); the weights reach ~1e7,
        // so the identity holds to the corresponding roundoff scale
        for terms in [8, 12, 16, 20] {
            let w = stehfest_weights(terms).unwrap();
            let sum: f64 = w.iter().enumerate().map(|(k, v)| v / (k as f64 + 1.0)).sum();
            let scale: f64 = w.iter().map(|v| v.abs()).sum();
            assert!(
                (sum - 1.0).abs() < 1e-13 * scale.max(1e7),
                "terms={terms}: {sum}"
            );
        }
    }

    #[test]
    fn stehfest_guards() {
        assert!(stehfest_weights(15).is_err());
        assert!(stehfest_weights(22).is_err());
        assert!(invert_stehfest(|_| Ok(1.0), 0.0, 16).is_err());
    }

    #[test]
    fn linearity_on_battery() {
        let f = |s: Complex64| 1.0 / (s + 1.0);
        let g = |s: Complex64| 1.0 / (s * s);
        let (alpha, beta) = (2.0, -0.75);
        for &x in &[0.4, 1.0, 3.0] {
            // exact up to summation roundoff: ≤ 1e-9 at M = 32; the M = 48
            // contour carries an e^{2M/5} ≈ 2e8 amplification, so only ~1e-8
            let combined = invert_talbot(|s| Ok(alpha * f(s) + beta * g(s)), x, 32).unwrap();
            let separate = alpha * invert_talbot(|s| Ok(f(s)), x, 32).unwrap()
                + beta * invert_talbot(|s| Ok(g(s)), x, 32).unwrap();
            assert!((combined - separate).abs() < 1e-9);
            let combined48 = invert_talbot(|s| Ok(alpha * f(s) + beta * g(s)), x, 48).unwrap();
            let separate48 = alpha * invert_talbot(|s| Ok(f(s)), x, 48).unwrap()
                + beta * invert_talbot(|s| Ok(g(s)), x, 48).unwrap();
            assert!((combined48 - separate48).abs() < 1e-7);
            let combined =
                invert_stehfest(|s| Ok(alpha * f(Complex64::new(s, 0.0)).re
                    + beta * g(Complex64::new(s, 0.0)).re), x, 16)
                .unwrap();
            let separate = alpha
                * invert_stehfest(|s| Ok(f(Complex64::new(s, 0.0)).re), x, 16).unwrap()
                + beta * invert_stehfest(|s| Ok(g(Complex64::new(s, 0.0)).re), x, 16).unwrap();
            // Stehfest linearity is exact in exact arithmetic; in f64 it holds
            // to the summation conditioning Σ|V_k F_k| ln2/x, not to 1e-9
            let ln2 = std::f64::consts::LN_2;
            let condition: f64 = stehfest_weights(16)
                .unwrap()
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let s = (k as f64 + 1.0) * ln2 / x;
                    let fv = alpha * f(Complex64::new(s, 0.0)).re
                        + beta * g(Complex64::new(s, 0.0)).re;
                    (v * fv).abs()
                })
                .sum::<f64>()
                * ln2
                / x;
            assert!((combined - separate).abs() < 100.0 * f64::EPSILON * condition);
        }
    }

    #[test]
    fn combined_inversion_cross_checks() {
        let config = InversionConfig::default();
        let res = invert(|s| Ok(1.0 / (s + 1.0)), 1.0, &config).unwrap();
        assert_eq!(res.method_values.len(), 2);
        assert!(res.discrepancy < 1e-5);
        assert!(res.flags.is_empty());
        // a transform the two methods disagree on: oscillatory at large x
        let res = invert(|s| Ok(1.0 / (s * s + 1.0)), 9.0, &config).unwrap();
        assert!(res.flags.contains(&InversionFlag::MethodDisagreement));
    }

    #[test]
    fn config_validation() {
        let mut cfg = InversionConfig::default();
        cfg.talbot_nodes = 8;
        assert!(cfg.validate().is_err());
        cfg = InversionConfig::default();
        cfg.stehfest_terms = 7;
        assert!(cfg.validate().is_err());
        cfg = InversionConfig::default();
        cfg.stehfest_terms = 24;
        assert!(cfg.validate().is_err());
    }
}
