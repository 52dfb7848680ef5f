//! Method-of-characteristics oracle for the transform equation
//! ω_t + s(a t^{2v−1} s − b) ω_s = −c s ω.
//!
//! Along a characteristic, z = 1/s obeys the linear ODE z' = b z − a t^{2v−1}
//! and ω obeys ω' = −(c/z) ω. Because z(t) is affine in its initial value z₀,
//! no root-finding is needed to land on a target (t, s): one probe run with
//! z₀ = 0 yields the inhomogeneous part A(t), then z₀ = (1/s + A) e^{−bt}.
//! The integration never references the incomplete-gamma solution, so
//! agreement with the quadrature route is a genuine two-route check.

use num_complex::Complex64;

use crate::error::{FpkError, Result};
use crate::laplace::{FpkParams, InitialDistribution};

/// Dormand-Prince 5(4) step for y' = f(t, y) on a 2-vector of complex state.
struct Dp54<F> {
    f: F,
    rtol: f64,
    atol: f64,
}

type State = [Complex64; 2];

impl<F: Fn(f64, &State) -> State> Dp54<F> {
    fn integrate(&self, t0: f64, t1: f64, y0: State) -> Result<State> {
        const A21: f64 = 1.0 / 5.0;
        const A31: f64 = 3.0 / 40.0;
        const A32: f64 = 9.0 / 40.0;
        const A41: f64 = 44.0 / 45.0;
        const A42: f64 = -56.0 / 15.0;
        const A43: f64 = 32.0 / 9.0;
        const A51: f64 = 19372.0 / 6561.0;
        const A52: f64 = -25360.0 / 2187.0;
        const A53: f64 = 64448.0 / 6561.0;
        const A54: f64 = -212.0 / 729.0;
        const A61: f64 = 9017.0 / 3168.0;
        const A62: f64 = -355.0 / 33.0;
        const A63: f64 = 46732.0 / 5247.0;
        const A64: f64 = 49.0 / 176.0;
        const A65: f64 = -5103.0 / 18656.0;
        const B1: f64 = 35.0 / 384.0;
        const B3: f64 = 500.0 / 1113.0;
        const B4: f64 = 125.0 / 192.0;
        const B5: f64 = -2187.0 / 6784.0;
        const B6: f64 = 11.0 / 84.0;
        // embedded 4th-order weights
        const E1: f64 = 5179.0 / 57600.0;
        const E3: f64 = 7571.0 / 16695.0;
        const E4: f64 = 393.0 / 640.0;
        const E5: f64 = -92097.0 / 339200.0;
        const E6: f64 = 187.0 / 2100.0;
        const E7: f64 = 1.0 / 40.0;
        const C2: f64 = 1.0 / 5.0;
        const C3: f64 = 3.0 / 10.0;
        const C4: f64 = 4.0 / 5.0;
        const C5: f64 = 8.0 / 9.0;

        let lin = |y: &State, terms: &[(f64, &State)]| -> State {
            let mut out = *y;
            for (c, k) in terms {
                out[0] += *c * k[0];
                out[1] += *c * k[1];
            }
            out
        };

        let mut t = t0;
        let mut y = y0;
        let mut h = ((t1 - t0) * 1e-4).max(1e-12);
        let mut steps = 0usize;
        while t < t1 {
            if steps > 2_000_000 {
                return Err(FpkError::Convergence(
                    "characteristic ODE exceeded step budget".into(),
                ));
            }
            steps += 1;
            h = h.min(t1 - t);
            let k1 = (self.f)(t, &y);
            let k2 = (self.f)(t + C2 * h, &lin(&y, &[(h * A21, &k1)]));
            let k3 = (self.f)(t + C3 * h, &lin(&y, &[(h * A31, &k1), (h * A32, &k2)]));
            let k4 = (self.f)(
                t + C4 * h,
                &lin(&y, &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)]),
            );
            let k5 = (self.f)(
                t + C5 * h,
                &lin(
                    &y,
                    &[(h * A51, &k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)],
                ),
            );
            let k6 = (self.f)(
                t + h,
                &lin(
                    &y,
                    &[
                        (h * A61, &k1),
                        (h * A62, &k2),
                        (h * A63, &k3),
                        (h * A64, &k4),
                        (h * A65, &k5),
                    ],
                ),
            );
            let y5 = lin(
                &y,
                &[
                    (h * B1, &k1),
                    (h * B3, &k3),
                    (h * B4, &k4),
                    (h * B5, &k5),
                    (h * B6, &k6),
                ],
            );
            let k7 = (self.f)(t + h, &y5);
            let y4 = lin(
                &y,
                &[
                    (h * E1, &k1),
                    (h * E3, &k3),
                    (h * E4, &k4),
                    (h * E5, &k5),
                    (h * E6, &k6),
                    (h * E7, &k7),
                ],
            );
            let mut err: f64 = 0.0;
            for i in 0..2 {
                let scale = self.atol + self.rtol * y5[i].norm().max(y[i].norm());
                err = err.max((y5[i] - y4[i]).norm() / scale);
            }
            if err <= 1.0 {
                t += h;
                y = y5;
            }
            let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
            h *= factor;
            if h < 1e-16 * (t1 - t0) {
                return Err(FpkError::Convergence(
                    "characteristic ODE step size underflow".into(),
                ));
            }
        }
        Ok(y)
    }
}

/// ω(t, s) for the reflecting (f ≡ 0) solution by direct ODE integration
/// along the characteristic landing at (t, s).
pub fn omega_characteristic(
    t: f64,
    s: Complex64,
    init: &InitialDistribution,
    params: &FpkParams,
    rtol: f64,
) -> Result<Complex64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(FpkError::Domain(format!(
            "omega_characteristic: t must be positive, got {t}"
        )));
    }
    if s.norm() == 0.0 {
        return Err(FpkError::Domain("omega_characteristic: s must be nonzero".into()));
    }
    let (a, b, c, v) = (params.a, params.b, params.c, params.v);
    let q = 2.0 * v;
    let rhs = move |tt: f64, y: &State| -> State {
        let dz = y[0] * b - Complex64::new(a * tt.powf(q - 1.0), 0.0);
        let dw = -(y[1] * c) / y[0];
        [dz, dw]
    };
    let stepper = Dp54 {
        f: rhs,
        rtol,
        atol: 1e-14,
    };

    // Series start below t0 where t^{2v−1} may be singular:
    // z(t0) = z0 (1 + b t0 + (b t0)²/2) − a (1 + b t0)(t0^{2v}/(2v) − b t0^{2v+1}/(2v+1)).
    let t0 = 1e-8_f64.min(t * 1e-4);
    let series = |z0: Complex64| -> Complex64 {
        let drift = 1.0 + b * t0 + 0.5 * (b * t0) * (b * t0);
        let inhom = a * (1.0 + b * t0) * (t0.powf(q) / q - b * t0.powf(q + 1.0) / (q + 1.0));
        z0 * drift - inhom
    };

    // probe run: z0 = 0 gives z(t) = −A(t)
    let probe = stepper.integrate(
        t0,
        t,
        [series(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0)],
    )?;
    let a_t = -probe[0];
    let z0 = (1.0 / s + a_t) * (-b * t).exp();
    if z0.norm() == 0.0 {
        return Err(FpkError::Singularity(
            "characteristic initial value z0 vanished".into(),
        ));
    }

    // real run: ω(t0) = π(1/z0) e^{−c t0 / z0}
    let w0 = init.pi_eval(1.0 / z0) * (-c * t0 / z0).exp();
    let out = stepper.integrate(t0, t, [series(z0), w0])?;
    let landing = (out[0] - 1.0 / s).norm() / (1.0 / s).norm();
    if landing > 1e-6 {
        return Err(FpkError::Convergence(format!(
            "characteristic failed to land on target s (relative miss {landing:.3e})"
        )));
    }
    Ok(out[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_quadrature_route() {
        let p = FpkParams::new(1.0, 0.5, 0.3, 0.7).unwrap();
        let init = InitialDistribution::point_mass(1.0).unwrap();
        let w = omega_characteristic(1.0, Complex64::new(2.0, 0.0), &init, &p, 1e-11).unwrap();
        assert!((w.re - 0.20181656688028217).abs() < 1e-9, "{w}");
        assert!(w.im.abs() < 1e-12);
    }

    #[test]
    fn handles_singular_coefficient_v_below_half() {
        // t^{2v−1} is singular at t = 0 for v < 1/2; the series start must cope
        let p = FpkParams::new(0.5, 1.0, 0.2, 0.3).unwrap();
        let init = InitialDistribution::point_mass(1.0).unwrap();
        let w = omega_characteristic(0.5, Complex64::new(1.0, 0.0), &init, &p, 1e-10).unwrap();
        assert!(w.re > 0.0 && w.re < 1.0);
    }

    #[test]
    fn short_horizon_approaches_initial_transform() {
        let p = FpkParams::new(1.0, 0.5, 0.3, 0.7).unwrap();
        let init = InitialDistribution::point_mass(1.0).unwrap();
        let s = Complex64::new(2.0, 0.0);
        let w = omega_characteristic(1e-4, s, &init, &p, 1e-10).unwrap();
        assert!((w - init.pi_eval(s)).norm() < 1e-3);
    }
}
