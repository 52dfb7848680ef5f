//! Quadrature: globally adaptive 15-point Gauss-Kronrod for complex-valued
//! integrands on real intervals, plus fixed-order Gauss-Legendre rules.

use num_complex::Complex64;
use once_cell::sync::Lazy;
use std::collections::BinaryHeap;
use std::sync::Mutex;

use crate::error::{FpkError, Result};

/// 15-point Kronrod abscissae on [0, 1] side (symmetric), QUADPACK qk15.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

/// 7-point Gauss weights for the embedded rule (odd Kronrod indices).
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: Complex64,
    pub error: f64,
    pub segments: usize,
}

#[derive(Debug, Clone)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub max_segments: usize,
    /// Interior breakpoints used to seed the subdivision (sorted or not).
    pub breakpoints: Vec<f64>,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_segments: 2000,
            breakpoints: Vec::new(),
        }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

/// One Gauss-Kronrod pass over [a, b]; returns (kronrod value, error estimate).
fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = fc.norm() * WGK[7];
    let mut fv = [Complex64::new(0.0, 0.0); 14];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[j] = f1;
        fv[13 - j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.norm() + f2.norm());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = kronrod * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).norm();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).norm() + (fv[13 - j] - mean).norm());
    }
    res_asc *= half.abs();
    res_abs *= half.abs();
    let raw_err = ((kronrod - gauss) * half).norm();
    // QUADPACK error rescaling
    let mut err = raw_err;
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (kronrod * half, err)
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integral of a complex-valued `f` over [a, b].
///
/// Splits the worst segment until the summed error estimate falls below
/// `abs_tol` or the segment budget runs out (then `QuadratureFailure` with
/// the achieved estimate).
pub fn integrate_complex<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            segments: 0,
        });
    }
    let mut edges: Vec<f64> = vec![a, b];
    for &p in &opts.breakpoints {
        if p > a && p < b {
            edges.push(p);
        }
    }
    edges.sort_by(|x, y| x.total_cmp(y));
    edges.dedup();

    let mut heap = BinaryHeap::new();
    let mut total = Complex64::new(0.0, 0.0);
    let mut total_err = 0.0;
    for w in edges.windows(2) {
        let (v, e) = gk15(&f, w[0], w[1]);
        total += v;
        total_err += e;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }

    while total_err > opts.abs_tol && heap.len() < opts.max_segments {
        let worst = heap.pop().expect("heap nonempty while error positive");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval at roundoff resolution; keep as-is
            total_err -= worst.error;
            total += Complex64::new(0.0, 0.0);
            heap.push(Segment {
                error: 0.0,
                ..worst
            });
            continue;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }

    if total_err > opts.abs_tol {
        return Err(FpkError::QuadratureFailure {
            requested: opts.abs_tol,
            achieved: total_err,
            segments: heap.len(),
        });
    }
    Ok(Quadrature {
        value: total,
        error: total_err,
        segments: heap.len(),
    })
}

/// Real-valued convenience wrapper over [`integrate_complex`].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Quadrature> {
    integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, opts)
}

/// Gauss-Legendre nodes and weights on [-1, 1], Newton iteration on P_n.
fn gl_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev-style initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n(x) and P_n'(x) by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

static GL_CACHE: Lazy<Mutex<std::collections::HashMap<usize, std::sync::Arc<(Vec<f64>, Vec<f64>)>>>> =
    Lazy::new(|| Mutex::new(std::collections::HashMap::new()));

/// Cached Gauss-Legendre rule of order `n` on [-1, 1].
pub fn gauss_legendre(n: usize) -> std::sync::Arc<(Vec<f64>, Vec<f64>)> {
    let mut cache = GL_CACHE.lock().expect("GL cache poisoned");
    cache
        .entry(n)
        .or_insert_with(|| std::sync::Arc::new(gl_rule(n)))
        .clone()
}

/// Fixed n-point Gauss-Legendre integral of a complex integrand over [a, b].
pub fn fixed_gl_complex<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, n: usize) -> Complex64 {
    let rule = gauss_legendre(n);
    let (nodes, weights) = (&rule.0, &rule.1);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in nodes.iter().zip(weights.iter()) {
        acc += *w * f(c + h * x);
    }
    acc * h
}

/// Fixed n-point Gauss-Legendre integral of a real integrand over [a, b].
pub fn fixed_gl<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    fixed_gl_complex(|x| Complex64::new(f(x), 0.0), a, b, n).re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_trig() {
        let opts = QuadOptions::with_tol(1e-12);
        let q = integrate(|x| x * x, 0.0, 1.0, &opts).unwrap();
        assert!((q.value.re - 1.0 / 3.0).abs() < 1e-13);
        let q = integrate(f64::sin, 0.0, std::f64::consts::PI, &opts).unwrap();
        assert!((q.value.re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn complex_integrand() {
        let opts = QuadOptions::with_tol(1e-12);
        let q = integrate_complex(|x| Complex64::new(0.0, x).exp(), 0.0, 1.0, &opts).unwrap();
        assert!((q.value.re - 1.0_f64.sin()).abs() < 1e-12);
        assert!((q.value.im - (1.0 - 1.0_f64.cos())).abs() < 1e-12);
    }

    #[test]
    fn breakpoints_help_kinks() {
        let opts = QuadOptions {
            abs_tol: 1e-12,
            max_segments: 100,
            breakpoints: vec![0.5],
        };
        let q = integrate(|x| (x - 0.5).abs(), 0.0, 1.0, &opts).unwrap();
        assert!((q.value.re - 0.25).abs() < 1e-13);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let opts = QuadOptions {
            abs_tol: 1e-14,
            max_segments: 8,
            breakpoints: vec![],
        };
        let res = integrate(|x| x.abs().powf(-0.9), 1e-300, 1.0, &opts);
        match res {
            Err(crate::error::FpkError::QuadratureFailure { achieved, .. }) => {
                assert!(achieved > 1e-14);
            }
            other => panic!("expected quadrature failure, got {other:?}"),
        }
    }

    #[test]
    fn empty_interval_is_zero() {
        let q = integrate(|_| 1.0, 2.0, 2.0, &QuadOptions::default()).unwrap();
        assert_eq!(q.value.re, 0.0);
    }

    #[test]
    fn gauss_legendre_exactness() {
        // n-point rule integrates degree 2n−1 exactly
        let val = fixed_gl(|x| x.powi(7) + x.powi(3) - 2.0 * x + 1.0, -1.0, 1.0, 4);
        assert!((val - 2.0).abs() < 1e-14);
        let val = fixed_gl(|x| x.powi(5), 0.0, 1.0, 3);
        assert!((val - 1.0 / 6.0).abs() < 1e-14);
    }
}
