//! Two-sided one-sample Kolmogorov-Smirnov statistic.

use crate::error::{FpkError, Result};

/// sup_x |F_n(x) − F(x)| for samples against a model CDF.
///
/// Requires at least 1000 samples (the regime the validation thresholds are
/// calibrated for) and a CDF monotone over the sample range.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.len() < 1000 {
        return Err(FpkError::Domain(format!(
            "ks_statistic needs >= 1000 samples, got {}",
            samples.len()
        )));
    }
    let mut sorted: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
    if sorted.len() != samples.len() {
        return Err(FpkError::Domain("ks_statistic: non-finite samples".into()));
    }
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut stat = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let hi = (i as f64 + 1.0) / n - f;
        let lo = f - i as f64 / n;
        stat = stat.max(hi).max(lo);
    }
    Ok(stat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_self_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<f64> = (0..20_000).map(|_| rng.gen::<f64>()).collect();
        let d = ks_statistic(&samples, |x| x.clamp(0.0, 1.0)).unwrap();
        // 1% critical value 1.63/√n
        assert!(d < 1.63 / (samples.len() as f64).sqrt(), "KS {d}");
    }

    #[test]
    fn inverse_transform_self_test() {
        // exponential samples by inverse transform against their own CDF
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let samples: Vec<f64> = (0..20_000)
            .map(|_| -(1.0 - rng.gen::<f64>()).ln() / 0.7)
            .collect();
        let d = ks_statistic(&samples, |x| 1.0 - (-0.7 * x).exp()).unwrap();
        assert!(d < 1.63 / (samples.len() as f64).sqrt(), "KS {d}");
    }

    #[test]
    fn detects_wrong_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<f64> = (0..5_000).map(|_| rng.gen::<f64>()).collect();
        let d = ks_statistic(&samples, |x| (x * x).clamp(0.0, 1.0)).unwrap();
        assert!(d > 0.2);
    }

    #[test]
    fn sample_count_gate() {
        let samples = vec![0.5; 10];
        assert!(ks_statistic(&samples, |x| x).is_err());
    }
}
