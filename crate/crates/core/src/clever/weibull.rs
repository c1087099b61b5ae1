//! Reverse Weibull maximum-likelihood fit for batch maxima.
//!
//! Density on `(−∞, a]`: `k/λ · ((a−y)/λ)^(k−1) · exp(−((a−y)/λ)^k)`.
//! The fit runs in `f64` on standardized data and maximizes over
//! `(log(a − max), log(k − 1), log λ)`, which keeps `a` strictly above the
//! sample maximum and `k` above 1 where the likelihood stays bounded.

use super::simplex::nelder_mead;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeibullFit<T> {
    /// Right endpoint `a`.
    pub location: T,
    pub shape: T,
    pub scale: T,
    pub log_likelihood: T,
    /// Zero-variance input; `location` is the common value.
    pub degenerate: bool,
}

const VARIANCE_FLOOR: f64 = 1e-12;

pub fn reverse_weibull_mle<T: Scalar>(maxima: &[T]) -> Result<WeibullFit<T>> {
    if maxima.len() < 2 {
        return Err(Error::domain(format!(
            "reverse Weibull fit needs at least 2 values, got {}",
            maxima.len()
        )));
    }
    let data: Vec<f64> = maxima.iter().map(|v| v.as_f64()).collect();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("non-finite value in maxima"));
    }
    let n = data.len() as f64;
    let max = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = data.iter().sum::<f64>() / n;
    let var = data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var < VARIANCE_FLOOR {
        return Ok(degenerate(max));
    }
    let sd = var.sqrt();
    let z: Vec<f64> = data.iter().map(|v| (v - mean) / sd).collect();
    let z_max = (max - mean) / sd;

    let nll = |p: &[f64]| -> f64 {
        let a = z_max + p[0].exp();
        let k = 1.0 + p[1].exp();
        let lambda = p[2].exp();
        let mut log_t = 0.0;
        let mut pow_t = 0.0;
        for &v in &z {
            let t = (a - v) / lambda;
            log_t += t.ln();
            pow_t += t.powf(k);
        }
        -(n * k.ln() - n * lambda.ln() + (k - 1.0) * log_t - pow_t)
    };

    // moments of a reverse Weibull with k = 2 on unit-variance data:
    // mean gap λΓ(1.5), variance λ²(1 − π/4)
    let lambda0 = 1.0 / (1.0 - std::f64::consts::FRAC_PI_4).sqrt();
    let a0 = (lambda0 * 0.886_226_925_452_758).max(z_max + 0.1 * lambda0);
    let start = [(a0 - z_max).ln(), 0.0, lambda0.ln()];

    let mut best = nelder_mead(nll, &start, 0.5, 1e-12, 4000);
    for _ in 0..3 {
        let again = nelder_mead(nll, &best.point, 0.1, 1e-12, 4000);
        let improved = again.value < best.value - 1e-10;
        best = if again.value <= best.value { again } else { best };
        if !improved {
            break;
        }
    }
    if !best.value.is_finite() {
        return Ok(degenerate(max));
    }
    let p = &best.point;
    let location = mean + sd * (z_max + p[0].exp());
    let location = location.max(max);
    Ok(WeibullFit {
        location: T::lit(location),
        shape: T::lit(1.0 + p[1].exp()),
        scale: T::lit(sd * p[2].exp()),
        log_likelihood: T::lit(-best.value - n * sd.ln()),
        degenerate: false,
    })
}

fn degenerate<T: Scalar>(value: f64) -> WeibullFit<T> {
    WeibullFit {
        location: T::lit(value),
        shape: T::infinity(),
        scale: T::zero(),
        log_likelihood: T::zero(),
        degenerate: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng as _;

    /// Inverse-CDF draws: y = a − λ(−ln U)^(1/k).
    fn draws(a: f64, k: f64, lambda: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
                a - lambda * (-u.ln()).powf(1.0 / k)
            })
            .collect()
    }

    #[test]
    fn constant_maxima_are_degenerate() {
        let fit = reverse_weibull_mle(&[2.0f64; 5]).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.location, 2.0);
    }

    #[test]
    fn too_few_values() {
        assert!(matches!(reverse_weibull_mle(&[1.0f64]), Err(Error::Domain(_))));
    }

    #[test]
    fn recovers_known_location() {
        let data = draws(1.5, 2.0, 0.3, 500, 7);
        let fit = reverse_weibull_mle(&data).unwrap();
        assert!(!fit.degenerate);
        assert!((fit.location - 1.5).abs() < 0.05, "{fit:?}");
        assert!((fit.shape - 2.0).abs() < 0.5, "{fit:?}");
        assert!((fit.scale - 0.3).abs() < 0.06, "{fit:?}");
    }

    #[test]
    fn likelihood_beats_the_start_point() {
        let data = draws(0.8, 3.0, 0.1, 200, 3);
        let fit = reverse_weibull_mle(&data).unwrap();
        let ll = |a: f64, k: f64, l: f64| -> f64 {
            data.iter()
                .map(|&y| {
                    let t = (a - y) / l;
                    k.ln() - l.ln() + (k - 1.0) * t.ln() - t.powf(k)
                })
                .sum()
        };
        let at_fit = ll(fit.location, fit.shape, fit.scale);
        assert!((at_fit - fit.log_likelihood).abs() < 1e-6 * at_fit.abs().max(1.0));
        assert!(at_fit >= ll(0.8, 3.0, 0.1) - 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn location_bounds_the_data(v in proptest::collection::vec(-5.0f64..5.0, 2..40)) {
            let fit = reverse_weibull_mle(&v).unwrap();
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(fit.location >= max - 1e-9);
        }
    }
}
