use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Standard-normal quantile at 0.975.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lower: T, upper: T) -> Self {
        Self { lower, upper }
    }

    pub fn width(&self) -> T {
        self.upper - self.lower
    }

    pub fn contains(&self, value: T) -> bool {
        self.lower <= value && value <= self.upper
    }

    /// True when zero lies strictly outside the interval.
    pub fn excludes_zero(&self) -> bool {
        self.lower > T::zero() || self.upper < T::zero()
    }
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Wilson score interval for `k` successes out of `n` at confidence `level`.
pub fn wilson_interval<T: Real>(k: u64, n: u64, level: T) -> Result<Interval<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("wilson interval needs n >= 1".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("wilson interval: k={k} exceeds n={n}")));
    }
    if !(level > T::zero() && level < T::one()) {
        return Err(Error::InvalidArgument(format!("wilson level {level} not in (0, 1)")));
    }
    let level_f = level.as_f64();
    let z = if level_f == 0.95 {
        T::of(Z_95)
    } else {
        T::of(normal_quantile((1.0 + level_f) / 2.0))
    };
    let n_t = T::of(n as f64);
    let p_hat = T::of(k as f64) / n_t;
    let two = T::of(2.0);
    let four = T::of(4.0);
    let z2 = z * z;
    let denom = T::one() + z2 / n_t;
    let centre = (p_hat + z2 / (two * n_t)) / denom;
    let half = (z / denom) * (p_hat * (T::one() - p_hat) / n_t + z2 / (four * n_t * n_t)).sqrt();
    // Clamp so that lower <= p_hat <= upper survives rounding at k = 0 or k = n.
    let lower = (centre - half).max(T::zero()).min(p_hat);
    let upper = (centre + half).min(T::one()).max(p_hat);
    Ok(Interval { lower, upper })
}

/// Percentile interval over bootstrap replicates, linear interpolation
/// between order statistics. Sorts `samples` in place.
pub fn percentile_interval<T: Real>(samples: &mut [T], level: T) -> Option<Interval<T>> {
    if samples.is_empty() {
        return None;
    }
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let alpha = (T::one() - level) / T::of(2.0);
    Some(Interval {
        lower: quantile_sorted(samples, alpha),
        upper: quantile_sorted(samples, T::one() - alpha),
    })
}

fn quantile_sorted<T: Real>(sorted: &[T], q: T) -> T {
    let last = sorted.len() - 1;
    let pos = q * T::of_usize(last);
    let lo = pos.floor().to_usize().unwrap_or(0).min(last);
    let hi = (lo + 1).min(last);
    let frac = pos - T::of_usize(lo);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_successes() {
        let iv = wilson_interval(0, 100, 0.95_f64).unwrap();
        assert_eq!(iv.lower, 0.0);
        let z2 = Z_95 * Z_95;
        assert_abs_diff_eq!(iv.upper, z2 / (100.0 + z2), epsilon = 1e-12);
        assert_abs_diff_eq!(iv.upper, 0.0370, epsilon = 5e-5);
    }

    #[test]
    fn all_successes_mirrors_zero() {
        let lo = wilson_interval(0, 100, 0.95_f64).unwrap();
        let hi = wilson_interval(100, 100, 0.95_f64).unwrap();
        assert_eq!(hi.upper, 1.0);
        assert_abs_diff_eq!(hi.lower, 1.0 - lo.upper, epsilon = 1e-12);
        assert_abs_diff_eq!(hi.lower, 0.9630, epsilon = 5e-5);
    }

    #[test]
    fn half_is_symmetric() {
        let iv = wilson_interval(50, 100, 0.95_f64).unwrap();
        assert_abs_diff_eq!(iv.lower + iv.upper, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(iv.lower, 0.4038, epsilon = 5e-5);
    }

    #[test]
    fn f32_agrees_with_f64() {
        let a = wilson_interval(37, 91, 0.95_f32).unwrap();
        let b = wilson_interval(37, 91, 0.95_f64).unwrap();
        assert_abs_diff_eq!(a.lower as f64, b.lower, epsilon = 1e-6);
        assert_abs_diff_eq!(a.upper as f64, b.upper, epsilon = 1e-6);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(wilson_interval(0, 0, 0.95_f64).is_err());
        assert!(wilson_interval(5, 4, 0.95_f64).is_err());
        assert!(wilson_interval(1, 4, 1.0_f64).is_err());
    }

    #[test]
    fn other_levels_use_normal_quantile() {
        let iv90 = wilson_interval(30, 100, 0.90_f64).unwrap();
        let iv95 = wilson_interval(30, 100, 0.95_f64).unwrap();
        assert!(iv90.width() < iv95.width());
        assert_abs_diff_eq!(normal_quantile(0.975), Z_95, epsilon = 1e-9);
    }

    #[test]
    fn percentiles_interpolate() {
        let mut v: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        let iv = percentile_interval(&mut v, 0.95).unwrap();
        assert_abs_diff_eq!(iv.lower, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(iv.upper, 97.5, epsilon = 1e-12);
        assert!(percentile_interval::<f64>(&mut [], 0.95).is_none());
    }
}
