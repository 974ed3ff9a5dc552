use serde::{Deserialize, Serialize};

use super::interval::{Interval, Z_95};
use super::rank::midranks;
use super::two_sided_t_p;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A correlation coefficient with its two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation<T> {
    pub estimate: T,
    pub p_value: f64,
    pub n: usize,
    /// 95% Fisher-z interval; only the point-biserial diagnostic fills this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<Interval<T>>,
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson<T: Real>(x: &[T], y: &[T]) -> Option<T> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = T::of_usize(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx <= T::zero() || syy <= T::zero() {
        return None;
    }
    let r = sxy / (sxx * syy).sqrt();
    Some(r.max(-T::one()).min(T::one()))
}

fn t_p<T: Real>(r: T, df: usize) -> f64 {
    let r = r.as_f64();
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * (df as f64 / (1.0 - r * r)).sqrt();
    two_sided_t_p(t, df as f64)
}

fn check_lengths(lengths: &[usize], min: usize) -> Result<usize> {
    let n = lengths[0];
    if lengths.iter().any(|&l| l != n) {
        return Err(Error::InvalidArgument(format!("series lengths differ: {lengths:?}")));
    }
    if n < min {
        return Err(Error::InvalidArgument(format!("need at least {min} observations, got {n}")));
    }
    Ok(n)
}

/// Spearman rank correlation (Pearson on mid-ranks), p from t with n−2 df.
///
/// `Ok(None)` when either series has zero rank variance.
pub fn spearman<T: Real>(x: &[T], y: &[T]) -> Result<Option<Correlation<T>>> {
    let n = check_lengths(&[x.len(), y.len()], 3)?;
    let rho = match pearson(&midranks(x), &midranks(y)) {
        Some(r) => r,
        None => return Ok(None),
    };
    Ok(Some(Correlation { estimate: rho, p_value: t_p(rho, n - 2), n, interval: None }))
}

/// Partial Spearman correlation of `x` and `y` controlling for `control`,
/// computed on mid-ranks with n−3 df.
pub fn partial_spearman<T: Real>(x: &[T], y: &[T], control: &[T]) -> Result<Option<Correlation<T>>> {
    let n = check_lengths(&[x.len(), y.len(), control.len()], 4)?;
    let (rx, ry, rz) = (midranks(x), midranks(y), midranks(control));
    let (Some(rxy), Some(rxz), Some(ryz)) = (pearson(&rx, &ry), pearson(&rx, &rz), pearson(&ry, &rz)) else {
        return Ok(None);
    };
    let denom = ((T::one() - rxz * rxz) * (T::one() - ryz * ryz)).sqrt();
    if !(denom > T::of(1e-12)) {
        return Ok(None);
    }
    let r = ((rxy - rxz * ryz) / denom).max(-T::one()).min(T::one());
    Ok(Some(Correlation { estimate: r, p_value: t_p(r, n - 3), n, interval: None }))
}

/// Point-biserial correlation between a confidence series and a 0/1
/// correctness indicator, with a 95% Fisher-z interval.
///
/// `None` when fewer than 3 observations, one class is missing, or the
/// confidence series is constant.
pub fn point_biserial<T: Real>(confidence: &[T], correct: &[bool]) -> Option<Correlation<T>> {
    let n = confidence.len();
    if n != correct.len() || n < 3 {
        return None;
    }
    let indicator: Vec<T> = correct.iter().map(|&c| if c { T::one() } else { T::zero() }).collect();
    let r = pearson(confidence, &indicator)?;
    let interval = if r.abs() >= T::one() {
        Some(Interval::new(r, r))
    } else if n > 3 {
        let z = r.atanh();
        let half = T::of(Z_95) / T::of_usize(n - 3).sqrt();
        Some(Interval::new((z - half).tanh(), (z + half).tanh()))
    } else {
        None
    };
    Some(Correlation { estimate: r, p_value: t_p(r, n - 2), n, interval })
}
