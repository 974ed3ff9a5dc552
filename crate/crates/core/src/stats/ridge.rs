use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Minimum observations for cross-validated ridge.
pub const MIN_RIDGE_OBSERVATIONS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeCv<T> {
    /// Mean held-out R² over non-degenerate folds.
    pub mean_r2: Option<T>,
    /// Held-out R² per fold; `None` for degenerate folds.
    pub per_fold: Vec<Option<T>>,
    /// Folds whose held-out target has zero variance.
    pub degenerate_folds: usize,
}

/// k-fold cross-validated R² of a one-feature ridge regression of `y` on `x`.
///
/// The feature is standardised on each training split (population standard
/// deviation), the intercept is unpenalised, and `alpha` penalises the slope.
/// Folds come from a shuffle seeded by `seed`.
pub fn ridge_cv_r2<T: Real>(x: &[T], y: &[T], folds: usize, alpha: T, seed: u64) -> Result<RidgeCv<T>> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument("ridge: x and y lengths differ".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidArgument("ridge: need at least 2 folds".into()));
    }
    let n = x.len();
    if n < MIN_RIDGE_OBSERVATIONS.max(folds) {
        return Err(Error::InvalidArgument(format!(
            "ridge: need at least {} observations, got {n}",
            MIN_RIDGE_OBSERVATIONS.max(folds)
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0usize; n];
    for (pos, &idx) in order.iter().enumerate() {
        fold_of[idx] = pos % folds;
    }

    let mut per_fold = Vec::with_capacity(folds);
    let mut degenerate = 0;
    for fold in 0..folds {
        let (train, test): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold_of[i] != fold);
        let model = fit(&train, x, y, alpha);
        let held: Vec<T> = test.iter().map(|&i| y[i]).collect();
        let (lo, hi) = held.iter().fold((held[0], held[0]), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if lo == hi {
            degenerate += 1;
            per_fold.push(None);
            continue;
        }
        let mean = held.iter().copied().sum::<T>() / T::of_usize(held.len());
        let (mut sse, mut sst) = (T::zero(), T::zero());
        for &i in &test {
            let resid = y[i] - model.predict(x[i]);
            sse = sse + resid * resid;
            sst = sst + (y[i] - mean) * (y[i] - mean);
        }
        per_fold.push(Some(T::one() - sse / sst));
    }

    let scored: Vec<T> = per_fold.iter().flatten().copied().collect();
    let mean_r2 = if scored.is_empty() {
        None
    } else {
        Some(scored.iter().copied().sum::<T>() / T::of_usize(scored.len()))
    };
    Ok(RidgeCv { mean_r2, per_fold, degenerate_folds: degenerate })
}

struct Fitted<T> {
    x_mean: T,
    x_scale: T,
    intercept: T,
    slope: T,
}

impl<T: Real> Fitted<T> {
    fn predict(&self, x: T) -> T {
        if self.x_scale > T::zero() {
            self.intercept + self.slope * (x - self.x_mean) / self.x_scale
        } else {
            self.intercept
        }
    }
}

fn fit<T: Real>(train: &[usize], x: &[T], y: &[T], alpha: T) -> Fitted<T> {
    let m = T::of_usize(train.len());
    let x_mean = train.iter().map(|&i| x[i]).sum::<T>() / m;
    let y_mean = train.iter().map(|&i| y[i]).sum::<T>() / m;
    let var = train.iter().map(|&i| (x[i] - x_mean) * (x[i] - x_mean)).sum::<T>() / m;
    let x_scale = var.sqrt();
    if !(x_scale > T::zero()) {
        return Fitted { x_mean, x_scale: T::zero(), intercept: y_mean, slope: T::zero() };
    }
    let (mut szy, mut szz) = (T::zero(), T::zero());
    for &i in train {
        let z = (x[i] - x_mean) / x_scale;
        szy = szy + z * (y[i] - y_mean);
        szz = szz + z * z;
    }
    Fitted { x_mean, x_scale, intercept: y_mean, slope: szy / (szz + alpha) }
}
