//! Scalar-generic statistical kernels.
//!
//! Nothing here knows about trials or cells; callers pass plain slices.

mod auroc;
mod correlation;
mod interval;
mod rank;
mod ridge;

pub use auroc::{auroc2, auroc2_labeled};
pub use correlation::{partial_spearman, pearson, point_biserial, spearman, Correlation};
pub use interval::{normal_quantile, percentile_interval, wilson_interval, Interval, Z_95};
pub use rank::midranks;
pub use ridge::{ridge_cv_r2, RidgeCv};

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
pub(crate) fn two_sided_t_p(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}
