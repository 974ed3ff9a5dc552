//! Implementation-independent oracles for the statistical kernels.

use confscreen::stats::{auroc2, midranks, partial_spearman, spearman, wilson_interval, Z_95};
use confscreen::synth::{generate_cell, GenSpec};
use confscreen::metrics::{partial_trace_corr, ridge_cv_r2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Wilson bounds in count form: (k + z²/2 ± z·sqrt(k(n−k)/n + z²/4)) / (n + z²).
fn wilson_counts(k: u64, n: u64) -> (f64, f64) {
    let (k, n, z) = (k as f64, n as f64, Z_95);
    let root = z * (k * (n - k) / n + z * z / 4.0).sqrt();
    let lo = (k + z * z / 2.0 - root) / (n + z * z);
    let hi = (k + z * z / 2.0 + root) / (n + z * z);
    (lo.max(0.0), hi.min(1.0))
}

fn pairwise_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut doubled = 0u64;
    for &p in pos {
        for &q in neg {
            doubled += if p > q { 2 } else if p == q { 1 } else { 0 };
        }
    }
    doubled as f64 / 2.0 / (pos.len() * neg.len()) as f64
}

/// Residualise each rank series on the control ranks by least squares and
/// correlate the residuals.
fn residual_partial(x: &[f64], y: &[f64], z: &[f64]) -> f64 {
    let (rx, ry, rz) = (midranks(x), midranks(y), midranks(z));
    let resid = |v: &[f64]| -> Vec<f64> {
        let n = v.len() as f64;
        let (mv, mz) = (v.iter().sum::<f64>() / n, rz.iter().sum::<f64>() / n);
        let sxz: f64 = v.iter().zip(&rz).map(|(a, b)| (a - mv) * (b - mz)).sum();
        let szz: f64 = rz.iter().map(|b| (b - mz).powi(2)).sum();
        let beta = sxz / szz;
        v.iter().zip(&rz).map(|(a, b)| a - mv - beta * (b - mz)).collect()
    };
    let (ex, ey) = (resid(&rx), resid(&ry));
    let dot: f64 = ex.iter().zip(&ey).map(|(a, b)| a * b).sum();
    let nx: f64 = ex.iter().map(|a| a * a).sum();
    let ny: f64 = ey.iter().map(|a| a * a).sum();
    dot / (nx * ny).sqrt()
}

#[test]
fn wilson_matches_count_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let n = rng.random_range(1..5000u64);
        let k = rng.random_range(0..=n);
        let iv = wilson_interval(k, n, 0.95_f64).unwrap();
        let (lo, hi) = wilson_counts(k, n);
        assert!((iv.lower - lo).abs() < 1e-9 && (iv.upper - hi).abs() < 1e-9, "k={k} n={n}");
    }
}

#[test]
fn partial_spearman_matches_residual_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 400;
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let x: Vec<f64> = z.iter().map(|zi| 0.6 * zi + rng.sample::<f64, _>(StandardNormal)).collect();
    let y: Vec<f64> = (0..n).map(|i| -0.5 * x[i] + 0.5 * z[i] + 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
    let got = partial_spearman(&x, &y, &z).unwrap().unwrap().estimate;
    let oracle = residual_partial(&x, &y, &z);
    assert!(got < 0.0);
    assert!((got - oracle).abs() < 0.05, "got {got}, oracle {oracle}");
    // the two routes are algebraically identical
    assert!((got - oracle).abs() < 1e-9);
}

#[test]
fn planted_trace_rho_is_recovered() {
    for (seed, rho) in [(1u64, -0.36), (2, 0.3), (3, -0.6), (4, 0.0)] {
        let spec = GenSpec { planted_trace_rho: Some(rho), accuracy: 0.6, target_auroc2: Some(0.65), ..GenSpec::new(400, seed) };
        let synth = generate_cell(&spec).unwrap();
        let got = partial_trace_corr(&synth.cell, &synth.item_difficulty).unwrap().estimate;
        assert!((got - rho).abs() < 0.1, "seed {seed}: planted {rho}, got {got}");
    }
}

#[test]
fn planted_trace_rho_median_within_tolerance() {
    let mut estimates: Vec<f64> = (0..40)
        .map(|seed| {
            let spec = GenSpec { planted_trace_rho: Some(-0.36), ..GenSpec::new(400, 1000 + seed) };
            let synth = generate_cell(&spec).unwrap();
            partial_trace_corr(&synth.cell, &synth.item_difficulty).unwrap().estimate
        })
        .collect();
    estimates.sort_by(f64::total_cmp);
    let median = (estimates[19] + estimates[20]) / 2.0;
    assert!((median + 0.36).abs() < 0.05, "median {median}");
}

#[test]
fn planted_logprob_r2_is_predictive() {
    let spec = GenSpec { planted_logprob_r2: Some(0.5), ..GenSpec::new(1000, 8) };
    let cell = generate_cell(&spec).unwrap().cell;
    let cv = ridge_cv_r2(cell.trials(), 5, 1.0, 42).unwrap();
    let r2 = cv.mean_r2.unwrap();
    assert!((r2 - 0.5).abs() < 0.1, "r2 {r2}");
}

#[test]
fn independent_logprob_has_no_skill() {
    let spec = GenSpec { ceiling_mass: 0.3, ..GenSpec::new(500, 21) };
    let cell = generate_cell(&spec).unwrap().cell;
    assert!(ridge_cv_r2(cell.trials(), 5, 1.0, 42).unwrap().mean_r2.unwrap() < 0.01);
}

proptest! {
    #[test]
    fn auroc_equals_pairwise(labels in proptest::collection::vec((any::<bool>(), 0u16..50), 2..400)) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (l, v) in labels {
            if l { pos.push(v as f64 / 49.0) } else { neg.push(v as f64 / 49.0) }
        }
        prop_assume!(!pos.is_empty() && !neg.is_empty());
        prop_assert_eq!(auroc2(&pos, &neg).unwrap(), pairwise_auc(&pos, &neg));
    }

    #[test]
    fn spearman_ignores_monotone_transforms(xs in proptest::collection::vec(-5.0f64..5.0, 3..80), ys in proptest::collection::vec(-5.0f64..5.0, 3..80)) {
        let n = xs.len().min(ys.len());
        let (x, y) = (&xs[..n], &ys[..n]);
        let fx: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let gy: Vec<f64> = y.iter().map(|v| v.powi(3) + 2.0 * v).collect();
        match (spearman(x, y).unwrap(), spearman(&fx, &gy).unwrap()) {
            (Some(a), Some(b)) => prop_assert!((a.estimate - b.estimate).abs() < 1e-12),
            (None, None) => {}
            _ => prop_assert!(false),
        }
    }
}
