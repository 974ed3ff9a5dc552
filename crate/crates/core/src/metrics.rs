//! Non-screening statistics for one cell.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::screening::{screen_cell_with, ScreeningConfig, Tier};
use crate::stats::{self, percentile_interval};
use crate::trial::{Cell, Condition, TrialRecord};
use crate::{Correlation, Interval, RidgeCv};

/// Confidence at or above this counts as ceiling.
pub const CEILING_THRESHOLD: f64 = 0.95;
/// Redraws allowed per bootstrap resample before it is dropped.
pub const MAX_REDRAWS: usize = 100;
/// AUROC₂ intervals wider than this are flagged as unreliable.
pub const WIDE_AUROC_INTERVAL: f64 = 0.2;
pub const RIDGE_FOLDS: usize = 5;
pub const RIDGE_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub ceiling_threshold: f64,
    pub bootstrap_resamples: usize,
    pub seed: u64,
    pub ridge_folds: usize,
    pub ridge_alpha: f64,
    pub split_half_seeds: Vec<u64>,
    pub screening: ScreeningConfig,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            ceiling_threshold: CEILING_THRESHOLD,
            bootstrap_resamples: 2000,
            seed: 42,
            ridge_folds: RIDGE_FOLDS,
            ridge_alpha: RIDGE_ALPHA,
            split_half_seeds: (0..20).collect(),
            screening: ScreeningConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AurocBootstrap {
    pub point: f64,
    pub interval: Interval,
    /// Resamples redrawn because they contained a single class.
    pub redraws: usize,
    /// Resamples abandoned after [`MAX_REDRAWS`] single-class draws.
    pub dropped: usize,
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitHalf {
    pub seed: u64,
    pub tier_a: Tier,
    pub tier_b: Tier,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitHalfSummary {
    pub splits: Vec<SplitHalf>,
    pub agreement: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarDiagnostic {
    pub fail_rate_correct: Option<f64>,
    pub fail_rate_incorrect: Option<f64>,
    pub n_correct: usize,
    pub n_incorrect: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ceiling_rate: Option<f64>,
    /// Parse failures pooled with the ceiling mass over all trials.
    pub ceiling_rate_sensitivity: Option<f64>,
    pub auroc2: Option<AurocBootstrap>,
    pub ridge_r2_cv: Option<RidgeCv>,
    pub spearman_difficulty: Option<Correlation>,
    pub partial_trace_corr: Option<Correlation>,
    pub split_half: SplitHalfSummary,
    pub mar: MarDiagnostic,
}

pub fn ceiling_rate(cell: &Cell, threshold: f64) -> Option<f64> {
    let n = cell.n_parse_ok();
    (n > 0).then(|| cell.parse_ok_confidences().filter(|&c| c >= threshold).count() as f64 / n as f64)
}

/// Ceiling rate with every parse failure coded as a non-variable (ceiling)
/// response, over all trials.
pub fn ceiling_rate_sensitivity(cell: &Cell, threshold: f64) -> Option<f64> {
    let n = cell.n_total();
    if n == 0 {
        return None;
    }
    let at_ceiling = cell.parse_ok_confidences().filter(|&c| c >= threshold).count();
    Some((at_ceiling + cell.n_parse_fail()) as f64 / n as f64)
}

fn judged_split(trials: &[TrialRecord]) -> (Vec<f64>, Vec<f64>) {
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (conf, correct) in trials.iter().filter_map(TrialRecord::judged) {
        if correct {
            pos.push(conf);
        } else {
            neg.push(conf);
        }
    }
    (pos, neg)
}

/// Type-2 AUROC over judged parse-ok trials.
pub fn auroc2(trials: &[TrialRecord]) -> Option<f64> {
    let (pos, neg) = judged_split(trials);
    stats::auroc2(&pos, &neg)
}

/// AUROC₂ with a percentile bootstrap interval from case resamples.
///
/// Single-class resamples are redrawn up to [`MAX_REDRAWS`] times and then
/// dropped; any drop, or an interval wider than [`WIDE_AUROC_INTERVAL`], sets
/// `flagged`.
pub fn auroc2_bootstrap(trials: &[TrialRecord], resamples: usize, seed: u64) -> Option<AurocBootstrap> {
    let point = auroc2(trials)?;
    let mut pairs: Vec<(f64, bool)> = trials.iter().filter_map(TrialRecord::judged).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let n = pairs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut redraws, mut dropped) = (0, 0);
    let mut replicates = Vec::with_capacity(resamples);
    let mut weight = vec![0u64; n];
    for _ in 0..resamples {
        let mut attempt = 0;
        loop {
            weight.fill(0);
            for _ in 0..n {
                weight[rng.random_range(0..n)] += 1;
            }
            if let Some(v) = weighted_auroc2(&pairs, &weight) {
                replicates.push(v);
                break;
            }
            attempt += 1;
            if attempt > MAX_REDRAWS {
                dropped += 1;
                break;
            }
            redraws += 1;
        }
    }
    let interval = percentile_interval(&mut replicates, 0.95).unwrap_or(Interval::new(point, point));
    let flagged = dropped > 0 || interval.width() > WIDE_AUROC_INTERVAL;
    Some(AurocBootstrap { point, interval, redraws, dropped, flagged })
}

/// AUROC₂ of a resample given as multiplicities over confidence-sorted pairs.
fn weighted_auroc2(sorted: &[(f64, bool)], weight: &[u64]) -> Option<f64> {
    let (mut doubled_wins, mut neg_below, mut n_pos) = (0u128, 0u128, 0u128);
    let mut i = 0;
    while i < sorted.len() {
        let (mut pos_g, mut neg_g) = (0u128, 0u128);
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            if sorted[j].1 {
                pos_g += weight[j] as u128;
            } else {
                neg_g += weight[j] as u128;
            }
            j += 1;
        }
        doubled_wins += pos_g * (2 * neg_below + neg_g);
        neg_below += neg_g;
        n_pos += pos_g;
        i = j;
    }
    if n_pos == 0 || neg_below == 0 {
        return None;
    }
    Some(doubled_wins as f64 / 2.0 / (n_pos as f64 * neg_below as f64))
}

/// Cross-validated ridge R² of confidence on `logprob_mean` over parse-ok
/// trials carrying a logprob.
pub fn ridge_cv_r2(trials: &[TrialRecord], folds: usize, alpha: f64, seed: u64) -> Result<RidgeCv> {
    let (x, y): (Vec<f64>, Vec<f64>) = trials
        .iter()
        .filter(|t| t.is_parse_ok())
        .filter_map(|t| Some((t.logprob_mean?, t.confidence?)))
        .unzip();
    stats::ridge_cv_r2(&x, &y, folds, alpha, seed)
}

/// Item difficulty: 1 − fraction of loaded NUM cells answering the item
/// correctly, over trials with a correctness label.
pub fn item_difficulty<'a>(cells: impl IntoIterator<Item = &'a Cell>) -> BTreeMap<String, f64> {
    let mut tally: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for cell in cells.into_iter().filter(|c| c.condition() == Condition::Num) {
        for t in cell.trials() {
            if let Some(correct) = t.correct {
                let e = tally.entry(t.item_id.clone()).or_default();
                e.0 += usize::from(correct);
                e.1 += 1;
            }
        }
    }
    tally.into_iter().map(|(item, (hit, n))| (item, 1.0 - hit as f64 / n as f64)).collect()
}

/// Spearman ρ between item difficulty and this cell's confidence.
pub fn spearman_difficulty(cell: &Cell, difficulty: &BTreeMap<String, f64>) -> Option<Correlation> {
    let (x, y): (Vec<f64>, Vec<f64>) = cell
        .trials()
        .iter()
        .filter_map(|t| Some((*difficulty.get(&t.item_id)?, t.confidence?)))
        .unzip();
    if x.len() < 3 {
        return None;
    }
    stats::spearman(&x, &y).ok().flatten()
}

/// Item difficulty against mean confidence per item across all loaded NUM
/// cells.
pub fn difficulty_confidence_correlation<'a>(
    cells: impl IntoIterator<Item = &'a Cell>,
    difficulty: &BTreeMap<String, f64>,
) -> Option<Correlation> {
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for cell in cells.into_iter().filter(|c| c.condition() == Condition::Num) {
        for t in cell.trials() {
            if let Some(conf) = t.confidence {
                let e = sums.entry(t.item_id.as_str()).or_default();
                e.0 += conf;
                e.1 += 1;
            }
        }
    }
    let (x, y): (Vec<f64>, Vec<f64>) =
        sums.into_iter().filter_map(|(item, (s, n))| Some((*difficulty.get(item)?, s / n as f64))).unzip();
    if x.len() < 3 {
        return None;
    }
    stats::spearman(&x, &y).ok().flatten()
}

/// Partial Spearman of reasoning-trace length with confidence, controlling
/// for item difficulty.
pub fn partial_trace_corr(cell: &Cell, difficulty: &BTreeMap<String, f64>) -> Option<Correlation> {
    let mut trace = Vec::new();
    let mut conf = Vec::new();
    let mut diff = Vec::new();
    for t in cell.trials() {
        if let (Some(len), Some(c), Some(&d)) = (t.trace_length, t.confidence, difficulty.get(&t.item_id)) {
            trace.push(len as f64);
            conf.push(c);
            diff.push(d);
        }
    }
    if trace.len() < 4 {
        return None;
    }
    stats::partial_spearman(&trace, &conf, &diff).ok().flatten()
}

/// Screens two seeded random halves of the cell and compares their tiers.
pub fn split_half_agreement(cell: &Cell, seed: u64, screening: &ScreeningConfig) -> Result<SplitHalf> {
    let n = cell.n_total();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("split-half needs at least 2 trials, got {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let half = n / 2;
    let pick = |idx: &[usize]| cell.with_trials(idx.iter().map(|&i| cell.trials()[i].clone()).collect());
    let tier_a = screen_cell_with(&pick(&order[..half]), screening).tier;
    let tier_b = screen_cell_with(&pick(&order[half..2 * half]), screening).tier;
    Ok(SplitHalf { seed, tier_a, tier_b, agree: tier_a == tier_b })
}

pub fn split_half_summary(cell: &Cell, seeds: &[u64], screening: &ScreeningConfig) -> SplitHalfSummary {
    let splits: Vec<SplitHalf> = seeds.iter().filter_map(|&s| split_half_agreement(cell, s, screening).ok()).collect();
    let agreement =
        (!splits.is_empty()).then(|| splits.iter().filter(|s| s.agree).count() as f64 / splits.len() as f64);
    SplitHalfSummary { splits, agreement }
}

/// Confidence-parse-failure rate among correct and among incorrect trials.
pub fn mar_diagnostic(cell: &Cell) -> MarDiagnostic {
    let (mut n_correct, mut fail_correct, mut n_incorrect, mut fail_incorrect) = (0, 0, 0, 0);
    for t in cell.trials() {
        match t.correct {
            Some(true) => {
                n_correct += 1;
                fail_correct += usize::from(!t.is_parse_ok());
            }
            Some(false) => {
                n_incorrect += 1;
                fail_incorrect += usize::from(!t.is_parse_ok());
            }
            None => {}
        }
    }
    let rate = |k: usize, n: usize| (n > 0).then(|| k as f64 / n as f64);
    MarDiagnostic {
        fail_rate_correct: rate(fail_correct, n_correct),
        fail_rate_incorrect: rate(fail_incorrect, n_incorrect),
        n_correct,
        n_incorrect,
    }
}

pub fn compute_metrics(cell: &Cell, difficulty: &BTreeMap<String, f64>, config: &MetricsConfig) -> MetricsReport {
    MetricsReport {
        ceiling_rate: ceiling_rate(cell, config.ceiling_threshold),
        ceiling_rate_sensitivity: ceiling_rate_sensitivity(cell, config.ceiling_threshold),
        auroc2: auroc2_bootstrap(cell.trials(), config.bootstrap_resamples, config.seed),
        ridge_r2_cv: ridge_cv_r2(cell.trials(), config.ridge_folds, config.ridge_alpha, config.seed).ok(),
        spearman_difficulty: spearman_difficulty(cell, difficulty),
        partial_trace_corr: partial_trace_corr(cell, difficulty),
        split_half: split_half_summary(cell, &config.split_half_seeds, &config.screening),
        mar: mar_diagnostic(cell),
    }
}
