//! The ordered validity screen.
//!
//! Steps run in a fixed order:
//!
//! 1. degeneracy pre-check (fewer than 3 distinct confidences, or more than
//!    95% of binarised responses on one side) → INVALID;
//! 2. any contingency cell below 5 → INSUFFICIENT;
//! 3. TRIN ≥ 0.95 → structural warning only;
//! 4. F_p ≥ 0.50 with Wilson lower bound > 0.40 → INVALID;
//! 5. L ≥ 0.95 with Wilson lower bound > 0.90 → INVALID;
//! 6. RBS > 0 with its interval excluding zero and RBS > 0.05 → INVALID;
//! 7. point-biserial r reported, no classification action.
//!
//! A point threshold crossed at steps 4–6 whose interval condition is not
//! met yields INDETERMINATE unless an earlier or later step is INVALID.
//! Steps 1 and 2 end the screen; the remaining steps are recorded as
//! skipped. Steps 3–7 are always all evaluated once reached, and the first
//! INVALID among them is the decisive step.

use rand::SeedableRng;
use rand_distr::{Binomial, Distribution};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{percentile_interval, point_biserial, wilson_interval};
use crate::trial::{binarize_at, build_contingency_at, Binary, Cell, ContingencyTable};
use crate::{Correlation, Interval};

pub const MIN_DISTINCT_VALUES: usize = 3;
pub const DEGENERACY_SHARE: f64 = 0.95;
pub const MIN_CELL_COUNT: u64 = 5;
pub const TRIN_WARNING: f64 = 0.95;
pub const FP_THRESHOLD: f64 = 0.50;
pub const FP_LOWER_BOUND: f64 = 0.40;
pub const L_THRESHOLD: f64 = 0.95;
pub const L_LOWER_BOUND: f64 = 0.90;
pub const RBS_MIN_POINT: f64 = 0.05;
/// Decimal places kept when counting distinct confidence values.
pub const DISTINCT_DECIMALS: i32 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningConfig {
    pub binarise_threshold: f64,
    pub wilson_level: f64,
    pub rbs_resamples: usize,
    pub seed: u64,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        Self { binarise_threshold: crate::trial::BINARISE_THRESHOLD, wilson_level: 0.95, rbs_resamples: 2000, seed: 42 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Tier {
    Invalid,
    Indeterminate,
    Valid,
    Insufficient,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Invalid => "INVALID",
            Tier::Indeterminate => "INDETERMINATE",
            Tier::Valid => "VALID",
            Tier::Insufficient => "INSUFFICIENT",
        }
    }
}

impl std::fmt::Display for Tier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepName {
    Degeneracy,
    CellCounts,
    Trin,
    Fp,
    L,
    Rbs,
    PointBiserial,
}

pub const STEP_ORDER: [StepName; 7] = [
    StepName::Degeneracy,
    StepName::CellCounts,
    StepName::Trin,
    StepName::Fp,
    StepName::L,
    StepName::Rbs,
    StepName::PointBiserial,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StepOutcome {
    Pass,
    /// Threshold violated with its interval condition met.
    Invalid,
    /// Point threshold violated, interval condition unmet.
    Indeterminate,
    Insufficient,
    Warning,
    Reported,
    NotEvaluable,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningStep {
    pub step: StepName,
    pub observed: Option<f64>,
    pub interval: Option<Interval>,
    pub threshold: String,
    pub outcome: StepOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IndexEstimate {
    /// `None` when the denominator is zero.
    pub value: Option<f64>,
    pub interval: Option<Interval>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidityIndices {
    /// P(high | incorrect) = b / (b + d).
    pub l: IndexEstimate,
    /// P(low | correct) = c / (a + c).
    pub fp: IndexEstimate,
    /// F_p − (1 − L).
    pub rbs: IndexEstimate,
    /// max(n_high, n_low) / N.
    pub trin: IndexEstimate,
    pub point_biserial: Option<Correlation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyProbe {
    pub distinct_values: usize,
    pub n_high: usize,
    pub n_low: usize,
    pub dominant_share: f64,
    pub few_distinct: bool,
    pub one_sided: bool,
}

impl DegeneracyProbe {
    pub fn is_degenerate(&self) -> bool {
        self.few_distinct || self.one_sided
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub tier: Tier,
    pub decisive_step: Option<StepName>,
    pub degenerate: bool,
    pub degeneracy: Option<DegeneracyProbe>,
    pub trin_warning: bool,
    pub table: ContingencyTable,
    pub indices: ValidityIndices,
    pub steps: Vec<ScreeningStep>,
    pub excluded_by_parse_rate: bool,
    /// Parse-ok trials left out of the table for lack of a correctness label.
    pub unjudged_parse_ok: usize,
}

/// Distinct-value count and binarised balance over the parse-ok confidences.
pub fn probe_degeneracy(cell: &Cell, threshold: f64) -> Result<DegeneracyProbe> {
    let scale = 10f64.powi(DISTINCT_DECIMALS);
    let mut rounded = Vec::with_capacity(cell.n_parse_ok());
    let (mut n_high, mut n_low) = (0usize, 0usize);
    for conf in cell.parse_ok_confidences() {
        match binarize_at(conf, threshold)? {
            Binary::High => n_high += 1,
            Binary::Low => n_low += 1,
        }
        rounded.push((conf * scale).round() as i64);
    }
    let n = n_high + n_low;
    if n == 0 {
        return Err(Error::InvalidArgument("degeneracy check needs at least one parse-ok trial".into()));
    }
    rounded.sort_unstable();
    rounded.dedup();
    let dominant_share = n_high.max(n_low) as f64 / n as f64;
    Ok(DegeneracyProbe {
        distinct_values: rounded.len(),
        n_high,
        n_low,
        dominant_share,
        few_distinct: rounded.len() < MIN_DISTINCT_VALUES,
        one_sided: dominant_share > DEGENERACY_SHARE,
    })
}

/// `Some` verdict iff the cell trips the degeneracy pre-check.
pub fn degeneracy_check(cell: &Cell) -> Result<Option<DegeneracyProbe>> {
    let probe = probe_degeneracy(cell, crate::trial::BINARISE_THRESHOLD)?;
    Ok(probe.is_degenerate().then_some(probe))
}

/// Point indices from the table, with Wilson intervals for the proportions.
/// The RBS interval and the point-biserial need trial-level data and are
/// filled in by [`screen_cell_with`].
pub fn compute_indices(table: &ContingencyTable) -> ValidityIndices {
    compute_indices_at(table, 0.95)
}

fn compute_indices_at(table: &ContingencyTable, level: f64) -> ValidityIndices {
    let proportion = |k: u64, n: u64| IndexEstimate {
        value: (n > 0).then(|| k as f64 / n as f64),
        interval: wilson_interval(k, n, level).ok(),
    };
    let l = proportion(table.b, table.b + table.d);
    let fp = proportion(table.c, table.a + table.c);
    let trin = proportion(table.n_high().max(table.n_low()), table.total());
    let rbs = IndexEstimate { value: rbs_of(table), interval: None };
    ValidityIndices { l, fp, rbs, trin, point_biserial: None }
}

/// Direct evaluation of F_p − (1 − L); `None` if either is undefined.
pub fn rbs_of(table: &ContingencyTable) -> Option<f64> {
    let (ac, bd) = (table.a + table.c, table.b + table.d);
    if ac == 0 || bd == 0 {
        return None;
    }
    Some(table.c as f64 / ac as f64 - table.d as f64 / bd as f64)
}

/// Percentile bootstrap interval for RBS, resampling the judged trials
/// behind `table` with replacement.
///
/// A case resample of a 2×2 table is a multinomial draw of its four counts,
/// taken here as conditional binomials. Resamples with an undefined RBS are
/// dropped.
pub fn rbs_bootstrap(table: &ContingencyTable, resamples: usize, level: f64, seed: u64) -> Option<Interval> {
    let n = table.total();
    if n == 0 || resamples == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = [table.a, table.b, table.c, table.d];
    let mut stats = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut drawn = [0u64; 4];
        let (mut left_n, mut left_mass) = (n, n);
        for k in 0..3 {
            if left_n == 0 || left_mass == 0 {
                break;
            }
            let p = counts[k] as f64 / left_mass as f64;
            drawn[k] = Binomial::new(left_n, p.min(1.0)).expect("probability in [0, 1]").sample(&mut rng);
            left_n -= drawn[k];
            left_mass -= counts[k];
        }
        drawn[3] = left_n;
        let resample = ContingencyTable { a: drawn[0], b: drawn[1], c: drawn[2], d: drawn[3] };
        if let Some(v) = rbs_of(&resample) {
            stats.push(v);
        }
    }
    percentile_interval(&mut stats, level)
}

pub fn screen_cell(cell: &Cell) -> ScreeningReport {
    screen_cell_with(cell, &ScreeningConfig::default())
}

pub fn screen_cell_with(cell: &Cell, config: &ScreeningConfig) -> ScreeningReport {
    let threshold = config.binarise_threshold;
    let level = config.wilson_level;
    let table = build_contingency_at(cell, threshold);
    let mut indices = compute_indices_at(&table, level);
    let mut steps: Vec<ScreeningStep> = Vec::with_capacity(STEP_ORDER.len());
    let mut report = ScreeningReport {
        tier: Tier::Valid,
        decisive_step: None,
        degenerate: false,
        degeneracy: None,
        trin_warning: false,
        table,
        indices: ValidityIndices::default(),
        steps: Vec::new(),
        excluded_by_parse_rate: false,
        unjudged_parse_ok: cell.n_unjudged_parse_ok(),
    };

    // 1. degeneracy
    let probe = probe_degeneracy(cell, threshold).ok();
    let degeneracy_step = |outcome, observed| ScreeningStep {
        step: StepName::Degeneracy,
        observed,
        interval: None,
        threshold: format!("distinct values >= {MIN_DISTINCT_VALUES} and dominant share <= {DEGENERACY_SHARE}"),
        outcome,
    };
    match &probe {
        Some(p) if p.is_degenerate() => {
            steps.push(degeneracy_step(StepOutcome::Invalid, Some(p.dominant_share)));
            report.tier = Tier::Invalid;
            report.decisive_step = Some(StepName::Degeneracy);
            report.degenerate = true;
        }
        Some(p) => steps.push(degeneracy_step(StepOutcome::Pass, Some(p.dominant_share))),
        None => steps.push(degeneracy_step(StepOutcome::NotEvaluable, None)),
    }
    report.degeneracy = probe;

    // 2. cell counts
    if !report.degenerate {
        let insufficient = table.min_count() < MIN_CELL_COUNT;
        steps.push(ScreeningStep {
            step: StepName::CellCounts,
            observed: Some(table.min_count() as f64),
            interval: None,
            threshold: format!("every cell >= {MIN_CELL_COUNT}"),
            outcome: if insufficient { StepOutcome::Insufficient } else { StepOutcome::Pass },
        });
        if insufficient {
            report.tier = Tier::Insufficient;
            report.decisive_step = Some(StepName::CellCounts);
        }
    }

    let stopped = report.degenerate || report.tier == Tier::Insufficient;
    if stopped {
        for &step in &STEP_ORDER[steps.len()..] {
            steps.push(ScreeningStep { step, observed: None, interval: None, threshold: String::new(), outcome: StepOutcome::Skipped });
        }
        report.indices = indices;
        report.steps = steps;
        return report;
    }

    // 3. TRIN
    let trin = indices.trin.value.expect("table nonempty past step 2");
    report.trin_warning = trin >= TRIN_WARNING;
    steps.push(ScreeningStep {
        step: StepName::Trin,
        observed: Some(trin),
        interval: indices.trin.interval,
        threshold: format!("warn if >= {TRIN_WARNING}"),
        outcome: if report.trin_warning { StepOutcome::Warning } else { StepOutcome::Pass },
    });

    // 4. F_p and 5. L
    steps.push(bounded_step(StepName::Fp, &indices.fp, FP_THRESHOLD, FP_LOWER_BOUND));
    steps.push(bounded_step(StepName::L, &indices.l, L_THRESHOLD, L_LOWER_BOUND));

    // 6. RBS
    indices.rbs.interval = rbs_bootstrap(&table, config.rbs_resamples, level, config.seed);
    let rbs_outcome = match (indices.rbs.value, indices.rbs.interval) {
        (None, _) => StepOutcome::NotEvaluable,
        (Some(v), _) if v <= 0.0 => StepOutcome::Pass,
        (Some(v), Some(iv)) if iv.excludes_zero() && v > RBS_MIN_POINT => StepOutcome::Invalid,
        (Some(_), _) => StepOutcome::Indeterminate,
    };
    steps.push(ScreeningStep {
        step: StepName::Rbs,
        observed: indices.rbs.value,
        interval: indices.rbs.interval,
        threshold: format!("> 0 with interval excluding 0 and point > {RBS_MIN_POINT}"),
        outcome: rbs_outcome,
    });

    // 7. point-biserial
    let mut pairs: Vec<(f64, bool)> = cell.judged().collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let (conf, correct): (Vec<f64>, Vec<bool>) = pairs.into_iter().unzip();
    indices.point_biserial = point_biserial(&conf, &correct);
    steps.push(ScreeningStep {
        step: StepName::PointBiserial,
        observed: indices.point_biserial.map(|r| r.estimate),
        interval: indices.point_biserial.and_then(|r| r.interval),
        threshold: "diagnostic only".into(),
        outcome: if indices.point_biserial.is_some() { StepOutcome::Reported } else { StepOutcome::NotEvaluable },
    });

    if let Some(first) = steps.iter().find(|s| s.outcome == StepOutcome::Invalid) {
        report.tier = Tier::Invalid;
        report.decisive_step = Some(first.step);
    } else if let Some(first) = steps.iter().find(|s| s.outcome == StepOutcome::Indeterminate) {
        report.tier = Tier::Indeterminate;
        report.decisive_step = Some(first.step);
    }
    report.indices = indices;
    report.steps = steps;
    report
}

fn bounded_step(step: StepName, estimate: &IndexEstimate, point: f64, lower_bound: f64) -> ScreeningStep {
    let outcome = match (estimate.value, estimate.interval) {
        (None, _) => StepOutcome::NotEvaluable,
        (Some(v), _) if v < point => StepOutcome::Pass,
        (Some(_), Some(iv)) if iv.lower > lower_bound => StepOutcome::Invalid,
        (Some(_), _) => StepOutcome::Indeterminate,
    };
    ScreeningStep {
        step,
        observed: estimate.value,
        interval: estimate.interval,
        threshold: format!(">= {point} with Wilson lower > {lower_bound}"),
        outcome,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trial::fixtures::cell;
    use crate::trial::Condition;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn multinomial_bootstrap_agrees_with_case_resampling() {
        use rand::Rng;
        let table = ContingencyTable { a: 60, b: 25, c: 30, d: 35 };
        let mut cases = Vec::new();
        for (k, count) in [table.a, table.b, table.c, table.d].into_iter().enumerate() {
            cases.extend(std::iter::repeat_n(k, count as usize));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut naive = Vec::new();
        for _ in 0..20_000 {
            let mut c = [0u64; 4];
            for _ in 0..cases.len() {
                c[cases[rng.random_range(0..cases.len())]] += 1;
            }
            naive.extend(rbs_of(&ContingencyTable { a: c[0], b: c[1], c: c[2], d: c[3] }));
        }
        let naive = percentile_interval(&mut naive, 0.95).unwrap();
        let fast = rbs_bootstrap(&table, 20_000, 0.95, 11).unwrap();
        assert_abs_diff_eq!(fast.lower, naive.lower, epsilon = 0.01);
        assert_abs_diff_eq!(fast.upper, naive.upper, epsilon = 0.01);
        assert_eq!(rbs_bootstrap(&table, 500, 0.95, 3), rbs_bootstrap(&table, 500, 0.95, 3));
        assert_eq!(rbs_bootstrap(&ContingencyTable::default(), 500, 0.95, 3), None);
    }

    /// Cell realising a table with confidences spread inside each half.
    fn cell_for(table: ContingencyTable) -> Cell {
        let mut pairs = Vec::new();
        let spread = |i: u64, lo: f64| lo + 0.45 * ((i % 37) as f64 / 37.0);
        for i in 0..table.a {
            pairs.push((true, spread(i, 0.52)));
        }
        for i in 0..table.b {
            pairs.push((false, spread(i + 11, 0.52)));
        }
        for i in 0..table.c {
            pairs.push((true, spread(i + 5, 0.02)));
        }
        for i in 0..table.d {
            pairs.push((false, spread(i + 17, 0.02)));
        }
        cell(&pairs)
    }

    #[test]
    fn indices_examples() {
        let ix = compute_indices(&ContingencyTable::new(350, 150, 0, 0));
        assert_eq!(ix.l.value, Some(1.0));
        assert_eq!(ix.fp.value, Some(0.0));
        assert_eq!(ix.rbs.value, Some(0.0));
        assert_eq!(ix.trin.value, Some(1.0));

        let ix = compute_indices(&ContingencyTable::new(5, 5, 5, 5));
        assert_eq!((ix.l.value, ix.fp.value, ix.rbs.value, ix.trin.value), (Some(0.5), Some(0.5), Some(0.0), Some(0.5)));

        let ix = compute_indices(&ContingencyTable::new(10, 0, 90, 0));
        assert_eq!(ix.l.value, None);
        assert_eq!(ix.l.interval, None);
        assert_abs_diff_eq!(ix.fp.value.unwrap(), 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(ix.trin.value.unwrap(), 0.9, epsilon = 1e-15);
        assert_eq!(ix.rbs.value, None);
    }

    #[test]
    fn degeneracy_examples() {
        let constant = cell(&(0..524).map(|i| (i % 3 == 0, 0.95)).collect::<Vec<_>>());
        let v = degeneracy_check(&constant).unwrap().unwrap();
        assert!(v.few_distinct);
        assert_eq!(v.distinct_values, 1);

        // 96% HIGH with several distinct values
        let pairs: Vec<(bool, f64)> = (0..500)
            .map(|i| if i < 480 { (i % 2 == 0, 0.9 - (i % 4) as f64 * 0.01) } else { (false, 0.2) })
            .collect();
        let v = degeneracy_check(&cell(&pairs)).unwrap().unwrap();
        assert!(!v.few_distinct && v.one_sided);
        assert_abs_diff_eq!(v.dominant_share, 0.96, epsilon = 1e-12);

        let uniform: Vec<(bool, f64)> = (0..90).map(|i| (i % 2 == 0, (1 + i % 9) as f64 / 10.0)).collect();
        assert!(degeneracy_check(&cell(&uniform)).unwrap().is_none());

        let empty = Cell::new("m", Condition::Num, vec![]).unwrap();
        assert!(degeneracy_check(&empty).is_err());
    }

    #[test]
    fn distinct_values_ignore_float_noise() {
        let pairs = [(true, 0.7), (false, 0.7 + 1e-12), (true, 0.3), (false, 0.3 - 1e-12)];
        let p = probe_degeneracy(&cell(&pairs), 0.5).unwrap();
        assert_eq!(p.distinct_values, 2);
    }

    #[test]
    fn complete_degeneracy_is_invalid_at_step_one() {
        let pairs: Vec<(bool, f64)> = (0..524).map(|i| (i % 4 != 0, if i % 2 == 0 { 0.95 } else { 1.0 })).collect();
        let r = screen_cell(&cell(&pairs));
        assert_eq!(r.tier, Tier::Invalid);
        assert_eq!(r.decisive_step, Some(StepName::Degeneracy));
        assert!(r.degenerate);
        assert_eq!(r.indices.l.value, Some(1.0));
        assert_eq!(r.indices.trin.value, Some(1.0));
        assert_eq!(r.steps.len(), 7);
        assert!(r.steps[1..].iter().all(|s| s.outcome == StepOutcome::Skipped));
    }

    #[test]
    fn small_cell_count_is_insufficient() {
        let r = screen_cell(&cell_for(ContingencyTable::new(4, 100, 100, 100)));
        assert_eq!(r.tier, Tier::Insufficient);
        assert_eq!(r.decisive_step, Some(StepName::CellCounts));
        assert_eq!(r.steps[1].outcome, StepOutcome::Insufficient);
    }

    #[test]
    fn balanced_informative_cell_is_valid() {
        let r = screen_cell(&cell_for(ContingencyTable::new(100, 10, 10, 100)));
        assert_eq!(r.tier, Tier::Valid, "{:#?}", r.steps);
        assert!(!r.trin_warning);
        let order: Vec<StepName> = r.steps.iter().map(|s| s.step).collect();
        assert_eq!(order, STEP_ORDER.to_vec());
        assert_eq!(r.steps[6].outcome, StepOutcome::Reported);
    }

    #[test]
    fn empty_cell_is_insufficient() {
        let r = screen_cell(&Cell::new("m", Condition::Num, vec![]).unwrap());
        assert_eq!(r.tier, Tier::Insufficient);
        assert_eq!(r.steps[0].outcome, StepOutcome::NotEvaluable);
    }

    #[test]
    fn high_fp_is_invalid_at_fp_step() {
        // Fp = 60/90 with Wilson lower well above 0.40
        let r = screen_cell(&cell_for(ContingencyTable::new(30, 40, 60, 40)));
        assert_eq!(r.steps[3].outcome, StepOutcome::Invalid);
        assert_eq!(r.tier, Tier::Invalid);
        assert_eq!(r.decisive_step, Some(StepName::Fp));
    }

    #[test]
    fn marginal_fp_is_indeterminate() {
        // Fp = 10/20 = 0.5, Wilson lower ~0.30
        let r = screen_cell(&cell_for(ContingencyTable::new(10, 5, 10, 20)));
        assert_eq!(r.steps[3].outcome, StepOutcome::Indeterminate);
        assert_eq!(r.tier, Tier::Indeterminate);
    }

    #[test]
    fn high_l_is_invalid_at_l_step() {
        // L = 195/200 but b+d rows balanced enough to avoid degeneracy overall
        let r = screen_cell(&cell_for(ContingencyTable::new(140, 195, 60, 5)));
        assert_eq!(r.steps[4].outcome, StepOutcome::Invalid, "{:#?}", r.steps[4]);
        assert_eq!(r.decisive_step, Some(StepName::L));
    }

    #[test]
    fn inverted_signal_trips_rbs() {
        // Fp = 80/100, L = 80/100 -> RBS = 0.6
        let r = screen_cell(&cell_for(ContingencyTable::new(20, 80, 80, 20)));
        assert_eq!(r.steps[5].outcome, StepOutcome::Invalid);
        // Fp is earlier and also invalid, so it is decisive
        assert_eq!(r.decisive_step, Some(StepName::Fp));
        let iv = r.indices.rbs.interval.unwrap();
        assert!(iv.lower > 0.0);
    }

    #[test]
    fn not_evaluable_index_cannot_invalidate() {
        let mut table_only = compute_indices(&ContingencyTable::new(10, 0, 90, 0));
        table_only.l.interval = None;
        let step = bounded_step(StepName::L, &table_only.l, L_THRESHOLD, L_LOWER_BOUND);
        assert_eq!(step.outcome, StepOutcome::NotEvaluable);
    }

    #[test]
    fn report_is_order_independent() {
        let base = cell_for(ContingencyTable::new(40, 12, 9, 33));
        let mut trials = base.trials().to_vec();
        trials.reverse();
        trials.rotate_left(17);
        let shuffled = base.with_trials(trials);
        let (a, b) = (screen_cell(&base), screen_cell(&shuffled));
        assert_eq!(a.tier, b.tier);
        assert_eq!(a.steps, b.steps);
        assert_eq!(a.indices.rbs, b.indices.rbs);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn wilson_brackets_points(a in 0u64..60, b in 0u64..60, c in 0u64..60, d in 0u64..60) {
            let ix = compute_indices(&ContingencyTable::new(a, b, c, d));
            for est in [ix.l, ix.fp, ix.trin] {
                if let (Some(v), Some(iv)) = (est.value, est.interval) {
                    prop_assert!(iv.lower <= v && v <= iv.upper);
                }
            }
            if let (Some(fp), Some(l), Some(rbs)) = (ix.fp.value, ix.l.value, ix.rbs.value) {
                prop_assert!((rbs - (fp - (1.0 - l))).abs() < 1e-12);
            }
        }

        #[test]
        fn doubling_keeps_point_estimates(a in 0u64..60, b in 0u64..60, c in 0u64..60, d in 0u64..60) {
            let one = compute_indices(&ContingencyTable::new(a, b, c, d));
            let two = compute_indices(&ContingencyTable::new(2 * a, 2 * b, 2 * c, 2 * d));
            for (x, y) in [(one.l, two.l), (one.fp, two.fp), (one.rbs, two.rbs), (one.trin, two.trin)] {
                match (x.value, y.value) {
                    (Some(p), Some(q)) => prop_assert!((p - q).abs() < 1e-12),
                    (None, None) => {}
                    _ => prop_assert!(false, "definedness changed"),
                }
            }
        }

        #[test]
        fn degenerate_cells_are_always_invalid(pairs in proptest::collection::vec((any::<bool>(), 0.5f64..=1.0), 1..120)) {
            // all HIGH -> one-sided
            let r = screen_cell(&cell(&pairs));
            prop_assert_eq!(r.tier, Tier::Invalid);
            prop_assert!(r.degenerate);
        }
    }
}
