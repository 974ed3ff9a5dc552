//! Seeded synthetic cells with controlled accuracy, ceiling mass, parse
//! failures and planted correlations.
//!
//! Each trial carries a latent confidence score
//!
//! ```text
//! s = mu * correct - DIFFICULTY_LOADING * z + e,    z, e ~ N(0, 1)
//! ```
//!
//! where `z` is the item's difficulty latent. Under the binormal model the
//! AUROC of `s` is `Phi(mu / sqrt(2 (1 + loading^2)))`, which is inverted to
//! hit `target_auroc2`. Confidences are assigned by rank of `s`: the top
//! `ceiling_mass` share receives sorted draws from `[0.95, 1)`, the rest
//! sorted draws from the off-ceiling interval, so confidence is monotone in
//! `s` and AUROC₂ is preserved.

use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::metrics::CEILING_THRESHOLD;
use crate::stats::normal_quantile;
use crate::trial::{cat_class_confidence, Cell, Condition, ParseStatus, TrialRecord, CAT_CLASSES};

/// Weight of the difficulty latent in the confidence latent.
pub const DIFFICULTY_LOADING: f64 = 0.5;
/// Weight of the difficulty latent in the trace-length latent.
const TRACE_DIFFICULTY_LOADING: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub model_id: String,
    pub condition: Condition,
    pub n: usize,
    pub accuracy: f64,
    /// Share of trials with confidence >= 0.95.
    pub ceiling_mass: f64,
    /// Uniform off-ceiling interval `[lo, hi)`, `hi <= 0.95`. Required when
    /// `ceiling_mass < 1`; must be absent when `ceiling_mass == 1`.
    pub off_ceiling: Option<(f64, f64)>,
    pub parse_fail_rate_correct: f64,
    pub parse_fail_rate_incorrect: f64,
    /// Target R² of confidence on `logprob_mean`; absent means independent.
    pub planted_logprob_r2: Option<f64>,
    /// Target partial Spearman of trace length with confidence given
    /// difficulty; absent means no trace lengths are emitted.
    pub planted_trace_rho: Option<f64>,
    pub target_auroc2: Option<f64>,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            model_id: "synthetic".into(),
            condition: Condition::Num,
            n,
            accuracy: 0.5,
            ceiling_mass: 0.0,
            off_ceiling: Some((0.0, CEILING_THRESHOLD)),
            parse_fail_rate_correct: 0.0,
            parse_fail_rate_incorrect: 0.0,
            planted_logprob_r2: None,
            planted_trace_rho: None,
            target_auroc2: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        for (name, v) in [
            ("accuracy", self.accuracy),
            ("ceiling_mass", self.ceiling_mass),
            ("parse_fail_rate_correct", self.parse_fail_rate_correct),
            ("parse_fail_rate_incorrect", self.parse_fail_rate_incorrect),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} is outside [0, 1]"));
            }
        }
        match self.off_ceiling {
            Some(_) if self.ceiling_mass >= 1.0 => {
                return bad("off-ceiling dispersion requested with ceiling_mass = 1".into());
            }
            None if self.ceiling_mass < 1.0 => {
                return bad("ceiling_mass < 1 needs an off-ceiling interval".into());
            }
            Some((lo, hi)) if !(0.0 <= lo && lo < hi && hi <= CEILING_THRESHOLD) => {
                return bad(format!("off-ceiling interval [{lo}, {hi}) must satisfy 0 <= lo < hi <= {CEILING_THRESHOLD}"));
            }
            _ => {}
        }
        if let Some(r2) = self.planted_logprob_r2 {
            if !(0.0..=1.0).contains(&r2) {
                return bad(format!("planted_logprob_r2 = {r2} is outside [0, 1]"));
            }
        }
        if let Some(rho) = self.planted_trace_rho {
            if !(-1.0..=1.0).contains(&rho) {
                return bad(format!("planted_trace_rho = {rho} is outside [-1, 1]"));
            }
        }
        if let Some(auc) = self.target_auroc2 {
            if !(auc > 0.0 && auc < 1.0) {
                return bad(format!("target_auroc2 = {auc} must lie in (0, 1)"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCell {
    pub cell: Cell,
    /// Difficulty in (0, 1) per item, monotone in the difficulty latent.
    pub item_difficulty: BTreeMap<String, f64>,
}

/// Latent separation giving `auroc` under the binormal model.
pub fn latent_separation(auroc: f64) -> f64 {
    normal_quantile(auroc) * (2.0 * (1.0 + DIFFICULTY_LOADING * DIFFICULTY_LOADING)).sqrt()
}

fn sorted_uniforms(rng: &mut ChaCha8Rng, k: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn standardise(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd > 0.0 {
        values.iter().map(|v| (v - mean) / sd).collect()
    } else {
        vec![0.0; values.len()]
    }
}

pub fn generate_cell(spec: &GenSpec) -> Result<SyntheticCell> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };

    let n_correct = (spec.accuracy * n as f64).round() as usize;
    let mut correct: Vec<bool> = (0..n).map(|i| i < n_correct).collect();
    correct.shuffle(&mut rng);

    let difficulty_latent: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let mu = spec.target_auroc2.map_or(0.0, latent_separation);
    let residual: Vec<f64> = (0..n).map(|i| mu * f64::from(u8::from(correct[i])) + normal(&mut rng)).collect();
    let latent: Vec<f64> = (0..n).map(|i| residual[i] - DIFFICULTY_LOADING * difficulty_latent[i]).collect();

    // rank-matched confidence assignment
    let n_ceiling = (spec.ceiling_mass * n as f64).round() as usize;
    let mut by_latent: Vec<usize> = (0..n).collect();
    by_latent.sort_by(|&i, &j| latent[i].total_cmp(&latent[j]));
    let off = spec.off_ceiling.map_or(Vec::new(), |(lo, hi)| sorted_uniforms(&mut rng, n - n_ceiling, lo, hi));
    let ceiling = sorted_uniforms(&mut rng, n_ceiling, CEILING_THRESHOLD, 1.0);
    let mut confidence = vec![0.0; n];
    for (rank, &idx) in by_latent.iter().enumerate() {
        confidence[idx] = if rank < n - n_ceiling { off[rank] } else { ceiling[rank - (n - n_ceiling)] };
    }
    if spec.condition == Condition::Cat {
        for c in &mut confidence {
            let class = ((*c * CAT_CLASSES as f64).floor() as usize).min(CAT_CLASSES - 1);
            *c = cat_class_confidence(class).expect("class in range");
        }
    }

    // parse failures: exact quotas within each correctness class
    let mut failed = vec![false; n];
    for (want, rate) in [(true, spec.parse_fail_rate_correct), (false, spec.parse_fail_rate_incorrect)] {
        let members: Vec<usize> = (0..n).filter(|&i| correct[i] == want).collect();
        let k = (rate * members.len() as f64).round() as usize;
        for pick in index::sample(&mut rng, members.len(), k) {
            failed[members[pick]] = true;
        }
    }

    let conf_z = standardise(&confidence);
    let logprob: Vec<f64> = (0..n)
        .map(|i| {
            let noise = normal(&mut rng);
            let signal = match spec.planted_logprob_r2 {
                Some(r2) => r2.sqrt() * conf_z[i] + (1.0 - r2).sqrt() * noise,
                None => noise,
            };
            (-3.0 + 0.5 * signal).min(0.0)
        })
        .collect();

    let trace: Option<Vec<u64>> = spec.planted_trace_rho.map(|rho| {
        // Pearson target whose Spearman image under normality is rho
        let r = 2.0 * (std::f64::consts::PI * rho / 6.0).sin();
        let resid_z = standardise(&residual);
        (0..n)
            .map(|i| {
                let v = TRACE_DIFFICULTY_LOADING * difficulty_latent[i]
                    + r * resid_z[i]
                    + (1.0 - r * r).max(0.0).sqrt() * normal(&mut rng);
                (300.0 * (0.6 * v).exp()).round() as u64
            })
            .collect()
    });

    let phi = Normal::standard();
    let run_id = format!("synth-{}-{}-s{}", spec.model_id, spec.condition, spec.seed);
    let mut item_difficulty = BTreeMap::new();
    let trials = (0..n)
        .map(|i| {
            let item_id = format!("item-{i:04}");
            item_difficulty.insert(item_id.clone(), phi.cdf(difficulty_latent[i]));
            let gold = format!("answer {i}");
            let answer = if correct[i] { gold.clone() } else { format!("wrong {i}") };
            let pct = (confidence[i] * 100.0 * 1e4).round() / 1e4;
            let (status, conf, raw, response) = if failed[i] {
                (ParseStatus::ConfidenceParseFail, None, None, format!("{answer}."))
            } else {
                (ParseStatus::Ok, Some(confidence[i]), Some(format!("{pct}")), format!("{answer}. Confidence: {pct}%"))
            };
            TrialRecord {
                run_id: run_id.clone(),
                model_id: spec.model_id.clone(),
                condition: spec.condition,
                item_id,
                question: format!("synthetic question {i}"),
                gold_aliases: vec![gold],
                raw_response: response,
                parsed_answer: Some(answer),
                correct: Some(correct[i]),
                confidence: conf,
                confidence_raw: raw,
                parse_status: status,
                logprob_mean: Some(logprob[i]),
                trace_length: trace.as_ref().map(|t| t[i]),
                seed: spec.seed,
            }
        })
        .collect();
    Ok(SyntheticCell { cell: Cell::new(spec.model_id.clone(), spec.condition, trials)?, item_difficulty })
}
