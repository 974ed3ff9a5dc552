//! Trial records, cells, binarisation and the 2×2 contingency table.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binarisation cut point; confidences at or above it are HIGH.
pub const BINARISE_THRESHOLD: f64 = 0.50;

/// Number of ordinal classes in the categorical elicitation scale.
pub const CAT_CLASSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "NUM")]
    Num,
    #[serde(rename = "CAT")]
    Cat,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Num => "NUM",
            Condition::Cat => "CAT",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NUM" => Ok(Condition::Num),
            "CAT" => Ok(Condition::Cat),
            other => Err(Error::InvalidArgument(format!("unknown condition {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ParseStatus {
    Ok,
    ConfidenceParseFail,
    AnswerParseFail,
}

impl ParseStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseStatus::Ok => "OK",
            ParseStatus::ConfidenceParseFail => "CONFIDENCE_PARSE_FAIL",
            ParseStatus::AnswerParseFail => "ANSWER_PARSE_FAIL",
        }
    }
}

impl std::str::FromStr for ParseStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "OK" => Ok(ParseStatus::Ok),
            "CONFIDENCE_PARSE_FAIL" => Ok(ParseStatus::ConfidenceParseFail),
            "ANSWER_PARSE_FAIL" => Ok(ParseStatus::AnswerParseFail),
            other => Err(Error::InvalidArgument(format!("unknown parse_status {other:?}"))),
        }
    }
}

/// One elicitation trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub run_id: String,
    pub model_id: String,
    pub condition: Condition,
    pub item_id: String,
    pub question: String,
    pub gold_aliases: Vec<String>,
    pub raw_response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parsed_answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    /// Normalised to [0, 1].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence_raw: Option<String>,
    pub parse_status: ParseStatus,
    /// Mean chosen-token log-probability over the answer span.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logprob_mean: Option<f64>,
    /// Reasoning-trace length in characters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_length: Option<u64>,
    pub seed: u64,
}

impl TrialRecord {
    /// Checks the record-level invariants.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::InvalidTrial { item_id: self.item_id.clone(), reason });
        match (self.parse_status, self.confidence) {
            (ParseStatus::Ok, None) => return fail("parse_status OK but confidence missing".into()),
            (ParseStatus::Ok, Some(c)) if !(0.0..=1.0).contains(&c) => {
                return fail(format!("confidence {c} is outside [0, 1]"));
            }
            (status, Some(_)) if status != ParseStatus::Ok => {
                return fail(format!("confidence present with parse_status {}", status.as_str()));
            }
            _ => {}
        }
        if let Some(lp) = self.logprob_mean {
            if !lp.is_finite() {
                return fail(format!("logprob_mean {lp} is not finite"));
            }
        }
        Ok(())
    }

    pub fn is_parse_ok(&self) -> bool {
        self.parse_status == ParseStatus::Ok
    }

    /// Confidence and correctness for a parse-ok trial with known correctness.
    pub fn judged(&self) -> Option<(f64, bool)> {
        match (self.parse_status, self.confidence, self.correct) {
            (ParseStatus::Ok, Some(conf), Some(correct)) => Some((conf, correct)),
            _ => None,
        }
    }
}

/// Confidence assigned to categorical class `k` (bin midpoint).
pub fn cat_class_confidence(class: usize) -> Option<f64> {
    (class < CAT_CLASSES).then(|| (class as f64 + 0.5) / CAT_CLASSES as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Binary {
    High,
    Low,
}

pub fn binarize(confidence: f64) -> Result<Binary> {
    binarize_at(confidence, BINARISE_THRESHOLD)
}

pub fn binarize_at(confidence: f64, threshold: f64) -> Result<Binary> {
    if !(0.0..=1.0).contains(&confidence) {
        return Err(Error::ConfidenceOutOfRange(confidence));
    }
    Ok(if confidence >= threshold { Binary::High } else { Binary::Low })
}

/// All trials for one model × condition pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    model_id: String,
    condition: Condition,
    trials: Vec<TrialRecord>,
    n_total: usize,
    n_parse_ok: usize,
    n_correct: usize,
}

impl Cell {
    pub fn new(model_id: impl Into<String>, condition: Condition, trials: Vec<TrialRecord>) -> Result<Self> {
        let model_id = model_id.into();
        for t in &trials {
            if t.model_id != model_id || t.condition != condition {
                return Err(Error::MixedCell {
                    expected: format!("{model_id}/{condition}"),
                    found: format!("{}/{}", t.model_id, t.condition),
                });
            }
        }
        let (n_parse_ok, n_correct) = count(&trials);
        Ok(Self { model_id, condition, n_total: trials.len(), n_parse_ok, n_correct, trials })
    }

    /// Builds a cell from trials that all share one model and condition.
    pub fn from_trials(trials: Vec<TrialRecord>) -> Result<Self> {
        let first = trials
            .first()
            .ok_or_else(|| Error::InvalidArgument("cannot infer cell identity from zero trials".into()))?;
        let (model, condition) = (first.model_id.clone(), first.condition);
        Self::new(model, condition, trials)
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn condition(&self) -> Condition {
        self.condition
    }

    pub fn trials(&self) -> &[TrialRecord] {
        &self.trials
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn n_parse_ok(&self) -> usize {
        self.n_parse_ok
    }

    /// Correct trials among parse-ok trials.
    pub fn n_correct(&self) -> usize {
        self.n_correct
    }

    /// Trials without an extracted confidence (either failure status).
    pub fn n_parse_fail(&self) -> usize {
        self.n_total - self.n_parse_ok
    }

    /// Fraction of trials without an extracted confidence; `None` when empty.
    pub fn parse_failure_rate(&self) -> Option<f64> {
        (self.n_total > 0).then(|| self.n_parse_fail() as f64 / self.n_total as f64)
    }

    /// Parse-ok trials whose correctness is unknown; excluded from the table.
    pub fn n_unjudged_parse_ok(&self) -> usize {
        self.trials.iter().filter(|t| t.is_parse_ok() && t.correct.is_none()).count()
    }

    pub fn parse_ok_confidences(&self) -> impl Iterator<Item = f64> + '_ {
        self.trials.iter().filter_map(|t| if t.is_parse_ok() { t.confidence } else { None })
    }

    pub fn judged(&self) -> impl Iterator<Item = (f64, bool)> + '_ {
        self.trials.iter().filter_map(TrialRecord::judged)
    }

    /// Recounts from the trials and compares with the stored counts.
    pub fn verify_counts(&self) -> Result<()> {
        let (ok, correct) = count(&self.trials);
        if self.trials.len() != self.n_total || ok != self.n_parse_ok || correct != self.n_correct {
            return Err(Error::CellCountMismatch(format!(
                "stored ({}, {}, {}) vs recount ({}, {ok}, {correct})",
                self.n_total,
                self.n_parse_ok,
                self.n_correct,
                self.trials.len()
            )));
        }
        Ok(())
    }

    /// A new cell with the same identity over a subset of trials.
    pub fn with_trials(&self, trials: Vec<TrialRecord>) -> Self {
        let (n_parse_ok, n_correct) = count(&trials);
        Self {
            model_id: self.model_id.clone(),
            condition: self.condition,
            n_total: trials.len(),
            n_parse_ok,
            n_correct,
            trials,
        }
    }

    pub fn into_trials(self) -> Vec<TrialRecord> {
        self.trials
    }
}

fn count(trials: &[TrialRecord]) -> (usize, usize) {
    let ok = trials.iter().filter(|t| t.is_parse_ok()).count();
    let correct = trials.iter().filter(|t| t.is_parse_ok() && t.correct == Some(true)).count();
    (ok, correct)
}

/// 2×2 counts after binarisation.
///
/// |      | correct | incorrect |
/// |------|---------|-----------|
/// | HIGH | a       | b         |
/// | LOW  | c       | d         |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl ContingencyTable {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        Self { a, b, c, d }
    }

    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }

    pub fn n_high(&self) -> u64 {
        self.a + self.b
    }

    pub fn n_low(&self) -> u64 {
        self.c + self.d
    }

    pub fn min_count(&self) -> u64 {
        self.a.min(self.b).min(self.c).min(self.d)
    }

    fn add(&mut self, level: Binary, correct: bool) {
        match (level, correct) {
            (Binary::High, true) => self.a += 1,
            (Binary::High, false) => self.b += 1,
            (Binary::Low, true) => self.c += 1,
            (Binary::Low, false) => self.d += 1,
        }
    }
}

pub fn build_contingency(cell: &Cell) -> ContingencyTable {
    build_contingency_at(cell, BINARISE_THRESHOLD)
}

pub fn build_contingency_at(cell: &Cell, threshold: f64) -> ContingencyTable {
    contingency_from_pairs(cell.judged(), threshold)
}

/// Table over `(confidence, correct)` pairs. Out-of-range confidences are
/// skipped; validated records never carry one.
pub fn contingency_from_pairs(pairs: impl IntoIterator<Item = (f64, bool)>, threshold: f64) -> ContingencyTable {
    let mut table = ContingencyTable::default();
    for (conf, correct) in pairs {
        if let Ok(level) = binarize_at(conf, threshold) {
            table.add(level, correct);
        }
    }
    table
}
