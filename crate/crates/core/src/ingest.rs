//! Trial-log I/O, cell grouping and whole-run evaluation.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, item_difficulty, MetricsConfig, MetricsReport, CEILING_THRESHOLD};
use crate::screening::{screen_cell_with, ScreeningReport};
use crate::trial::{Cell, Condition, TrialRecord, BINARISE_THRESHOLD};

/// Cells with a parse-failure share strictly above this are excluded.
pub const EXCLUSION_THRESHOLD: f64 = 0.30;
/// Maximum share of malformed lines tolerated by [`read_trials`].
pub const MAX_BAD_LINE_SHARE: f64 = 0.01;
/// Separator for `gold_aliases` in the CSV view.
pub const ALIAS_DELIMITER: char = '|';

pub const CSV_COLUMNS: [&str; 15] = [
    "run_id",
    "model_id",
    "condition",
    "item_id",
    "question",
    "gold_aliases",
    "raw_response",
    "parsed_answer",
    "correct",
    "confidence",
    "confidence_raw",
    "parse_status",
    "logprob_mean",
    "trace_length",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrialFormat {
    Jsonl,
    Csv,
}

impl TrialFormat {
    /// `.csv` means CSV; anything else is read as JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => TrialFormat::Csv,
            _ => TrialFormat::Jsonl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReadOutcome {
    pub trials: Vec<TrialRecord>,
    /// Malformed lines, tolerated while under [`MAX_BAD_LINE_SHARE`].
    pub errors: Vec<LineError>,
}

pub fn read_trials(path: &Path, format: TrialFormat) -> Result<ReadOutcome> {
    let file = File::open(path).map_err(|source| Error::Open { path: path.to_path_buf(), source })?;
    read_trials_from(file, format)
}

pub fn read_trials_from(reader: impl Read, format: TrialFormat) -> Result<ReadOutcome> {
    let (outcome, total) = match format {
        TrialFormat::Jsonl => read_jsonl(reader)?,
        TrialFormat::Csv => read_csv(reader)?,
    };
    let bad = outcome.errors.len();
    if bad as f64 > MAX_BAD_LINE_SHARE * total as f64 {
        let first = &outcome.errors[0];
        return Err(Error::TooManyBadLines { bad, total, first_line: first.line, first_message: first.message.clone() });
    }
    Ok(outcome)
}

fn read_jsonl(reader: impl Read) -> Result<(ReadOutcome, usize)> {
    let mut out = ReadOutcome::default();
    let mut total = 0;
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        let parsed = serde_json::from_str::<TrialRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(|t| t.validate().map(|_| t).map_err(|e| e.to_string()));
        match parsed {
            Ok(t) => out.trials.push(t),
            Err(message) => out.errors.push(LineError { line: i + 1, message }),
        }
    }
    Ok((out, total))
}

fn read_csv(reader: impl Read) -> Result<(ReadOutcome, usize)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(Error::Header(format!("expected {:?}, found {:?}", CSV_COLUMNS, headers.iter().collect::<Vec<_>>())));
    }
    let mut out = ReadOutcome::default();
    let mut total = 0;
    for record in rdr.records() {
        total += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                out.errors.push(LineError { line, message: e.to_string() });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line() as usize);
        match csv_row_to_trial(&record).and_then(|t| t.validate().map(|_| t)) {
            Ok(t) => out.trials.push(t),
            Err(e) => out.errors.push(LineError { line, message: e.to_string() }),
        }
    }
    Ok((out, total))
}

fn csv_row_to_trial(row: &csv::StringRecord) -> Result<TrialRecord> {
    if row.len() != CSV_COLUMNS.len() {
        return Err(Error::InvalidArgument(format!("expected {} fields, found {}", CSV_COLUMNS.len(), row.len())));
    }
    let opt = |i: usize| Some(row[i].to_string()).filter(|s| !s.is_empty());
    fn num<T: std::str::FromStr>(field: &str, raw: Option<String>) -> Result<Option<T>> {
        raw.map(|s| s.parse::<T>().map_err(|_| Error::InvalidArgument(format!("{field}: cannot parse {s:?}"))))
            .transpose()
    }
    let aliases = if row[5].is_empty() { Vec::new() } else { row[5].split(ALIAS_DELIMITER).map(str::to_string).collect() };
    Ok(TrialRecord {
        run_id: row[0].to_string(),
        model_id: row[1].to_string(),
        condition: row[2].parse()?,
        item_id: row[3].to_string(),
        question: row[4].to_string(),
        gold_aliases: aliases,
        raw_response: row[6].to_string(),
        parsed_answer: opt(7),
        correct: num("correct", opt(8))?,
        confidence: num("confidence", opt(9))?,
        confidence_raw: opt(10),
        parse_status: row[11].parse()?,
        logprob_mean: num("logprob_mean", opt(12))?,
        trace_length: num("trace_length", opt(13))?,
        seed: num("seed", opt(14))?.ok_or_else(|| Error::InvalidArgument("seed missing".into()))?,
    })
}

pub fn write_trials(mut writer: impl Write, trials: &[TrialRecord], format: TrialFormat) -> Result<()> {
    match format {
        TrialFormat::Jsonl => {
            for t in trials {
                serde_json::to_writer(&mut writer, t)?;
                writer.write_all(b"\n")?;
            }
        }
        TrialFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut writer);
            w.write_record(CSV_COLUMNS)?;
            for t in trials {
                if t.gold_aliases.iter().any(|a| a.contains(ALIAS_DELIMITER)) {
                    return Err(Error::InvalidTrial {
                        item_id: t.item_id.clone(),
                        reason: format!("alias contains the reserved delimiter {ALIAS_DELIMITER:?}"),
                    });
                }
                let show = |v: Option<String>| v.unwrap_or_default();
                w.write_record([
                    t.run_id.clone(),
                    t.model_id.clone(),
                    t.condition.to_string(),
                    t.item_id.clone(),
                    t.question.clone(),
                    t.gold_aliases.join(&ALIAS_DELIMITER.to_string()),
                    t.raw_response.clone(),
                    show(t.parsed_answer.clone()),
                    show(t.correct.map(|c| c.to_string())),
                    show(t.confidence.map(|c| c.to_string())),
                    show(t.confidence_raw.clone()),
                    t.parse_status.as_str().to_string(),
                    show(t.logprob_mean.map(|c| c.to_string())),
                    show(t.trace_length.map(|c| c.to_string())),
                    t.seed.to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateItem {
    pub model_id: String,
    pub condition: Condition,
    pub item_id: String,
    pub count: usize,
}

/// One cell per distinct `(model_id, condition)`, sorted by model then
/// condition. Duplicated items are reported but kept.
pub fn group_cells(trials: Vec<TrialRecord>) -> (Vec<Cell>, Vec<DuplicateItem>) {
    let mut groups: BTreeMap<(String, Condition), Vec<TrialRecord>> = BTreeMap::new();
    for t in trials {
        groups.entry((t.model_id.clone(), t.condition)).or_default().push(t);
    }
    let mut duplicates = Vec::new();
    let cells = groups
        .into_iter()
        .map(|((model, condition), trials)| {
            let cell = Cell::new(model, condition, trials).expect("grouped by identity");
            duplicates.extend(duplicate_items(&cell));
            cell
        })
        .collect();
    (cells, duplicates)
}

fn duplicate_items(cell: &Cell) -> Vec<DuplicateItem> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in cell.trials() {
        *counts.entry(t.item_id.as_str()).or_default() += 1;
    }
    counts
        .into_iter()
        .filter(|&(_, c)| c > 1)
        .map(|(item, count)| DuplicateItem {
            model_id: cell.model_id().to_string(),
            condition: cell.condition(),
            item_id: item.to_string(),
            count,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub exclusion_threshold: f64,
    pub metrics: MetricsConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { exclusion_threshold: EXCLUSION_THRESHOLD, metrics: MetricsConfig::default() }
    }
}

impl EvalConfig {
    pub fn with_thresholds(binarise: f64, ceiling: f64, exclusion: f64) -> Self {
        let mut cfg = Self::default();
        cfg.exclusion_threshold = exclusion;
        cfg.metrics.ceiling_threshold = ceiling;
        cfg.metrics.screening.binarise_threshold = binarise;
        cfg
    }

    pub fn stamp(&self) -> ProtocolStamp {
        let binarise = self.metrics.screening.binarise_threshold;
        let ceiling = self.metrics.ceiling_threshold;
        let exclusion = self.exclusion_threshold;
        let mut non_default = Vec::new();
        if binarise != BINARISE_THRESHOLD {
            non_default.push(format!("binarise_threshold={binarise} (protocol {BINARISE_THRESHOLD})"));
        }
        if ceiling != CEILING_THRESHOLD {
            non_default.push(format!("ceiling_threshold={ceiling} (protocol {CEILING_THRESHOLD})"));
        }
        if exclusion != EXCLUSION_THRESHOLD {
            non_default.push(format!("exclusion_threshold={exclusion} (protocol {EXCLUSION_THRESHOLD})"));
        }
        ProtocolStamp { binarise_threshold: binarise, ceiling_threshold: ceiling, exclusion_threshold: exclusion, non_default }
    }
}

/// Thresholds a result was computed under; `non_default` is empty unless
/// the protocol values were overridden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolStamp {
    pub binarise_threshold: f64,
    pub ceiling_threshold: f64,
    pub exclusion_threshold: f64,
    pub non_default: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub model_id: String,
    pub condition: Condition,
    pub n_total: usize,
    pub n_parse_ok: usize,
    pub n_correct: usize,
    /// Share of trials with an extracted confidence; `None` for empty cells.
    pub parse_rate: Option<f64>,
    pub excluded_by_parse_rate: bool,
    pub screening: ScreeningReport,
    pub metrics: MetricsReport,
    pub duplicates: Vec<DuplicateItem>,
    pub protocol: ProtocolStamp,
}

/// Parse failure strictly above `threshold` excludes the cell.
pub fn is_excluded(cell: &Cell, threshold: f64) -> bool {
    cell.parse_failure_rate().is_some_and(|rate| rate > threshold)
}

pub fn evaluate_cell(cell: &Cell, difficulty: &BTreeMap<String, f64>, config: &EvalConfig) -> CellResult {
    let excluded = is_excluded(cell, config.exclusion_threshold);
    let mut screening = screen_cell_with(cell, &config.metrics.screening);
    screening.excluded_by_parse_rate = excluded;
    CellResult {
        model_id: cell.model_id().to_string(),
        condition: cell.condition(),
        n_total: cell.n_total(),
        n_parse_ok: cell.n_parse_ok(),
        n_correct: cell.n_correct(),
        parse_rate: cell.parse_failure_rate().map(|f| 1.0 - f),
        excluded_by_parse_rate: excluded,
        screening,
        metrics: compute_metrics(cell, difficulty, &config.metrics),
        duplicates: duplicate_items(cell),
        protocol: config.stamp(),
    }
}

/// Screens and measures every cell; excluded cells are still screened and
/// labelled. Output is sorted by model then condition.
pub fn evaluate_all(cells: &[Cell], config: &EvalConfig) -> Vec<CellResult> {
    let difficulty = item_difficulty(cells);
    let mut order: Vec<&Cell> = cells.iter().collect();
    order.sort_by(|x, y| (x.model_id(), x.condition()).cmp(&(y.model_id(), y.condition())));
    order.par_iter().map(|cell| evaluate_cell(cell, &difficulty, config)).collect()
}
