use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use confscreen::trial::cat_class_confidence;
use confscreen::{Condition, ParseStatus, TrialRecord};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::parse::{
    extract_free_answer, extract_logprob_mean, extract_numeric_answer, judge_correctness, locate_numeric_confidence,
    parse_categorical_confidence, split_reasoning,
};
use crate::prompts::{CAT_LABELS, CAT_SYSTEM_PROMPT, NUM_SYSTEM_PROMPT};
use crate::wire::{ChatBackend, ChatRequest, ChatResponse, HttpBackend, Message, TransportError};

/// Separates the answer turn from the classification turn in `raw_response`.
pub const TURN_SEPARATOR: &str = "\n---\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub item_id: String,
    pub question: String,
    pub gold_aliases: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CollectError {
    #[error("cannot read items file {path}")]
    Open { path: PathBuf, source: std::io::Error },
    #[error("items line {line}: {message}")]
    BadItem { line: usize, message: String },
    #[error("no items to collect")]
    NoItems,
    #[error("attempted run with invalid configuration: {0}")]
    Config(String),
    #[error("aborting run: {0}")]
    Unreachable(TransportError),
}

/// Reads a JSONL items file. Blank lines are skipped.
pub fn read_items(path: &Path) -> Result<Vec<Item>, CollectError> {
    let file = File::open(path).map_err(|source| CollectError::Open { path: path.to_path_buf(), source })?;
    let mut items = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CollectError::BadItem { line: i + 1, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let item: Item =
            serde_json::from_str(&line).map_err(|e| CollectError::BadItem { line: i + 1, message: e.to_string() })?;
        if item.gold_aliases.is_empty() {
            return Err(CollectError::BadItem { line: i + 1, message: format!("item {} has no gold aliases", item.item_id) });
        }
        items.push(item);
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectorConfig {
    pub endpoint: String,
    pub model: String,
    pub condition: Condition,
    pub temperature: f64,
    pub seed: u64,
    pub timeout: Duration,
    pub retries: u32,
    /// First retry delay; doubles per attempt.
    pub backoff: Duration,
    pub top_logprobs: u32,
    pub parallelism: usize,
    pub max_tokens: Option<u32>,
    pub run_id: Option<String>,
}

impl CollectorConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, condition: Condition) -> Self {
        CollectorConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            condition,
            temperature: 0.0,
            seed: 42,
            timeout: Duration::from_secs(120),
            retries: 3,
            backoff: Duration::from_millis(500),
            top_logprobs: 5,
            parallelism: 4,
            max_tokens: None,
            run_id: None,
        }
    }

    pub fn run_id(&self) -> String {
        self.run_id.clone().unwrap_or_else(|| format!("{}-{}-s{}", self.model, self.condition, self.seed))
    }

    fn request(&self, messages: Vec<Message>) -> ChatRequest {
        ChatRequest {
            model: self.model.clone(),
            messages,
            temperature: self.temperature,
            seed: self.seed,
            logprobs: true,
            top_logprobs: self.top_logprobs,
            max_tokens: self.max_tokens,
        }
    }
}

/// Collects one condition over `items` through the configured HTTP endpoint.
pub fn run_condition(config: &CollectorConfig, items: &[Item]) -> Result<Vec<TrialRecord>, CollectError> {
    let backend = HttpBackend::new(&config.endpoint, config.timeout).map_err(CollectError::Unreachable)?;
    run_with_backend(config, items, &backend)
}

/// Collects one condition with an arbitrary backend. Records come back in
/// item order.
pub fn run_with_backend(
    config: &CollectorConfig,
    items: &[Item],
    backend: &dyn ChatBackend,
) -> Result<Vec<TrialRecord>, CollectError> {
    if items.is_empty() {
        return Err(CollectError::NoItems);
    }
    if config.temperature != 0.0 {
        return Err(CollectError::Config(format!("temperature must be 0, got {}", config.temperature)));
    }
    if let Some(item) = items.iter().find(|i| i.gold_aliases.is_empty()) {
        return Err(CollectError::Config(format!("item {} has no gold aliases", item.item_id)));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism.max(1))
        .build()
        .map_err(|e| CollectError::Config(e.to_string()))?;
    let run_id = config.run_id();
    pool.install(|| items.par_iter().map(|item| collect_item(config, &run_id, item, backend)).collect())
}

fn send(config: &CollectorConfig, backend: &dyn ChatBackend, request: &ChatRequest) -> Result<ChatResponse, TransportError> {
    let mut attempt = 0;
    loop {
        match backend.complete(request) {
            Ok(response) => return Ok(response),
            Err(err) if attempt < config.retries => {
                let delay = config.backoff * 2u32.saturating_pow(attempt);
                log::warn!("request failed ({err}); retry {} in {:?}", attempt + 1, delay);
                thread::sleep(delay);
                attempt += 1;
            }
            Err(err) => return Err(err),
        }
    }
}

struct Turn {
    visible: String,
    raw: String,
    trace_length: Option<u64>,
    logprobs: Option<crate::wire::ChoiceLogprobs>,
}

fn turn_of(response: ChatResponse) -> Turn {
    let choice = response.choices.into_iter().next().expect("backend returned no choices");
    let content = choice.message.content.unwrap_or_default();
    let (visible, mut trace_length) = split_reasoning(&content);
    if let Some(reasoning) = choice.message.reasoning_content.filter(|r| !r.is_empty()) {
        trace_length = Some(trace_length.unwrap_or(0) + reasoning.chars().count() as u64);
    }
    Turn { visible, raw: content, trace_length, logprobs: choice.logprobs }
}

fn collect_item(
    config: &CollectorConfig,
    run_id: &str,
    item: &Item,
    backend: &dyn ChatBackend,
) -> Result<TrialRecord, CollectError> {
    let mut record = TrialRecord {
        run_id: run_id.to_string(),
        model_id: config.model.clone(),
        condition: config.condition,
        item_id: item.item_id.clone(),
        question: item.question.clone(),
        gold_aliases: item.gold_aliases.clone(),
        raw_response: String::new(),
        parsed_answer: None,
        correct: None,
        confidence: None,
        confidence_raw: None,
        parse_status: ParseStatus::AnswerParseFail,
        logprob_mean: None,
        trace_length: None,
        seed: config.seed,
    };
    let first_messages = match config.condition {
        Condition::Num => vec![Message::system(NUM_SYSTEM_PROMPT), Message::user(&item.question)],
        Condition::Cat => vec![Message::user(&item.question)],
    };
    let answer_turn = match send(config, backend, &config.request(first_messages)) {
        Ok(response) => turn_of(response),
        Err(err @ TransportError::Unreachable(_)) => return Err(CollectError::Unreachable(err)),
        Err(err) => {
            record.raw_response = format!("transport error: {err}");
            return Ok(record);
        }
    };
    record.trace_length = answer_turn.trace_length;

    match config.condition {
        Condition::Num => {
            record.raw_response = answer_turn.raw.clone();
            let span = locate_numeric_confidence(&answer_turn.visible);
            record.parsed_answer = extract_numeric_answer(&answer_turn.visible, span.as_ref());
            if let Some(span) = span {
                record.confidence = Some(span.value);
                record.confidence_raw = Some(span.raw);
            }
        }
        Condition::Cat => {
            record.parsed_answer = extract_free_answer(&answer_turn.visible);
            let messages = vec![
                Message::user(&item.question),
                Message::assistant(&answer_turn.visible),
                Message::system(CAT_SYSTEM_PROMPT),
            ];
            match send(config, backend, &config.request(messages)) {
                Ok(response) => {
                    let class_turn = turn_of(response);
                    record.raw_response = format!("{}{TURN_SEPARATOR}{}", answer_turn.raw, class_turn.raw);
                    if let Some(class) = parse_categorical_confidence(&class_turn.visible) {
                        record.confidence = cat_class_confidence(class);
                        record.confidence_raw = Some(CAT_LABELS[class].to_string());
                    }
                }
                Err(err @ TransportError::Unreachable(_)) => return Err(CollectError::Unreachable(err)),
                Err(err) => {
                    record.raw_response = format!("{}{TURN_SEPARATOR}transport error: {err}", answer_turn.raw);
                }
            }
        }
    }

    if let Some(answer) = &record.parsed_answer {
        record.correct = Some(judge_correctness(answer, &item.gold_aliases));
        record.logprob_mean = extract_logprob_mean(answer_turn.logprobs.as_ref(), answer);
    }
    record.parse_status = match (&record.parsed_answer, record.confidence) {
        (None, _) => ParseStatus::AnswerParseFail,
        (Some(_), None) => ParseStatus::ConfidenceParseFail,
        (Some(_), Some(_)) => ParseStatus::Ok,
    };
    if record.parse_status == ParseStatus::AnswerParseFail {
        record.confidence = None;
        record.confidence_raw = None;
    }
    Ok(record)
}
