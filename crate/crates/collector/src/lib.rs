//! Elicitation harness for chat-completions style endpoints.
//!
//! Each item is asked under one elicitation condition with greedy decoding
//! (temperature 0, fixed seed, top-5 logprobs). Responses are parsed for an
//! answer and a confidence, judged against the gold aliases, and emitted as
//! [`confscreen::TrialRecord`]s in item order.

mod collect;
pub mod mock;
pub mod parse;
pub mod prompts;
pub mod wire;

pub use collect::{read_items, run_condition, run_with_backend, CollectError, CollectorConfig, Item};
pub use parse::{
    extract_logprob_mean, judge_correctness, parse_categorical_confidence, parse_numeric_confidence, split_reasoning,
};
pub use prompts::{CAT_LABELS, CAT_SYSTEM_PROMPT, NUM_SYSTEM_PROMPT};
pub use wire::{ChatBackend, HttpBackend, TransportError};
