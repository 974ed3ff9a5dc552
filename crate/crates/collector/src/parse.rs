//! Response parsing: reasoning traces, confidence, answers, judging and
//! answer-span logprobs.

use std::sync::LazyLock;

use regex::Regex;

use crate::prompts::CAT_LABELS;
use crate::wire::ChoiceLogprobs;

static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d+(?:\.\d+)?").unwrap());
static MARKER_AFTER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^\s*(?:%|percent\b|per cent\b)").unwrap());
static MARKER_BEFORE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)confiden(?:ce|t)\b[^0-9\n]{0,24}$").unwrap());
static CONFIDENCE_WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bconfiden(?:ce|t)\b").unwrap());
static ANSWER_PREFIX: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^\s*(?:final\s+)?answer\s*[:\-]\s*").unwrap());
static LABELS: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    CAT_LABELS
        .iter()
        .map(|label| Regex::new(&format!(r"(?i)\b{}\b", regex::escape(label).replace(' ', r"\s+"))).unwrap())
        .collect()
});

const REASONING_TAGS: [(&str, &str); 2] = [("<think>", "</think>"), ("<reasoning>", "</reasoning>")];

/// Strips explicitly delimited reasoning from a response.
///
/// Returns the visible text and the character count of the reasoning span,
/// or `None` when no marker is present. An opening tag without a closing
/// tag makes the rest of the response reasoning; a closing tag without an
/// opening tag makes everything before it reasoning.
pub fn split_reasoning(text: &str) -> (String, Option<u64>) {
    for (open, close) in REASONING_TAGS {
        match (text.find(open), text.find(close)) {
            (Some(o), Some(c)) if c >= o + open.len() => {
                let trace = &text[o + open.len()..c];
                let visible = format!("{}{}", &text[..o], &text[c + close.len()..]);
                return (visible.trim().to_string(), Some(trace.chars().count() as u64));
            }
            (Some(o), None) => {
                let trace = &text[o + open.len()..];
                return (text[..o].trim().to_string(), Some(trace.chars().count() as u64));
            }
            (None, Some(c)) => {
                return (text[c + close.len()..].trim().to_string(), Some(text[..c].chars().count() as u64));
            }
            _ => {}
        }
    }
    (text.trim().to_string(), None)
}

/// A located numeric confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceSpan {
    /// Normalised to [0, 1].
    pub value: f64,
    /// Verbatim number text.
    pub raw: String,
    pub start: usize,
    pub end: usize,
}

fn standalone_numbers(text: &str) -> Vec<(f64, usize, usize)> {
    NUMBER
        .find_iter(text)
        .filter(|m| {
            let before = text[..m.start()].chars().next_back();
            let after = text[m.end()..].chars().next();
            let glued_before = before.is_some_and(|c| c.is_alphanumeric() || c == '.' || c == '-' || c == '_');
            let glued_after = after.is_some_and(|c| c.is_alphanumeric() || c == '_');
            !glued_before && !glued_after
        })
        .filter_map(|m| {
            let v: f64 = m.as_str().parse().ok()?;
            (0.0..=100.0).contains(&v).then_some((v, m.start(), m.end()))
        })
        .collect()
}

/// Finds the confidence a numeric response states.
///
/// Takes the last in-range number adjacent to a marker (`%`, "percent", or a
/// preceding "confidence"/"confident"); otherwise the only in-range number
/// if exactly one exists.
pub fn locate_numeric_confidence(text: &str) -> Option<ConfidenceSpan> {
    let numbers = standalone_numbers(text);
    let marked = numbers.iter().rev().find(|&&(_, s, e)| {
        MARKER_AFTER.is_match(&text[e..]) || MARKER_BEFORE.is_match(&text[..s])
    });
    let (value, start, end) = match marked {
        Some(&hit) => hit,
        None if numbers.len() == 1 => numbers[0],
        None => return None,
    };
    Some(ConfidenceSpan { value: value / 100.0, raw: text[start..end].to_string(), start, end })
}

pub fn parse_numeric_confidence(text: &str) -> Option<f64> {
    locate_numeric_confidence(text).map(|c| c.value)
}

fn clean_answer(text: &str) -> Option<String> {
    let line = text.lines().map(str::trim).find(|l| !l.is_empty())?;
    let line = ANSWER_PREFIX.replace(line, "");
    let trimmed = line
        .trim_matches(|c: char| c.is_whitespace() || matches!(c, '.' | ',' | ';' | ':' | '-' | '*' | '"' | '(' | ')'));
    (!trimmed.is_empty()).then(|| trimmed.to_string())
}

/// Answer text of a numeric response: what precedes the confidence marker.
pub fn extract_numeric_answer(text: &str, confidence: Option<&ConfidenceSpan>) -> Option<String> {
    let cut = match (CONFIDENCE_WORD.find(text), confidence) {
        (Some(word), Some(c)) => word.start().min(c.start),
        (Some(word), None) => word.start(),
        (None, Some(c)) => c.start,
        (None, None) => text.len(),
    };
    clean_answer(&text[..cut]).or_else(|| {
        // confidence stated first
        let after = confidence.map_or(text.len(), |c| c.end);
        clean_answer(text[after..].trim_start_matches(['%', ' ', '.', ',']))
    })
}

/// First non-empty line of an answer turn, without an "Answer:" prefix.
pub fn extract_free_answer(text: &str) -> Option<String> {
    clean_answer(text)
}

/// Class index 0..=9 of the single scale label present in `text`.
///
/// Labels match case-insensitively on word boundaries; a label nested inside
/// a longer matched label is ignored. Two different labels → `None`.
pub fn parse_categorical_confidence(text: &str) -> Option<usize> {
    let mut hits: Vec<(usize, usize, usize)> = Vec::new();
    for (class, re) in LABELS.iter().enumerate() {
        hits.extend(re.find_iter(text).map(|m| (class, m.start(), m.end())));
    }
    hits.sort_by_key(|&(_, s, e)| (std::cmp::Reverse(e - s), s));
    let mut kept: Vec<(usize, usize, usize)> = Vec::new();
    for hit in hits {
        if !kept.iter().any(|&(_, s, e)| hit.1 < e && s < hit.2) {
            kept.push(hit);
        }
    }
    let first = kept.first()?.0;
    kept.iter().all(|&(class, _, _)| class == first).then_some(first)
}

/// Lowercases, strips punctuation and the articles a/an/the, and collapses
/// whitespace.
pub fn normalize_answer(text: &str) -> Vec<String> {
    let lowered: String = text
        .to_lowercase()
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect();
    lowered
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .map(str::to_string)
        .collect()
}

/// True iff the normalised answer equals a normalised alias or contains one
/// as a contiguous token run.
pub fn judge_correctness(answer: &str, gold_aliases: &[String]) -> bool {
    let tokens = normalize_answer(answer);
    if tokens.is_empty() {
        return false;
    }
    gold_aliases.iter().any(|alias| {
        let want = normalize_answer(alias);
        !want.is_empty() && (tokens == want || tokens.windows(want.len()).any(|w| w == want.as_slice()))
    })
}

/// Mean chosen-token logprob over the tokens overlapping the first
/// occurrence of `answer` in the generated text (after any reasoning span).
pub fn extract_logprob_mean(logprobs: Option<&ChoiceLogprobs>, answer: &str) -> Option<f64> {
    let tokens = logprobs?.content.as_ref()?;
    if tokens.is_empty() || answer.is_empty() {
        return None;
    }
    let mut text = String::new();
    let mut spans = Vec::with_capacity(tokens.len());
    for t in tokens {
        let start = text.len();
        text.push_str(&t.token);
        spans.push((start, text.len(), t.logprob));
    }
    let from = REASONING_TAGS
        .iter()
        .filter_map(|(_, close)| text.rfind(close).map(|i| i + close.len()))
        .max()
        .unwrap_or(0);
    let at = from + text[from..].find(answer)?;
    let end = at + answer.len();
    let chosen: Vec<f64> = spans.iter().filter(|&&(s, e, _)| s < end && at < e).map(|&(_, _, lp)| lp).collect();
    (!chosen.is_empty()).then(|| chosen.iter().sum::<f64>() / chosen.len() as f64)
}
