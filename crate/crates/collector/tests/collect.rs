use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use confscreen::{Condition, ParseStatus};
use confscreen_collector::mock::{chat_response, scripted_model, MockServer};
use confscreen_collector::wire::{ChatRequest, ChatResponse};
use confscreen_collector::{
    read_items, run_condition, run_with_backend, CollectError, CollectorConfig, Item, TransportError,
    CAT_SYSTEM_PROMPT, NUM_SYSTEM_PROMPT,
};

const NUM_GOLDEN: &str = include_str!("golden/num_system_prompt.txt");
const CAT_GOLDEN: &str = include_str!("golden/cat_system_prompt.txt");

fn items(n: usize) -> Vec<Item> {
    (0..n)
        .map(|i| Item {
            item_id: format!("q{i:04}"),
            question: format!("Question number {i}, answer: city{}?", i % 7),
            gold_aliases: vec![format!("city{}", i % 7), format!("town {}", i % 7)],
        })
        .collect()
}

fn config(url: &str, condition: Condition) -> CollectorConfig {
    let mut config = CollectorConfig::new(url, "mock-model", condition);
    config.backoff = Duration::from_millis(1);
    config.timeout = Duration::from_secs(10);
    config
}

fn system_prompts(bodies: &[String]) -> Vec<String> {
    bodies
        .iter()
        .flat_map(|b| serde_json::from_str::<ChatRequest>(b).unwrap().messages)
        .filter(|m| m.role == "system")
        .map(|m| m.content)
        .collect()
}

#[test]
fn golden_files_hold_the_protocol_prompts() {
    assert_eq!(NUM_SYSTEM_PROMPT, NUM_GOLDEN);
    assert_eq!(CAT_SYSTEM_PROMPT, CAT_GOLDEN);
    assert!(CAT_GOLDEN.starts_with(
        "Classify your confidence into one of the following classes based on how likely the answer above is to be correct (NO REASONING OR EXPLANATION):\n- No chance (0.0-0.1)"
    ));
    assert!(CAT_GOLDEN.ends_with("- Almost certain (0.9-1.0)"));
}

#[test]
fn wire_prompts_match_golden_files() {
    let server = MockServer::start(scripted_model).unwrap();
    run_condition(&config(&server.url(), Condition::Num), &items(5)).unwrap();
    let prompts = system_prompts(&server.requests());
    assert_eq!(prompts.len(), 5);
    assert!(prompts.iter().all(|p| p.as_bytes() == NUM_GOLDEN.as_bytes()));

    let server = MockServer::start(scripted_model).unwrap();
    run_condition(&config(&server.url(), Condition::Cat), &items(5)).unwrap();
    let bodies = server.requests();
    assert_eq!(bodies.len(), 10);
    let prompts = system_prompts(&bodies);
    assert_eq!(prompts.len(), 5);
    assert!(prompts.iter().all(|p| p.as_bytes() == CAT_GOLDEN.as_bytes()));
}

#[test]
fn requests_are_greedy_and_seeded() {
    let server = MockServer::start(scripted_model).unwrap();
    run_condition(&config(&server.url(), Condition::Num), &items(3)).unwrap();
    for body in server.requests() {
        let value: serde_json::Value = serde_json::from_str(&body).unwrap();
        assert_eq!(value["temperature"], 0.0);
        assert_eq!(value["seed"], 42);
        assert_eq!(value["logprobs"], true);
        assert_eq!(value["top_logprobs"], 5);
        assert_eq!(value["model"], "mock-model");
        assert_eq!(value["messages"][0]["role"], "system");
        assert_eq!(value["messages"][1]["role"], "user");
    }
}

#[test]
fn runs_against_deterministic_mock_are_identical() {
    for condition in [Condition::Num, Condition::Cat] {
        let server = MockServer::start(scripted_model).unwrap();
        let mut cfg = config(&server.url(), condition);
        cfg.parallelism = 8;
        let first = run_condition(&cfg, &items(60)).unwrap();
        let second = run_condition(&cfg, &items(60)).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.iter().map(|t| t.item_id.clone()).collect::<Vec<_>>(), items(60).into_iter().map(|i| i.item_id).collect::<Vec<_>>());
        for t in &first {
            t.validate().unwrap();
        }
    }
}

#[test]
fn records_are_parsed_and_judged() {
    let server = MockServer::start(scripted_model).unwrap();
    let trials = run_condition(&config(&server.url(), Condition::Num), &items(40)).unwrap();
    assert!(trials.iter().all(|t| t.parse_status == ParseStatus::Ok));
    assert!(trials.iter().any(|t| t.correct == Some(true)));
    assert!(trials.iter().any(|t| t.correct == Some(false)));
    for t in &trials {
        let answer = t.parsed_answer.as_deref().unwrap();
        assert_eq!(t.correct, Some(answer != "unknown"));
        assert!(t.trace_length.is_some());
        assert!(t.logprob_mean.is_some());
        let raw: f64 = t.confidence_raw.as_deref().unwrap().parse().unwrap();
        assert_eq!(t.confidence, Some(raw / 100.0));
    }

    let server = MockServer::start(scripted_model).unwrap();
    let trials = run_condition(&config(&server.url(), Condition::Cat), &items(40)).unwrap();
    for t in &trials {
        assert_eq!(t.parse_status, ParseStatus::Ok);
        let c = t.confidence.unwrap();
        assert!(((c * 10.0 - 0.5).round() - (c * 10.0 - 0.5)).abs() < 1e-9, "midpoint expected, got {c}");
        assert!(t.raw_response.contains("\n---\n"));
    }
}

#[test]
fn full_item_set_yields_one_record_per_item() {
    let backend = |req: &ChatRequest| -> Result<ChatResponse, TransportError> {
        let body = serde_json::to_string(req).unwrap();
        let (_, payload) = scripted_model(&body);
        Ok(serde_json::from_str(&payload).unwrap())
    };
    let trials = run_with_backend(&config("unused", Condition::Num), &items(524), &backend).unwrap();
    assert_eq!(trials.len(), 524);
}

#[test]
fn malformed_bodies_become_parse_failures() {
    let bad = ["q0007", "q0100", "q0401"];
    let server = MockServer::start(move |body: &str| {
        if [7, 100, 401].iter().any(|i| body.contains(&format!("Question number {i},"))) {
            (200, "{not json".to_string())
        } else {
            scripted_model(body)
        }
    })
    .unwrap();
    let mut cfg = config(&server.url(), Condition::Num);
    cfg.parallelism = 16;
    let trials = run_condition(&cfg, &items(524)).unwrap();
    assert_eq!(trials.len(), 524);
    let failed: Vec<&str> =
        trials.iter().filter(|t| t.parse_status != ParseStatus::Ok).map(|t| t.item_id.as_str()).collect();
    assert_eq!(failed, bad);
    assert_eq!(trials.iter().filter(|t| t.parse_status == ParseStatus::Ok).count(), 521);
    for t in trials.iter().filter(|t| t.parse_status != ParseStatus::Ok) {
        assert_eq!(t.parse_status, ParseStatus::AnswerParseFail);
        assert!(t.raw_response.contains("malformed"), "{}", t.raw_response);
        assert_eq!(t.seed, 42);
    }
}

#[test]
fn transient_failures_are_retried() {
    let calls = AtomicUsize::new(0);
    let backend = |_: &ChatRequest| -> Result<ChatResponse, TransportError> {
        if calls.fetch_add(1, Ordering::SeqCst) < 2 {
            Err(TransportError::Timeout("slow".into()))
        } else {
            Ok(chat_response("Paris. Confidence: 80%", -0.1))
        }
    };
    let items = vec![Item { item_id: "a".into(), question: "Capital of France?".into(), gold_aliases: vec!["Paris".into()] }];
    let trials = run_with_backend(&config("unused", Condition::Num), &items, &backend).unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), 3);
    assert_eq!(trials[0].parse_status, ParseStatus::Ok);
    assert_eq!(trials[0].correct, Some(true));
    assert_eq!(trials[0].confidence, Some(0.8));
}

#[test]
fn persistent_timeouts_degrade_to_failed_trials() {
    let calls = AtomicUsize::new(0);
    let backend = |_: &ChatRequest| -> Result<ChatResponse, TransportError> {
        calls.fetch_add(1, Ordering::SeqCst);
        Err(TransportError::Timeout("slow".into()))
    };
    let trials = run_with_backend(&config("unused", Condition::Num), &items(2), &backend).unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), 2 * 4);
    assert!(trials.iter().all(|t| t.parse_status == ParseStatus::AnswerParseFail));
    assert!(trials[0].raw_response.contains("timed out"));
}

#[test]
fn unreachable_endpoint_aborts() {
    let url = {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        format!("http://{}/v1/chat/completions", listener.local_addr().unwrap())
    };
    let mut cfg = config(&url, Condition::Num);
    cfg.retries = 1;
    let err = run_condition(&cfg, &items(3)).unwrap_err();
    assert!(matches!(err, CollectError::Unreachable(_)), "{err}");
}

#[test]
fn empty_item_list_is_rejected() {
    let err = run_with_backend(&config("unused", Condition::Num), &[], &scripted_backend()).unwrap_err();
    assert!(matches!(err, CollectError::NoItems));
}

#[test]
fn nonzero_temperature_is_rejected() {
    let mut cfg = config("unused", Condition::Num);
    cfg.temperature = 0.7;
    assert!(matches!(run_with_backend(&cfg, &items(1), &scripted_backend()), Err(CollectError::Config(_))));
}

fn scripted_backend() -> impl Fn(&ChatRequest) -> Result<ChatResponse, TransportError> + Sync {
    |req: &ChatRequest| Ok(serde_json::from_str(&scripted_model(&serde_json::to_string(req).unwrap()).1).unwrap())
}

#[test]
fn items_file_round_trip_and_alias_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("items.jsonl");
    let lines: Vec<String> = items(3).iter().map(|i| serde_json::to_string(i).unwrap()).collect();
    std::fs::write(&path, lines.join("\n") + "\n\n").unwrap();
    assert_eq!(read_items(&path).unwrap(), items(3));

    std::fs::write(&path, r#"{"item_id":"x","question":"?","gold_aliases":[]}"#).unwrap();
    assert!(matches!(read_items(&path), Err(CollectError::BadItem { line: 1, .. })));
    assert!(matches!(read_items(&dir.path().join("missing.jsonl")), Err(CollectError::Open { .. })));
}
