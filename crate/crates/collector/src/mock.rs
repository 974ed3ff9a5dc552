//! A minimal HTTP endpoint for tests and dry runs.
//!
//! Every request body is recorded; the response is produced by a closure of
//! the body. [`scripted_model`] is a deterministic stand-in for a
//! chat-completions server.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use crate::prompts::{CAT_LABELS, CAT_SYSTEM_PROMPT};
use crate::wire::{ChatRequest, ChatResponse, Choice, ChoiceLogprobs, ResponseMessage, TokenLogprob};

type Responder = dyn Fn(&str) -> (u16, String) + Send + Sync;

pub struct MockServer {
    addr: SocketAddr,
    requests: Arc<Mutex<Vec<String>>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(responder: impl Fn(&str) -> (u16, String) + Send + Sync + 'static) -> io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let requests = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let responder: Arc<Responder> = Arc::new(responder);
        let handle = {
            let requests = Arc::clone(&requests);
            let stop = Arc::clone(&stop);
            thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let requests = Arc::clone(&requests);
                    let responder = Arc::clone(&responder);
                    thread::spawn(move || {
                        if let Err(e) = serve(stream, &requests, &*responder) {
                            log::debug!("mock connection error: {e}");
                        }
                    });
                }
            })
        };
        Ok(MockServer { addr, requests, stop, handle: Some(handle) })
    }

    pub fn url(&self) -> String {
        format!("http://{}/v1/chat/completions", self.addr)
    }

    /// Request bodies received so far, in arrival order.
    pub fn requests(&self) -> Vec<String> {
        self.requests.lock().unwrap().clone()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn serve(stream: TcpStream, requests: &Mutex<Vec<String>>, responder: &Responder) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.is_empty() {
        return Ok(());
    }
    let mut content_length = 0usize;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" || line == "\n" {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.trim().eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    let body = String::from_utf8_lossy(&body).into_owned();
    requests.lock().unwrap().push(body.clone());
    let (status, payload) = responder(&body);
    let reason = if status == 200 { "OK" } else { "Error" };
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )?;
    stream.flush()
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf29ce484222325, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

/// Wraps `content` in a single-choice response with one token per word.
pub fn chat_response(content: &str, logprob: f64) -> ChatResponse {
    let tokens = content
        .split_inclusive(' ')
        .map(|t| TokenLogprob { token: t.to_string(), logprob, top_logprobs: Vec::new() })
        .collect();
    ChatResponse {
        choices: vec![Choice {
            message: ResponseMessage { role: Some("assistant".into()), content: Some(content.to_string()), reasoning_content: None },
            logprobs: Some(ChoiceLogprobs { content: Some(tokens) }),
        }],
    }
}

/// Deterministic fake model keyed on the last user message.
///
/// A question ending in `answer: X?` is answered `X` unless its hash is a
/// multiple of 4, in which case the reply is "unknown". Confidence, trace
/// length, logprob and CAT class all derive from the same hash.
pub fn scripted_model(body: &str) -> (u16, String) {
    let Ok(request) = serde_json::from_str::<ChatRequest>(body) else {
        return (400, r#"{"error":"bad request"}"#.into());
    };
    let question = request.messages.iter().rev().find(|m| m.role == "user").map_or("", |m| m.content.as_str());
    let h = fnv1a(question);
    let classify = request.messages.iter().any(|m| m.role == "system" && m.content == CAT_SYSTEM_PROMPT);
    let guess = question
        .rsplit_once("answer:")
        .map(|(_, rest)| rest.trim().trim_end_matches('?').trim().to_string())
        .filter(|g| !g.is_empty() && h % 4 != 0)
        .unwrap_or_else(|| "unknown".into());
    let content = if classify {
        CAT_LABELS[(h % 10) as usize].to_string()
    } else {
        format!("<think>{}</think>Answer: {guess}. Confidence: {}%", "x".repeat((h % 200) as usize), 50 + h % 51)
    };
    let logprob = -((h % 1000) as f64) / 500.0;
    (200, serde_json::to_string(&chat_response(&content, logprob)).expect("response serialises"))
}
