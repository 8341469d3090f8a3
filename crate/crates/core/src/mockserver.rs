//! Deterministic completion server speaking the same wire protocol as the
//! real endpoint, usable in-process ([`mock_complete`]) or over loopback HTTP
//! ([`MockServer`]).
//!
//! Strategies:
//!
//! - `echo_remainder`: the rest of the corpus file the prompt was cut from
//! - `fixed_text`: a configured string
//! - `seeded_noise`: the true remainder with pseudo-random single-character
//!   edits
//! - `fixed_empty`: nothing (over HTTP: a response with zero choices)
//!
//! The noise generator is ChaCha8 keyed with SHA-256(seed as little-endian
//! u64 ‖ prefix bytes). The number of edits is ceil(len × rate / 100); each
//! edit draws `op = next_u32() % 3` (0 substitute, 1 insert, 2 delete), a
//! position `next_u64() % len` (`% (len + 1)` for inserts) and, for
//! substitutions and inserts, a character `NOISE_ALPHABET[next_u32() % 38]`
//! (a substitution that would keep the same character takes the next one).
//! Edits on an empty string are inserts.

use std::net::SocketAddr;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{HeaderName, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use tokio::sync::oneshot;

use crate::client::{Choice, CompletionRequest, CompletionResponse, COMPLETIONS_PATH};
use crate::corpus::SourceSample;

pub const STRATEGY_HEADER: &str = "x-mock-strategy";
pub const DEFAULT_NOISE_RATE: u32 = 5;
pub const NOISE_ALPHABET: &[char] = &[
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r', 's',
    't', 'u', 'v', 'w', 'x', 'y', 'z', '0', '1', '2', '3', '4', '5', '6', '7', '8', '9', '_', ' ',
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MockError {
    #[error("prefix does not start any corpus sample")]
    NoMatchingSample,
    #[error("invalid mock strategy: {0}")]
    InvalidStrategy(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MockKind {
    EchoRemainder,
    FixedText { text: String },
    SeededNoise { seed: u64, edits_per_100_chars: u32 },
    FixedEmpty,
}

impl MockKind {
    pub fn name(&self) -> &'static str {
        match self {
            MockKind::EchoRemainder => "echo_remainder",
            MockKind::FixedText { .. } => "fixed_text",
            MockKind::SeededNoise { .. } => "seeded_noise",
            MockKind::FixedEmpty => "fixed_empty",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockStrategy {
    #[serde(flatten)]
    pub kind: MockKind,
    /// Cap on returned characters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_chars: Option<usize>,
}

impl MockStrategy {
    pub fn new(kind: MockKind) -> Self {
        Self { kind, max_chars: None }
    }

    pub fn echo() -> Self {
        Self::new(MockKind::EchoRemainder)
    }

    pub fn noise(seed: u64, edits_per_100_chars: u32) -> Self {
        Self::new(MockKind::SeededNoise {
            seed,
            edits_per_100_chars,
        })
    }

    pub fn with_max_chars(mut self, max_chars: usize) -> Self {
        self.max_chars = Some(max_chars);
        self
    }
}

impl FromStr for MockStrategy {
    type Err = MockError;

    /// `echo_remainder`, `fixed_empty`, `fixed_text:<text>`,
    /// `seeded_noise:<seed>[:<edits per 100 chars>]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arg) = match s.split_once(':') {
            Some((name, arg)) => (name, Some(arg)),
            None => (s, None),
        };
        let invalid = || MockError::InvalidStrategy(s.to_string());
        let kind = match (name, arg) {
            ("echo_remainder" | "echo", None) => MockKind::EchoRemainder,
            ("fixed_empty" | "empty", None) => MockKind::FixedEmpty,
            ("fixed_text", Some(text)) => MockKind::FixedText { text: text.to_string() },
            ("seeded_noise" | "noise", Some(arg)) => {
                let (seed, rate) = match arg.split_once(':') {
                    Some((seed, rate)) => (seed, rate.parse().map_err(|_| invalid())?),
                    None => (arg, DEFAULT_NOISE_RATE),
                };
                MockKind::SeededNoise {
                    seed: seed.parse().map_err(|_| invalid())?,
                    edits_per_100_chars: rate,
                }
            }
            _ => return Err(invalid()),
        };
        Ok(MockStrategy::new(kind))
    }
}

/// The sample a prompt was cut from: among samples starting with `prefix`,
/// the one with the longest id, then the lexicographically smallest.
pub fn matching_sample<'a>(prefix: &str, corpus: &'a [SourceSample]) -> Option<&'a SourceSample> {
    corpus
        .iter()
        .filter(|s| s.content.starts_with(prefix))
        .min_by(|a, b| b.id.len().cmp(&a.id.len()).then_with(|| a.id.cmp(&b.id)))
}

fn truncate_chars(text: String, max_chars: Option<usize>) -> String {
    match max_chars {
        Some(max) => text.chars().take(max).collect(),
        None => text,
    }
}

fn noise_rng(seed: u64, prefix: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(prefix.as_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Applies ceil(len × rate / 100) seeded single-character edits.
pub fn add_noise(text: &str, rng: &mut ChaCha8Rng, edits_per_100_chars: u32) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    let edits = (chars.len() * edits_per_100_chars as usize).div_ceil(100);
    let alphabet_len = NOISE_ALPHABET.len() as u32;
    for _ in 0..edits {
        let op = if chars.is_empty() { 1 } else { rng.next_u32() % 3 };
        match op {
            0 => {
                let pos = (rng.next_u64() % chars.len() as u64) as usize;
                let mut idx = (rng.next_u32() % alphabet_len) as usize;
                if NOISE_ALPHABET[idx] == chars[pos] {
                    idx = (idx + 1) % NOISE_ALPHABET.len();
                }
                chars[pos] = NOISE_ALPHABET[idx];
            }
            1 => {
                let pos = (rng.next_u64() % (chars.len() as u64 + 1)) as usize;
                let idx = (rng.next_u32() % alphabet_len) as usize;
                chars.insert(pos, NOISE_ALPHABET[idx]);
            }
            _ => {
                let pos = (rng.next_u64() % chars.len() as u64) as usize;
                chars.remove(pos);
            }
        }
    }
    chars.into_iter().collect()
}

pub fn mock_complete(prefix: &str, corpus: &[SourceSample], strategy: &MockStrategy) -> Result<String, MockError> {
    let text = match &strategy.kind {
        MockKind::FixedText { text } => text.clone(),
        MockKind::FixedEmpty => String::new(),
        MockKind::EchoRemainder => {
            let sample = matching_sample(prefix, corpus).ok_or(MockError::NoMatchingSample)?;
            sample.content[prefix.len()..].to_string()
        }
        MockKind::SeededNoise {
            seed,
            edits_per_100_chars,
        } => {
            let sample = matching_sample(prefix, corpus).ok_or(MockError::NoMatchingSample)?;
            let mut rng = noise_rng(*seed, prefix);
            add_noise(&sample.content[prefix.len()..], &mut rng, *edits_per_100_chars)
        }
    };
    Ok(truncate_chars(text, strategy.max_chars))
}

#[derive(Clone)]
struct ServerState {
    corpus: Vec<SourceSample>,
    strategy: MockStrategy,
    delay: Option<Duration>,
}

#[derive(Clone)]
pub struct MockServer {
    state: Arc<ServerState>,
}

impl MockServer {
    pub fn new(corpus: Vec<SourceSample>, strategy: MockStrategy) -> Self {
        Self {
            state: Arc::new(ServerState {
                corpus,
                strategy,
                delay: None,
            }),
        }
    }

    /// Fixed delay before every response.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        Arc::make_mut(&mut self.state).delay = Some(delay);
        self
    }

    pub fn strategy(&self) -> &MockStrategy {
        &self.state.strategy
    }

    /// In-process completion, identical to what the HTTP route returns.
    pub fn complete(&self, prefix: &str) -> Result<String, MockError> {
        mock_complete(prefix, &self.state.corpus, &self.state.strategy)
    }

    pub fn router(&self) -> Router {
        Router::new()
            .route(COMPLETIONS_PATH, post(handle_completion))
            .with_state(self.state.clone())
    }

    /// Serves on `listener` until `shutdown` resolves.
    pub async fn serve<F>(&self, listener: tokio::net::TcpListener, shutdown: F) -> std::io::Result<()>
    where
        F: std::future::Future<Output = ()> + Send + 'static,
    {
        axum::serve(listener, self.router())
            .with_graceful_shutdown(shutdown)
            .await
    }

    /// Starts serving on a background thread with its own runtime.
    pub fn spawn(&self, addr: SocketAddr) -> std::io::Result<MockHandle> {
        let (ready_tx, ready_rx) = std::sync::mpsc::channel();
        let (shutdown_tx, shutdown_rx) = oneshot::channel::<()>();
        let server = self.clone();
        let thread = std::thread::Builder::new()
            .name("mock-completion-server".into())
            .spawn(move || {
                let runtime = match tokio::runtime::Builder::new_multi_thread()
                    .worker_threads(2)
                    .enable_all()
                    .build()
                {
                    Ok(rt) => rt,
                    Err(e) => {
                        let _ = ready_tx.send(Err(e));
                        return;
                    }
                };
                runtime.block_on(async move {
                    let listener = match tokio::net::TcpListener::bind(addr).await {
                        Ok(l) => l,
                        Err(e) => {
                            let _ = ready_tx.send(Err(e));
                            return;
                        }
                    };
                    let _ = ready_tx.send(listener.local_addr());
                    let shutdown = async {
                        let _ = shutdown_rx.await;
                    };
                    if let Err(e) = server.serve(listener, shutdown).await {
                        tracing::error!(error = %e, "mock server stopped");
                    }
                });
            })?;
        let addr = ready_rx
            .recv()
            .map_err(|_| std::io::Error::other("mock server thread exited before binding"))??;
        Ok(MockHandle {
            addr,
            shutdown: Some(shutdown_tx),
            thread: Some(thread),
        })
    }
}

/// A running background mock server; stops on [`MockHandle::shutdown`] or drop.
pub struct MockHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl MockHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(thread) = self.thread.take() {
            let _ = thread.join();
        }
    }
}

impl Drop for MockHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

fn completion_id(prefix: &str) -> String {
    let digest = Sha256::digest(prefix.as_bytes());
    format!("cmpl-{}", hex::encode(&digest[..8]))
}

async fn handle_completion(State(state): State<Arc<ServerState>>, body: Bytes) -> Response {
    if let Some(delay) = state.delay {
        tokio::time::sleep(delay).await;
    }
    let strategy_name = state.strategy.kind.name();
    let with_header = |mut response: Response| {
        response.headers_mut().insert(
            HeaderName::from_static(STRATEGY_HEADER),
            HeaderValue::from_static(strategy_name),
        );
        response
    };

    let request: CompletionRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => {
            let body = Json(json!({ "error": format!("invalid request body: {e}") }));
            return with_header((StatusCode::BAD_REQUEST, body).into_response());
        }
    };
    let prefix = &request.segments.prefix;
    let choices = match mock_complete(prefix, &state.corpus, &state.strategy) {
        Ok(_) if matches!(state.strategy.kind, MockKind::FixedEmpty) => Vec::new(),
        Ok(text) => vec![Choice { index: 0, text }],
        Err(e) => {
            let body = Json(json!({ "error": e.to_string() }));
            return with_header((StatusCode::UNPROCESSABLE_ENTITY, body).into_response());
        }
    };
    let response = CompletionResponse {
        id: Some(completion_id(prefix)),
        model: Some(format!("mock/{strategy_name}")),
        choices,
    };
    with_header(Json(response).into_response())
}

/// Serves until Ctrl-C. Blocks the calling thread.
pub fn serve_until_interrupted(server: &MockServer, addr: SocketAddr) -> std::io::Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        tracing::info!(addr = %listener.local_addr()?, strategy = server.strategy().kind.name(), "mock server listening");
        server
            .serve(listener, async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<SourceSample> {
        let hundred: String = (0..100).map(|i| char::from(b'a' + (i % 26) as u8)).collect();
        vec![
            SourceSample::new("a/h.py", "a", hundred).unwrap(),
            SourceSample::new("b/fib.py", "b", "def fib(n):\n    return n").unwrap(),
            SourceSample::new("b/fib2.py", "b", "def fib(n):\n    return n if n < 2 else 0").unwrap(),
        ]
    }

    #[test]
    fn echo_returns_remainder() {
        let c = corpus();
        let out = mock_complete(&c[0].content[..30], &c, &MockStrategy::echo()).unwrap();
        assert_eq!(out, &c[0].content[30..]);
        assert_eq!(out.chars().count(), 70);
        let capped = mock_complete(&c[0].content[..30], &c, &MockStrategy::echo().with_max_chars(5)).unwrap();
        assert_eq!(capped, &c[0].content[30..35]);
    }

    #[test]
    fn ambiguity_prefers_longest_id() {
        let c = corpus();
        assert_eq!(matching_sample("def fib", &c).unwrap().id, "b/fib2.py");
        let echoed = mock_complete("def fib(n):\n    ", &c, &MockStrategy::echo()).unwrap();
        assert_eq!(echoed, "return n if n < 2 else 0");
        let tie = vec![
            SourceSample::new("zz.py", "u", "same content").unwrap(),
            SourceSample::new("aa.py", "u", "same content").unwrap(),
        ];
        assert_eq!(matching_sample("same", &tie).unwrap().id, "aa.py");
    }

    #[test]
    fn unmatched_prefix_is_an_error() {
        assert_eq!(
            mock_complete("zzz", &corpus(), &MockStrategy::echo()),
            Err(MockError::NoMatchingSample)
        );
        assert!(mock_complete("zzz", &corpus(), &MockStrategy::noise(1, 5)).is_err());
        assert_eq!(
            mock_complete("zzz", &corpus(), &MockStrategy::new(MockKind::FixedEmpty)),
            Ok(String::new())
        );
        let fixed = MockStrategy::new(MockKind::FixedText { text: "pass".into() });
        assert_eq!(mock_complete("zzz", &corpus(), &fixed), Ok("pass".into()));
    }

    #[test]
    fn noise_is_deterministic_and_seed_dependent() {
        let corpus = vec![SourceSample::new("f.py", "f", "def f(n):\n    return n").unwrap()];
        let prefix = "def f(n):\n    ";
        let first = mock_complete(prefix, &corpus, &MockStrategy::noise(7, 5)).unwrap();
        let second = mock_complete(prefix, &corpus, &MockStrategy::noise(7, 5)).unwrap();
        assert_eq!(first, second);
        assert_ne!(first, "return n");
        let other_seeds: Vec<String> = (0..8)
            .map(|seed| mock_complete(prefix, &corpus, &MockStrategy::noise(seed, 5)).unwrap())
            .collect();
        assert!(other_seeds.iter().any(|s| s != &first));
    }

    #[test]
    fn noise_edit_count() {
        let text = "x".repeat(200);
        let mut rng = noise_rng(3, "p");
        let noisy = add_noise(&text, &mut rng, 5);
        let distance = crate::simetrics::damerau_levenshtein(&text, &noisy);
        assert!((1..=10).contains(&distance), "distance {distance}");
        let mut rng = noise_rng(3, "p");
        assert_eq!(add_noise("", &mut rng, 5), "");
        assert_eq!(add_noise("abc", &mut rng, 0), "abc");
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("echo_remainder".parse::<MockStrategy>().unwrap(), MockStrategy::echo());
        assert_eq!("seeded_noise:7".parse::<MockStrategy>().unwrap(), MockStrategy::noise(7, 5));
        assert_eq!("seeded_noise:7:12".parse::<MockStrategy>().unwrap(), MockStrategy::noise(7, 12));
        assert_eq!(
            "fixed_text:a:b".parse::<MockStrategy>().unwrap().kind,
            MockKind::FixedText { text: "a:b".into() }
        );
        assert!("fixed_text".parse::<MockStrategy>().is_err());
        assert!("seeded_noise".parse::<MockStrategy>().is_err());
        assert!("bogus".parse::<MockStrategy>().is_err());
    }

    #[test]
    fn strategy_json_shape() {
        let json = serde_json::to_string(&MockStrategy::noise(7, 5).with_max_chars(10)).unwrap();
        assert_eq!(json, r#"{"kind":"seeded_noise","seed":7,"edits_per_100_chars":5,"max_chars":10}"#);
    }
}
