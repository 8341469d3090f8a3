//! Client for Tabby-compatible completion endpoints.
//!
//! Requests go to `POST {base_url}/v1/completions` with a body of the form
//! `{"language":"python","segments":{"prefix":"..."}}`. The suffix segment is
//! omitted entirely. The first choice's `text` in the response is the
//! completion.
//!
//! With a cache directory configured, every successful response body is
//! stored verbatim under the hex SHA-256 of (language, prefix, model hint),
//! so a run can be replayed offline.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tracing::{debug, warn};

use crate::prefixer::PrefixCase;
use crate::ratio::Ratio;

pub const COMPLETIONS_PATH: &str = "/v1/completions";
pub const DEFAULT_LANGUAGE: &str = "python";
pub const UNKNOWN_MODEL: &str = "unknown";
const RETRY_BACKOFF_MS: u64 = 50;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("invalid endpoint configuration: {0}")]
    Config(String),
    #[error("failed to prepare cache directory {path}: {source}")]
    Cache { path: PathBuf, source: std::io::Error },
    #[error("failed to build HTTP client: {0}")]
    Http(#[from] reqwest::Error),
}

/// A string that never shows up in `Debug` output.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SecretToken(String);

impl SecretToken {
    pub fn new(token: impl Into<String>) -> Self {
        Self(token.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for SecretToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretToken(***)")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub base_url: String,
    #[serde(skip_serializing)]
    pub auth_token: Option<SecretToken>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub max_parallel: usize,
    pub cache_dir: Option<PathBuf>,
    pub language: String,
    /// Model name to fold into the cache key when it is known up front.
    pub model_hint: Option<String>,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8080".to_string(),
            auth_token: None,
            timeout_ms: 30_000,
            max_retries: 2,
            max_parallel: 4,
            cache_dir: None,
            language: DEFAULT_LANGUAGE.to_string(),
            model_hint: None,
        }
    }
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        if self.timeout_ms == 0 {
            return Err(ClientError::Config("timeout_ms must be positive".into()));
        }
        if self.max_parallel == 0 {
            return Err(ClientError::Config("max_parallel must be at least 1".into()));
        }
        let url = self.base_url.trim();
        if !(url.starts_with("http://") || url.starts_with("https://")) {
            return Err(ClientError::Config(format!(
                "base_url {url:?} must start with http:// or https://"
            )));
        }
        Ok(())
    }

    pub fn completions_url(&self) -> String {
        format!("{}{}", self.base_url.trim().trim_end_matches('/'), COMPLETIONS_PATH)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segments {
    pub prefix: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suffix: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub language: String,
    pub segments: Segments,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    #[serde(default)]
    pub index: u32,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub choices: Vec<Choice>,
}

pub fn build_request_body(case: &PrefixCase, language: &str) -> String {
    build_request_body_with_suffix(&case.prefix, None, language)
}

/// Request body with an optional suffix segment, for fill-in-the-middle
/// prompts. The benchmark itself never sends a suffix.
pub fn build_request_body_with_suffix(prefix: &str, suffix: Option<&str>, language: &str) -> String {
    let request = CompletionRequest {
        language: language.to_string(),
        segments: Segments {
            prefix: prefix.to_string(),
            suffix: suffix.map(str::to_string),
        },
    };
    serde_json::to_string(&request).expect("request serialization cannot fail")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailureReason {
    Network { message: String },
    HttpStatus { status: u16 },
    Protocol { message: String },
    EmptyChoices,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureReason::Network { message } => write!(f, "network error: {message}"),
            FailureReason::HttpStatus { status } => write!(f, "HTTP status {status}"),
            FailureReason::Protocol { message } => write!(f, "protocol error: {message}"),
            FailureReason::EmptyChoices => f.write_str("empty choices"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedCompletion {
    pub text: String,
    pub model: Option<String>,
}

pub fn parse_response(body: &str) -> Result<ParsedCompletion, FailureReason> {
    let response: CompletionResponse = serde_json::from_str(body).map_err(|e| FailureReason::Protocol {
        message: format!("malformed response body: {e}"),
    })?;
    let first = response.choices.into_iter().next().ok_or(FailureReason::EmptyChoices)?;
    Ok(ParsedCompletion {
        text: first.text,
        model: response.model,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub sample_id: String,
    pub ratio: Ratio,
    pub text: String,
    pub latency_ms: u64,
    pub model_id: String,
    pub from_cache: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedCompletion {
    pub sample_id: String,
    pub ratio: Ratio,
    pub reason: FailureReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CompletionOutcome {
    Completed(CompletionRecord),
    Failed(FailedCompletion),
}

impl CompletionOutcome {
    pub fn key(&self) -> (&str, Ratio) {
        match self {
            CompletionOutcome::Completed(r) => (&r.sample_id, r.ratio),
            CompletionOutcome::Failed(f) => (&f.sample_id, f.ratio),
        }
    }

    pub fn record(&self) -> Option<&CompletionRecord> {
        match self {
            CompletionOutcome::Completed(r) => Some(r),
            CompletionOutcome::Failed(_) => None,
        }
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, CompletionOutcome::Failed(_))
    }
}

pub fn cache_key(language: &str, prefix: &str, model: Option<&str>) -> String {
    let mut hasher = Sha256::new();
    for part in [language, prefix, model.unwrap_or("")] {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// One file per key; writes go through a temporary file and an atomic rename.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ClientError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|source| ClientError::Cache {
            path: dir.clone(),
            source,
        })?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(key)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        std::fs::read_to_string(self.path_for(key)).ok()
    }

    pub fn put(&self, key: &str, body: &str) -> std::io::Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(body.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.path_for(key)).map_err(|e| e.error)?;
        Ok(())
    }
}

pub struct CompletionClient {
    http: reqwest::Client,
    config: EndpointConfig,
    cache: Option<ResponseCache>,
}

impl CompletionClient {
    pub fn new(config: EndpointConfig) -> Result<Self, ClientError> {
        config.validate()?;
        let http = reqwest::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()?;
        let cache = config.cache_dir.as_ref().map(ResponseCache::open).transpose()?;
        Ok(Self { http, config, cache })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn key_for(&self, case: &PrefixCase) -> String {
        cache_key(&self.config.language, &case.prefix, self.config.model_hint.as_deref())
    }

    fn model_id(&self, reported: Option<String>) -> String {
        reported
            .or_else(|| self.config.model_hint.clone())
            .unwrap_or_else(|| UNKNOWN_MODEL.to_string())
    }

    fn cached_record(&self, case: &PrefixCase, key: &str) -> Option<CompletionRecord> {
        let body = self.cache.as_ref()?.get(key)?;
        match parse_response(&body) {
            Ok(parsed) => Some(CompletionRecord {
                sample_id: case.sample_id.clone(),
                ratio: case.ratio,
                text: parsed.text,
                latency_ms: 0,
                model_id: self.model_id(parsed.model),
                from_cache: true,
            }),
            Err(reason) => {
                warn!(key, %reason, "ignoring unreadable cache entry");
                None
            }
        }
    }

    /// Completion for one case: from the cache when possible, otherwise from
    /// the server with retries on network errors and retryable statuses.
    pub async fn request_completion(&self, case: &PrefixCase) -> CompletionOutcome {
        let key = self.key_for(case);
        if let Some(record) = self.cached_record(case, &key) {
            return CompletionOutcome::Completed(record);
        }

        let body = build_request_body(case, &self.config.language);
        let started = Instant::now();
        let fail = |reason| {
            CompletionOutcome::Failed(FailedCompletion {
                sample_id: case.sample_id.clone(),
                ratio: case.ratio,
                reason,
            })
        };
        let response_body = match self.post_with_retries(body).await {
            Ok(text) => text,
            Err(reason) => return fail(reason),
        };
        let latency_ms = (started.elapsed().as_millis() as u64).max(1);
        let parsed = match parse_response(&response_body) {
            Ok(parsed) => parsed,
            Err(reason) => return fail(reason),
        };
        if let Some(cache) = &self.cache {
            if let Err(e) = cache.put(&key, &response_body) {
                warn!(key, error = %e, "failed to write cache entry");
            }
        }
        CompletionOutcome::Completed(CompletionRecord {
            sample_id: case.sample_id.clone(),
            ratio: case.ratio,
            text: parsed.text,
            latency_ms,
            model_id: self.model_id(parsed.model),
            from_cache: false,
        })
    }

    async fn post_with_retries(&self, body: String) -> Result<String, FailureReason> {
        let url = self.config.completions_url();
        let mut attempt = 0;
        loop {
            let mut request = self
                .http
                .post(&url)
                .header(reqwest::header::CONTENT_TYPE, "application/json")
                .body(body.clone());
            if let Some(token) = &self.config.auth_token {
                request = request.bearer_auth(token.expose());
            }
            let (reason, retryable) = match request.send().await {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        return response.text().await.map_err(|e| FailureReason::Network {
                            message: e.to_string(),
                        });
                    }
                    let retryable = status.is_server_error() || status.as_u16() == 429;
                    (FailureReason::HttpStatus { status: status.as_u16() }, retryable)
                }
                Err(e) => (FailureReason::Network { message: e.to_string() }, true),
            };
            if !retryable || attempt >= self.config.max_retries {
                return Err(reason);
            }
            debug!(attempt, %reason, "retrying completion request");
            tokio::time::sleep(Duration::from_millis(RETRY_BACKOFF_MS << attempt.min(6))).await;
            attempt += 1;
        }
    }

    /// Completions for all cases, in input order, with at most
    /// `max_parallel` requests in flight. With caching on, identical prompts
    /// are requested once and the repeats are served from the cache.
    pub async fn run_batch(&self, cases: &[PrefixCase]) -> Vec<CompletionOutcome> {
        let mut first_with_key: HashMap<String, usize> = HashMap::new();
        let mut unique = Vec::new();
        let mut repeats = Vec::new();
        for (i, case) in cases.iter().enumerate() {
            let key = self.key_for(case);
            match first_with_key.get(&key) {
                Some(&first) if self.cache.is_some() => repeats.push((i, first)),
                _ => {
                    first_with_key.insert(key, i);
                    unique.push(i);
                }
            }
        }

        let fetched: Vec<(usize, CompletionOutcome)> = stream::iter(unique)
            .map(|i| async move { (i, self.request_completion(&cases[i]).await) })
            .buffered(self.config.max_parallel)
            .collect()
            .await;

        let mut out: Vec<Option<CompletionOutcome>> = vec![None; cases.len()];
        for (i, outcome) in fetched {
            out[i] = Some(outcome);
        }
        for (i, first) in repeats {
            let case = &cases[i];
            let outcome = match &out[first] {
                Some(CompletionOutcome::Completed(r)) => CompletionOutcome::Completed(CompletionRecord {
                    sample_id: case.sample_id.clone(),
                    ratio: case.ratio,
                    text: r.text.clone(),
                    latency_ms: 0,
                    model_id: r.model_id.clone(),
                    from_cache: true,
                }),
                Some(CompletionOutcome::Failed(f)) => CompletionOutcome::Failed(FailedCompletion {
                    sample_id: case.sample_id.clone(),
                    ratio: case.ratio,
                    reason: f.reason.clone(),
                }),
                None => unreachable!("first occurrence is always fetched"),
            };
            out[i] = Some(outcome);
        }
        out.into_iter().map(|o| o.expect("every case has an outcome")).collect()
    }
}
