//! Live HTTP backend speaking the chat-completions wire contract.
//!
//! One user message in, assistant text out. Transport failures and
//! rate-limit/server statuses retry with exponential backoff; content
//! problems never retry here (the protocol's corrective-retry loop owns
//! those).

use super::{AdapterError, AnswerBackend, BackendSpec, PredictorBackend, RoundContext};
use crate::questionbank::Question;
use serde_json::{json, Value};
use std::time::Duration;

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    fn delay_for(&self, attempt: u32) -> Duration {
        let exp = self.base_delay.saturating_mul(1u32 << attempt.min(16));
        exp.min(self.max_delay)
    }
}

const DEFAULT_TIMEOUT_SECS: u64 = 120;

fn excerpt(body: &str) -> String {
    let mut s: String = body.chars().take(200).collect();
    if body.len() > s.len() {
        s.push_str("...");
    }
    s
}

fn is_retryable_status(status: u16) -> bool {
    status == 429 || (500..600).contains(&status)
}

/// Sends one user message to a chat-completions endpoint and returns the
/// assistant text verbatim.
pub fn chat_complete(
    spec: &BackendSpec,
    prompt: &str,
    retry: &RetryPolicy,
) -> Result<String, AdapterError> {
    let endpoint = spec
        .endpoint_url
        .as_deref()
        .ok_or_else(|| AdapterError::InvalidSpec("http-chat needs endpoint_url".into()))?;
    let model = spec
        .model_name
        .as_deref()
        .ok_or_else(|| AdapterError::InvalidSpec("http-chat needs model_name".into()))?;

    let auth = match &spec.auth_env_var {
        Some(var) => Some(
            std::env::var(var).map_err(|_| AdapterError::MissingAuth(var.clone()))?,
        ),
        None => None,
    };

    let mut body = json!({
        "model": model,
        "messages": [{"role": "user", "content": prompt}],
    });
    if let Some(t) = spec.temperature {
        body["temperature"] = json!(t);
    }
    if let Some(m) = spec.max_output_tokens {
        body["max_tokens"] = json!(m);
    }

    let timeout = Duration::from_secs(spec.timeout_secs.unwrap_or(DEFAULT_TIMEOUT_SECS));
    let client = reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| AdapterError::InvalidSpec(format!("client build: {e}")))?;

    let mut last_error = String::new();
    for attempt in 0..retry.max_attempts {
        if attempt > 0 {
            std::thread::sleep(retry.delay_for(attempt - 1));
        }
        let mut request = client.post(endpoint).json(&body);
        if let Some(token) = &auth {
            request = request.bearer_auth(token);
        }
        match request.send() {
            Ok(response) => {
                let status = response.status();
                let text = response.text().unwrap_or_default();
                if status.is_success() {
                    return extract_content(&text);
                }
                if is_retryable_status(status.as_u16()) {
                    last_error = format!("status {status}");
                    continue;
                }
                return Err(AdapterError::BackendError {
                    status: status.as_u16(),
                    excerpt: excerpt(&text),
                });
            }
            Err(e) => {
                last_error = format!("transport: {e}");
                continue;
            }
        }
    }
    Err(AdapterError::BackendUnavailable {
        attempts: retry.max_attempts,
        last_error,
    })
}

/// Pulls `choices[0].message.content` out of a chat-completions response.
fn extract_content(body: &str) -> Result<String, AdapterError> {
    let value: Value = serde_json::from_str(body)
        .map_err(|e| AdapterError::ResponseShape(format!("response not JSON: {e}")))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| {
            AdapterError::ResponseShape("missing choices[0].message.content".into())
        })
}

pub struct HttpChatPredictor {
    spec: BackendSpec,
    retry: RetryPolicy,
}

impl HttpChatPredictor {
    pub fn new(spec: BackendSpec) -> Self {
        Self {
            spec,
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }
}

impl PredictorBackend for HttpChatPredictor {
    fn identity(&self) -> String {
        self.spec.identity()
    }

    fn predict_round(&mut self, ctx: &RoundContext) -> Result<String, AdapterError> {
        chat_complete(&self.spec, ctx.prompt, &self.retry)
    }
}

pub struct HttpChatAnswerer {
    spec: BackendSpec,
    retry: RetryPolicy,
}

impl HttpChatAnswerer {
    pub fn new(spec: BackendSpec) -> Self {
        Self {
            spec,
            retry: RetryPolicy::default(),
        }
    }
}

/// Instructions wrapped around a single question for baseline answering.
pub fn answer_prompt(question: &Question) -> String {
    format!(
        "Answer the following question in JSON form with minimal verbosity, \
         for example {{\"answer\": 42}}. For Yes/No questions reply \
         {{\"answer\": \"Yes\"}} or {{\"answer\": \"No\"}}.\n\n{}",
        question.text
    )
}

impl AnswerBackend for HttpChatAnswerer {
    fn identity(&self) -> String {
        self.spec.identity()
    }

    fn answer_question(&mut self, question: &Question) -> Result<String, AdapterError> {
        chat_complete(&self.spec, &answer_prompt(question), &self.retry)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::BackendKind;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    /// Minimal one-thread HTTP stub that answers each connection with the
    /// next canned (status, body) pair.
    fn stub_server(responses: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<()>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(&mut stream);
                let mut content_length = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        content_length = v.trim().parse().unwrap_or(0);
                    }
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                }
                let mut payload = vec![0u8; content_length];
                reader.read_exact(&mut payload).unwrap();
                let reason = if status == 200 { "OK" } else { "Error" };
                let response = format!(
                    "HTTP/1.1 {status} {reason}\r\nContent-Length: {}\r\nContent-Type: application/json\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(response.as_bytes()).unwrap();
            }
        });
        (format!("http://{addr}/v1/chat/completions"), handle)
    }

    fn spec_for(url: &str) -> BackendSpec {
        BackendSpec {
            kind: BackendKind::HttpChat,
            endpoint_url: Some(url.to_string()),
            model_name: Some("stub-model".into()),
            auth_env_var: None,
            temperature: Some(0.0),
            max_output_tokens: None,
            timeout_secs: Some(5),
            fixture_path: None,
            synthetic: None,
            answer_rate: None,
        }
    }

    fn fast_retry() -> RetryPolicy {
        RetryPolicy {
            max_attempts: 3,
            base_delay: Duration::from_millis(1),
            max_delay: Duration::from_millis(4),
        }
    }

    fn ok_body(content: &str) -> String {
        json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
    }

    #[test]
    fn healthy_endpoint_passthrough() {
        let (url, handle) = stub_server(vec![(200, ok_body("hello there"))]);
        let out = chat_complete(&spec_for(&url), "hi", &fast_retry()).unwrap();
        assert_eq!(out, "hello there");
        handle.join().unwrap();
    }

    #[test]
    fn retries_transient_rate_limit_then_succeeds() {
        let (url, handle) = stub_server(vec![
            (429, "{\"error\": \"slow down\"}".into()),
            (429, "{\"error\": \"slow down\"}".into()),
            (200, ok_body("recovered")),
        ]);
        let out = chat_complete(&spec_for(&url), "hi", &fast_retry()).unwrap();
        assert_eq!(out, "recovered");
        handle.join().unwrap();
    }

    #[test]
    fn persistent_rate_limit_exhausts_budget() {
        let (url, handle) = stub_server(vec![
            (429, "{}".into()),
            (429, "{}".into()),
            (429, "{}".into()),
        ]);
        let err = chat_complete(&spec_for(&url), "hi", &fast_retry()).unwrap_err();
        assert!(matches!(
            err,
            AdapterError::BackendUnavailable { attempts: 3, .. }
        ));
        handle.join().unwrap();
    }

    #[test]
    fn client_error_is_not_retried() {
        let (url, handle) = stub_server(vec![(400, "{\"error\": \"bad request\"}".into())]);
        let err = chat_complete(&spec_for(&url), "hi", &fast_retry()).unwrap_err();
        assert!(matches!(err, AdapterError::BackendError { status: 400, .. }));
        handle.join().unwrap();
    }

    #[test]
    fn missing_auth_var_is_an_error() {
        let mut spec = spec_for("http://127.0.0.1:1/unused");
        spec.auth_env_var = Some("LLMCOIN_TEST_ABSENT_TOKEN".into());
        let err = chat_complete(&spec, "hi", &fast_retry()).unwrap_err();
        assert!(matches!(err, AdapterError::MissingAuth(_)));
    }

    #[test]
    fn malformed_response_shape() {
        let (url, handle) = stub_server(vec![(200, "{\"unexpected\": true}".into())]);
        let err = chat_complete(&spec_for(&url), "hi", &fast_retry()).unwrap_err();
        assert!(matches!(err, AdapterError::ResponseShape(_)));
        handle.join().unwrap();
    }
}
