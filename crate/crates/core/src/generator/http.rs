//! OpenAI-compatible HTTP backend.
//!
//! One `POST {endpoint}/v1/chat/completions` per call, bearer token from the
//! `CONTRACT_API_KEY` environment variable, no internal retries — retry
//! policy belongs to the remediation layer so attempt accounting stays in
//! one place. Concurrent in-flight requests are capped by a small semaphore.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::Deserialize;

use super::{Generator, GeneratorRequest, GeneratorResponse, TransportError};

/// Environment variable holding the bearer token, read per call.
pub const API_KEY_ENV: &str = "CONTRACT_API_KEY";

pub struct HttpGenerator {
    client: reqwest::blocking::Client,
    url: String,
    model: String,
    temperature_override: Option<f64>,
    permits: Semaphore,
}

impl HttpGenerator {
    pub fn new(
        endpoint: String,
        model: String,
        temperature_override: Option<f64>,
        timeout: Duration,
        max_concurrent: u32,
    ) -> Result<Self, String> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| format!("http client: {e}"))?;
        let url = format!("{}/v1/chat/completions", endpoint.trim_end_matches('/'));
        Ok(Self {
            client,
            url,
            model,
            temperature_override,
            permits: Semaphore::new(max_concurrent.max(1)),
        })
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

#[derive(Deserialize, Default)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl Generator for HttpGenerator {
    fn generate(&self, request: &GeneratorRequest) -> Result<GeneratorResponse, TransportError> {
        let _permit = self.permits.acquire();
        let mut body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": self.temperature_override.unwrap_or(request.temperature),
            "max_tokens": request.max_tokens,
        });
        if let Some(seed) = request.seed {
            body["seed"] = serde_json::json!(seed);
        }

        let mut call = self.client.post(&self.url).json(&body);
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            call = call.bearer_auth(key);
        }

        let started = Instant::now();
        let response = call.send().map_err(|e| {
            if e.is_timeout() {
                TransportError::Timeout(e.to_string())
            } else {
                TransportError::Http(e.to_string())
            }
        })?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| TransportError::Http(e.to_string()))?;
        let latency = started.elapsed();

        if !status.is_success() {
            return Err(TransportError::Status {
                code: status.as_u16(),
                body: crate::remediation::excerpt(&text),
            });
        }
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| TransportError::MalformedResponse(e.to_string()))?;
        let content = parsed
            .choices
            .first()
            .and_then(|c| c.message.content.clone())
            .ok_or_else(|| {
                TransportError::MalformedResponse("no choices[0].message.content".to_string())
            })?;
        let usage = parsed.usage.unwrap_or_default();
        Ok(GeneratorResponse {
            text: content,
            tokens_in: usage.prompt_tokens,
            tokens_out: usage.completion_tokens,
            latency,
        })
    }
}

/// Minimal counting semaphore for blocking callers.
struct Semaphore {
    available: Mutex<u32>,
    signal: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(count: u32) -> Self {
        Self {
            available: Mutex::new(count),
            signal: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut available = self.available.lock().expect("semaphore poisoned");
        while *available == 0 {
            available = self.signal.wait(available).expect("semaphore poisoned");
        }
        *available -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut available = self.0.available.lock().expect("semaphore poisoned");
        *available += 1;
        self.0.signal.notify_one();
    }
}
