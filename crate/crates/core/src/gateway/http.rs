//! OpenAI-compatible chat-completions client.

use std::sync::OnceLock;
use std::thread;

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::{CompletionProvider, CompletionRequest, GatewayError, ProviderConfig};

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    stop: &'a [String],
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

enum Attempt {
    Done(String),
    Retry(GatewayError),
    Fail(GatewayError),
}

/// Blocking HTTP provider. The underlying client is built on first use so
/// the provider can be constructed inside an async runtime and then driven
/// from blocking worker threads.
pub struct HttpProvider {
    config: ProviderConfig,
    endpoint: String,
    client: OnceLock<reqwest::blocking::Client>,
}

impl HttpProvider {
    pub fn new(config: ProviderConfig) -> Result<Self, GatewayError> {
        let endpoint = config
            .endpoint_url
            .clone()
            .filter(|u| !u.trim().is_empty())
            .ok_or_else(|| {
                GatewayError::InvalidConfig("live provider requires endpoint_url".into())
            })?;
        Ok(HttpProvider {
            config,
            endpoint,
            client: OnceLock::new(),
        })
    }

    fn client(&self) -> Result<&reqwest::blocking::Client, GatewayError> {
        if let Some(c) = self.client.get() {
            return Ok(c);
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(self.config.request_timeout)
            .connect_timeout(self.config.request_timeout)
            .build()
            .map_err(|e| GatewayError::InvalidConfig(format!("cannot build HTTP client: {e}")))?;
        Ok(self.client.get_or_init(|| client))
    }

    fn attempt(&self, request: &CompletionRequest) -> Result<Attempt, GatewayError> {
        let body = ChatRequest {
            model: &self.config.model_name,
            messages: vec![ChatMessage {
                role: "user",
                content: &request.prompt_text,
            }],
            temperature: request.temperature,
            max_tokens: request.max_tokens,
            stop: &request.stop_sequences,
        };
        let mut builder = self.client()?.post(&self.endpoint).json(&body);
        if let Ok(key) = std::env::var(&self.config.api_key_source) {
            builder = builder.bearer_auth(key);
        }
        let response = match builder.send() {
            Ok(r) => r,
            Err(e) => {
                return Ok(Attempt::Retry(GatewayError::ProviderTimeout {
                    attempts: 0,
                    detail: e.to_string(),
                }))
            }
        };
        let status = response.status();
        if !status.is_success() {
            let text = response.text().unwrap_or_default();
            let err = GatewayError::ProviderRejected {
                status: status.as_u16(),
                body: text,
            };
            return Ok(if status.is_server_error() || status.as_u16() == 429 {
                Attempt::Retry(err)
            } else {
                Attempt::Fail(err)
            });
        }
        let parsed: ChatResponse = match response.json() {
            Ok(p) => p,
            Err(e) if e.is_timeout() => {
                return Ok(Attempt::Retry(GatewayError::ProviderTimeout {
                    attempts: 0,
                    detail: e.to_string(),
                }))
            }
            Err(e) => {
                return Ok(Attempt::Fail(GatewayError::MalformedResponse(
                    e.to_string(),
                )))
            }
        };
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .map(Attempt::Done)
            .ok_or_else(|| GatewayError::MalformedResponse("response has no choices".into()))
    }
}

impl CompletionProvider for HttpProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let attempts = self.config.retry_limit + 1;
        let mut backoff = self.config.initial_backoff;
        let mut last = None;
        for attempt in 1..=attempts {
            match self.attempt(request)? {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) => {
                    warn!(attempt, error = %e, "completion attempt failed");
                    last = Some(e);
                }
            }
            if attempt < attempts {
                thread::sleep(backoff);
                backoff = backoff.saturating_mul(2);
            }
        }
        Err(match last {
            Some(GatewayError::ProviderTimeout { detail, .. }) => {
                GatewayError::ProviderTimeout { attempts, detail }
            }
            Some(e) => e,
            None => unreachable!("at least one attempt is made"),
        })
    }

    fn name(&self) -> &str {
        &self.config.model_name
    }
}
