//! Text-completion providers and the instrumented gateway the pipeline
//! talks to.

mod http;
mod mock;
mod template;

use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::HttpProvider;
pub use mock::{
    lexicon_classify, mock_policy, plan_policy, score_trajectory, utterances, MockProvider,
    TranscriptSummary, LEXICON_FALLBACK,
};
pub use template::{render, Bindings, PromptTemplate, TemplateKind, TemplateSet, TEMPLATE_VERSION};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("provider timed out or was unreachable after {attempts} attempt(s): {detail}")]
    ProviderTimeout { attempts: u32, detail: String },
    #[error("provider rejected the request with status {status}: {body}")]
    ProviderRejected { status: u16, body: String },
    #[error("provider response was malformed: {0}")]
    MalformedResponse(String),
    #[error("mock provider has no rule for this prompt: {0}")]
    MockRuleMiss(String),
    #[error("template {template} references unbound placeholder {{{placeholder}}}")]
    UnboundPlaceholder {
        template: String,
        placeholder: String,
    },
    #[error("invalid provider configuration: {0}")]
    InvalidConfig(String),
}

pub const DETERMINISTIC_TEMPERATURE: f64 = 0.0;
pub const SAMPLING_TEMPERATURE: f64 = 0.7;
pub const SAMPLING_MAX_TOKENS: u32 = 256;
const LABEL_MAX_TOKENS: u32 = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletionRequest {
    pub prompt_text: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub stop_sequences: Vec<String>,
    /// Only the mock provider honors this.
    pub seed: Option<u64>,
}

impl CompletionRequest {
    /// Temperature 0, short answer: classification and scoring.
    pub fn deterministic(prompt_text: impl Into<String>) -> Self {
        CompletionRequest {
            prompt_text: prompt_text.into(),
            temperature: DETERMINISTIC_TEMPERATURE,
            max_tokens: LABEL_MAX_TOKENS,
            stop_sequences: vec!["\n".to_string()],
            seed: None,
        }
    }

    /// Default sampling parameters for everything else.
    pub fn sampled(prompt_text: impl Into<String>, seed: u64) -> Self {
        CompletionRequest {
            prompt_text: prompt_text.into(),
            temperature: SAMPLING_TEMPERATURE,
            max_tokens: SAMPLING_MAX_TOKENS,
            stop_sequences: Vec::new(),
            seed: Some(seed),
        }
    }
}

pub trait CompletionProvider: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError>;

    fn name(&self) -> &str;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    LiveHttp,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// Full URL of an OpenAI-compatible chat-completions endpoint.
    pub endpoint_url: Option<String>,
    /// Name of the environment variable holding the bearer token.
    pub api_key_source: String,
    pub model_name: String,
    #[serde(with = "duration_secs")]
    pub request_timeout: Duration,
    pub retry_limit: u32,
    #[serde(with = "duration_secs")]
    pub initial_backoff: Duration,
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

impl ProviderConfig {
    pub fn mock() -> Self {
        ProviderConfig {
            kind: ProviderKind::Mock,
            endpoint_url: None,
            api_key_source: "OPENAI_API_KEY".to_string(),
            model_name: "mock".to_string(),
            request_timeout: Duration::from_secs(30),
            retry_limit: 2,
            initial_backoff: Duration::from_millis(250),
        }
    }

    pub fn live(endpoint_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        ProviderConfig {
            kind: ProviderKind::LiveHttp,
            endpoint_url: Some(endpoint_url.into()),
            model_name: model_name.into(),
            ..Self::mock()
        }
    }

    pub fn build(&self) -> Result<Arc<dyn CompletionProvider>, GatewayError> {
        match self.kind {
            ProviderKind::Mock => Ok(Arc::new(MockProvider)),
            ProviderKind::LiveHttp => Ok(Arc::new(HttpProvider::new(self.clone())?)),
        }
    }
}

/// One-shot completion against a freshly built provider.
pub fn complete(
    config: &ProviderConfig,
    request: &CompletionRequest,
) -> Result<String, GatewayError> {
    config.build()?.complete(request)
}

/// Renders templates and forwards them to a provider, optionally recording
/// the name of every template it renders.
#[derive(Clone)]
pub struct Gateway {
    provider: Arc<dyn CompletionProvider>,
    templates: Arc<TemplateSet>,
    log: Option<Arc<Mutex<Vec<TemplateKind>>>>,
}

impl Gateway {
    pub fn new(provider: Arc<dyn CompletionProvider>) -> Self {
        Gateway {
            provider,
            templates: Arc::new(TemplateSet::builtin()),
            log: None,
        }
    }

    pub fn mock() -> Self {
        Self::new(Arc::new(MockProvider))
    }

    pub fn with_templates(mut self, templates: TemplateSet) -> Self {
        self.templates = Arc::new(templates);
        self
    }

    /// Returns a gateway sharing this provider whose renders are logged.
    pub fn instrumented(&self) -> (Gateway, TemplateLog) {
        let log = Arc::new(Mutex::new(Vec::new()));
        let gateway = Gateway {
            log: Some(log.clone()),
            ..self.clone()
        };
        (gateway, TemplateLog(log))
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    pub fn render(&self, kind: TemplateKind, bindings: &Bindings) -> Result<String, GatewayError> {
        let text = self.templates.get(kind).render(bindings)?;
        if let Some(log) = &self.log {
            log.lock().unwrap().push(kind);
        }
        Ok(text)
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        self.provider.complete(request)
    }
}

/// Handle onto an instrumented gateway's render log.
#[derive(Clone)]
pub struct TemplateLog(Arc<Mutex<Vec<TemplateKind>>>);

impl TemplateLog {
    /// Drains and returns the names rendered so far, sorted.
    pub fn take_sorted(&self) -> Vec<TemplateKind> {
        let mut names = std::mem::take(&mut *self.0.lock().unwrap());
        names.sort();
        names
    }
}
