//! Chat-completion client for a local model server.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{LlmError, LlmProvider, Message};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpChatConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_s: f64,
}

impl Default for HttpChatConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:11434/api/chat".to_string(),
            model: "qwen2.5:14b".to_string(),
            temperature: 0.0,
            max_tokens: 512,
            timeout_s: 60.0,
        }
    }
}

#[derive(Serialize)]
struct ChatOptions {
    temperature: f64,
    num_predict: u32,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [Message],
    stream: bool,
    temperature: f64,
    max_tokens: u32,
    options: ChatOptions,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

/// Either the Ollama shape (`message`) or the OpenAI shape (`choices`).
#[derive(Deserialize)]
struct ChatResponse {
    message: Option<ChatMessage>,
    #[serde(default)]
    choices: Vec<ChatChoice>,
}

/// Single-turn, non-streaming chat completion over HTTP. The request carries
/// the model name, the role-tagged messages and the sampling settings; the
/// reply's first message content is the generated text.
pub struct HttpChatProvider {
    config: HttpChatConfig,
    agent: ureq::Agent,
}

impl HttpChatProvider {
    pub fn new(config: HttpChatConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_s.max(0.001))))
            .build()
            .into();
        Self { config, agent }
    }
}

impl LlmProvider for HttpChatProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn complete(&self, messages: &[Message]) -> Result<String, LlmError> {
        let c = &self.config;
        let request = ChatRequest {
            model: &c.model,
            messages,
            stream: false,
            temperature: c.temperature,
            max_tokens: c.max_tokens,
            options: ChatOptions {
                temperature: c.temperature,
                num_predict: c.max_tokens,
            },
        };
        let response: ChatResponse = self
            .agent
            .post(&c.endpoint)
            .send_json(&request)
            .and_then(|mut r| r.body_mut().read_json())
            .map_err(|e| LlmError::Transport {
                provider: c.endpoint.clone(),
                message: e.to_string(),
            })?;
        response
            .message
            .or_else(|| response.choices.into_iter().next().map(|c| c.message))
            .map(|m| m.content)
            .ok_or_else(|| LlmError::BadResponse {
                provider: c.endpoint.clone(),
                message: "no message in reply".to_string(),
            })
    }
}
