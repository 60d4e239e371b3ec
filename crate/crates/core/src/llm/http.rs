//! HTTP chat-completion backend for live runs.
//!
//! Configuration comes from environment variables so credentials never land
//! in config files:
//!
//! | variable                | meaning                              |
//! |-------------------------|--------------------------------------|
//! | `MEMENTOR_LLM_ENDPOINT` | full chat-completions URL            |
//! | `MEMENTOR_LLM_API_KEY`  | bearer credential                    |
//! | `MEMENTOR_LLM_MODEL`    | model identifier                     |
//! | `MEMENTOR_LLM_TIMEOUT_S`| request timeout seconds (default 30) |
//! | `MEMENTOR_LLM_TEMPERATURE` | optional sampling temperature     |
//!
//! Normalization rules (also in `docs/http-backend.md`): the bundle's
//! system prompt becomes the leading `system` message; history follows in
//! order with text verbatim (`tool`-role perception events are forwarded
//! with role `system` since they are engine-injected context, never user
//! speech); tool specs map to `tools[].function` entries. The reply's first
//! choice normalizes into [`BackendResponse`]; anything that does not fit
//! the provider shape is [`BackendError::MalformedProviderReply`]. One
//! retry on transport errors, then the error propagates.

use serde_json::{json, Value};

use super::{Backend, BackendError, BackendResponse, PromptBundle, Role, ToolCall};

#[derive(Clone, Debug)]
pub struct HttpConfig {
    pub endpoint: String,
    pub api_key: String,
    pub model: String,
    pub timeout_s: u64,
    pub temperature: Option<f64>,
}

impl HttpConfig {
    pub fn from_env() -> Result<Self, BackendError> {
        let need = |key: &str| {
            std::env::var(key).map_err(|_| BackendError::MissingConfig(key.to_string()))
        };
        Ok(Self {
            endpoint: need("MEMENTOR_LLM_ENDPOINT")?,
            api_key: need("MEMENTOR_LLM_API_KEY")?,
            model: need("MEMENTOR_LLM_MODEL")?,
            timeout_s: std::env::var("MEMENTOR_LLM_TIMEOUT_S")
                .ok()
                .and_then(|s| s.parse().ok())
                .unwrap_or(30),
            temperature: std::env::var("MEMENTOR_LLM_TEMPERATURE")
                .ok()
                .and_then(|s| s.parse().ok()),
        })
    }
}

/// Transport seam so request building and reply parsing stay testable
/// without a network.
pub trait Transport: Send + Sync {
    fn post(&self, config: &HttpConfig, body: &Value) -> Result<Value, BackendError>;
}

struct ReqwestTransport;

impl Transport for ReqwestTransport {
    fn post(&self, config: &HttpConfig, body: &Value) -> Result<Value, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(config.timeout_s))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let response = client
            .post(&config.endpoint)
            .bearer_auth(&config.api_key)
            .json(body)
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(BackendError::Transport(format!("http status {status}")));
        }
        response
            .json()
            .map_err(|e| BackendError::MalformedProviderReply(e.to_string()))
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    transport: Box<dyn Transport>,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        Self { config, transport: Box::new(ReqwestTransport) }
    }

    pub fn from_env() -> Result<Self, BackendError> {
        Ok(Self::new(HttpConfig::from_env()?))
    }

    pub fn with_transport(config: HttpConfig, transport: Box<dyn Transport>) -> Self {
        Self { config, transport }
    }
}

impl Backend for HttpBackend {
    fn complete(&self, bundle: &PromptBundle) -> Result<BackendResponse, BackendError> {
        bundle.validate()?;
        let body = to_provider_request(bundle, &self.config.model, self.config.temperature);
        let reply = match self.transport.post(&self.config, &body) {
            Ok(reply) => reply,
            // one retry on transport failure
            Err(BackendError::Transport(_)) => self.transport.post(&self.config, &body)?,
            Err(other) => return Err(other),
        };
        parse_provider_reply(&reply)
    }
}

/// Build the provider request body. Message order and text are preserved
/// exactly.
pub fn to_provider_request(bundle: &PromptBundle, model: &str, temperature: Option<f64>) -> Value {
    let mut messages = vec![json!({"role": "system", "content": bundle.system_prompt})];
    for message in &bundle.messages {
        let role = match message.role {
            Role::User => "user",
            Role::Assistant => "assistant",
            Role::Tool => "system",
        };
        messages.push(json!({"role": role, "content": message.text}));
    }
    let tools: Vec<Value> = bundle
        .tool_specs
        .iter()
        .map(|t| {
            json!({
                "type": "function",
                "function": {
                    "name": t.name,
                    "description": t.description,
                    "parameters": {"type": "object", "properties": {}}
                }
            })
        })
        .collect();
    let mut body = json!({"model": model, "messages": messages});
    if !tools.is_empty() {
        body["tools"] = Value::Array(tools);
    }
    if let Some(t) = temperature {
        body["temperature"] = json!(t);
    }
    body
}

/// Normalize the provider's first choice into a [`BackendResponse`].
pub fn parse_provider_reply(reply: &Value) -> Result<BackendResponse, BackendError> {
    let malformed = |msg: &str| BackendError::MalformedProviderReply(msg.to_string());
    let message = reply
        .get("choices")
        .and_then(|c| c.get(0))
        .and_then(|c| c.get("message"))
        .ok_or_else(|| malformed("missing choices[0].message"))?;

    let utterance = message
        .get("content")
        .and_then(Value::as_str)
        .filter(|s| !s.is_empty())
        .map(str::to_string);

    let tool_call = match message.get("tool_calls").and_then(|t| t.get(0)) {
        Some(call) => {
            let function = call
                .get("function")
                .ok_or_else(|| malformed("tool call without function"))?;
            let name = function
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| malformed("tool call without name"))?
                .to_string();
            let arguments = match function.get("arguments") {
                None => Default::default(),
                Some(Value::String(raw)) if raw.trim().is_empty() => Default::default(),
                Some(Value::String(raw)) => serde_json::from_str::<serde_json::Map<_, _>>(raw)
                    .map_err(|e| malformed(&format!("bad tool arguments: {e}")))?
                    .into_iter()
                    .map(|(k, v)| (k, stringify(&v)))
                    .collect(),
                Some(other) => return Err(malformed(&format!("bad arguments value: {other}"))),
            };
            Some(ToolCall { name, arguments })
        }
        None => None,
    };

    let response = BackendResponse { utterance, tool_call };
    response
        .validate()
        .map_err(|_| malformed("reply carries neither content nor tool call"))?;
    Ok(response)
}

fn stringify(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{Message, ToolDescriptor};
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn bundle() -> PromptBundle {
        PromptBundle {
            system_prompt: "you are a coach".into(),
            current_stage: "converse".into(),
            messages: vec![
                Message::user("hello"),
                Message::assistant("hi!"),
                Message::tool("known_user: Anna"),
                Message::user("shall we train?"),
            ],
            tool_specs: vec![ToolDescriptor {
                name: "start_training".into(),
                description: "begin the training".into(),
            }],
            working_memory_block: String::new(),
            retrieved_context_block: None,
        }
    }

    #[test]
    fn request_preserves_message_order_and_content() {
        let body = to_provider_request(&bundle(), "test-model", None);
        let messages = body["messages"].as_array().unwrap();
        assert_eq!(messages.len(), 5);
        assert_eq!(messages[0]["role"], "system");
        let texts: Vec<&str> = messages[1..]
            .iter()
            .map(|m| m["content"].as_str().unwrap())
            .collect();
        assert_eq!(texts, vec!["hello", "hi!", "known_user: Anna", "shall we train?"]);
        assert_eq!(body["tools"][0]["function"]["name"], "start_training");
    }

    #[test]
    fn parses_content_and_tool_call() {
        let reply = serde_json::json!({
            "choices": [{"message": {
                "content": "let's go!",
                "tool_calls": [{"function": {"name": "start_training", "arguments": "{\"pace\": \"slow\"}"}}]
            }}]
        });
        let response = parse_provider_reply(&reply).unwrap();
        assert_eq!(response.utterance.as_deref(), Some("let's go!"));
        let call = response.tool_call.unwrap();
        assert_eq!(call.name, "start_training");
        assert_eq!(call.arguments["pace"], "slow");
    }

    #[test]
    fn reply_without_content_or_tool_is_malformed() {
        let reply = serde_json::json!({"choices": [{"message": {"content": ""}}]});
        assert!(matches!(
            parse_provider_reply(&reply),
            Err(BackendError::MalformedProviderReply(_))
        ));
    }

    #[test]
    fn transport_error_is_retried_once() {
        struct FlakyTransport(AtomicUsize);
        impl Transport for FlakyTransport {
            fn post(&self, _: &HttpConfig, _: &Value) -> Result<Value, BackendError> {
                if self.0.fetch_add(1, Ordering::SeqCst) == 0 {
                    Err(BackendError::Transport("connection reset".into()))
                } else {
                    Ok(serde_json::json!({"choices": [{"message": {"content": "ok"}}]}))
                }
            }
        }
        let config = HttpConfig {
            endpoint: "http://localhost/none".into(),
            api_key: "k".into(),
            model: "m".into(),
            timeout_s: 1,
            temperature: None,
        };
        let backend = HttpBackend::with_transport(config, Box::new(FlakyTransport(AtomicUsize::new(0))));
        let response = backend.complete(&bundle()).unwrap();
        assert_eq!(response.utterance.as_deref(), Some("ok"));
    }
}
