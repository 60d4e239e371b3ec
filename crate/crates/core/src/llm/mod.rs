//! Completion backends.
//!
//! Everything the engine asks of a language model goes through [`Backend`]:
//! one call, one [`PromptBundle`] in, one [`BackendResponse`] out. The
//! scripted backend answers from an ordered rule table and is referentially
//! transparent, which makes every downstream pipeline testable offline; the
//! [`http`] backend forwards to a live chat-completion endpoint.

pub mod http;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Conversation history cap, counted in messages.
pub const HISTORY_CAP: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Assistant,
    /// Synthetic messages carrying perception events (for example a face
    /// recognition hit), distinguishable from user utterances.
    Tool,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::User => "user",
            Role::Assistant => "assistant",
            Role::Tool => "tool",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
}

impl Message {
    pub fn user(text: impl Into<String>) -> Self {
        Self { role: Role::User, text: text.into() }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Self { role: Role::Assistant, text: text.into() }
    }

    pub fn tool(text: impl Into<String>) -> Self {
        Self { role: Role::Tool, text: text.into() }
    }
}

/// What the backend needs to know about a callable tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolDescriptor {
    pub name: String,
    pub description: String,
}

/// Everything sent to a backend for one completion: assembled system
/// prompt, capped history, tool list, plus the working-memory and retrieved
/// context blocks that are also embedded in the system prompt.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PromptBundle {
    pub system_prompt: String,
    pub current_stage: String,
    pub messages: Vec<Message>,
    pub tool_specs: Vec<ToolDescriptor>,
    pub working_memory_block: String,
    pub retrieved_context_block: Option<String>,
}

impl PromptBundle {
    /// Invariant check performed by every backend before dispatch.
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.messages.len() > HISTORY_CAP {
            return Err(BackendError::HistoryCapExceeded {
                len: self.messages.len(),
                cap: HISTORY_CAP,
            });
        }
        let mut seen = BTreeSet::new();
        for tool in &self.tool_specs {
            if !seen.insert(tool.name.as_str()) {
                return Err(BackendError::DuplicateToolDescriptor(tool.name.clone()));
            }
        }
        Ok(())
    }

    pub fn last_message_text(&self) -> &str {
        self.messages.last().map(|m| m.text.as_str()).unwrap_or("")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub name: String,
    #[serde(default)]
    pub arguments: BTreeMap<String, String>,
}

/// A backend reply: an utterance, a tool invocation, or both.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub utterance: Option<String>,
    pub tool_call: Option<ToolCall>,
}

impl BackendResponse {
    pub fn say(text: impl Into<String>) -> Self {
        Self { utterance: Some(text.into()), tool_call: None }
    }

    pub fn invoke(tool: impl Into<String>) -> Self {
        Self {
            utterance: None,
            tool_call: Some(ToolCall { name: tool.into(), arguments: BTreeMap::new() }),
        }
    }

    pub fn say_and_invoke(text: impl Into<String>, tool: impl Into<String>) -> Self {
        Self {
            utterance: Some(text.into()),
            tool_call: Some(ToolCall { name: tool.into(), arguments: BTreeMap::new() }),
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.utterance.is_none() && self.tool_call.is_none() {
            return Err(BackendError::EmptyResponse);
        }
        Ok(())
    }
}

/// Predicate over (last message text, current stage). Both constraints are
/// optional; an empty trigger matches everything. Text matching is
/// case-insensitive substring containment.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Trigger {
    pub text_contains: Option<String>,
    pub stage_is: Option<String>,
}

impl Trigger {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn text(fragment: impl Into<String>) -> Self {
        Self { text_contains: Some(fragment.into()), stage_is: None }
    }

    pub fn text_in_stage(fragment: impl Into<String>, stage: impl Into<String>) -> Self {
        Self { text_contains: Some(fragment.into()), stage_is: Some(stage.into()) }
    }

    pub fn stage(stage: impl Into<String>) -> Self {
        Self { text_contains: None, stage_is: Some(stage.into()) }
    }

    pub fn fires(&self, last_text: &str, stage: &str) -> bool {
        if let Some(fragment) = &self.text_contains {
            if !last_text.to_lowercase().contains(&fragment.to_lowercase()) {
                return false;
            }
        }
        if let Some(expected) = &self.stage_is {
            if expected != stage {
                return false;
            }
        }
        true
    }
}

/// One scripted behavior: first rule whose trigger fires wins.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TurnRule {
    pub trigger: Trigger,
    pub response: BackendResponse,
}

impl TurnRule {
    pub fn new(trigger: Trigger, response: BackendResponse) -> Self {
        Self { trigger, response }
    }
}

/// A completion backend. Implementations are immutable after construction
/// and safe for concurrent use; every `complete` call is independent.
pub trait Backend: Send + Sync {
    fn complete(&self, bundle: &PromptBundle) -> Result<BackendResponse, BackendError>;
}

/// Deterministic backend: `complete` is a pure function of the rule table
/// and the bundle.
pub struct ScriptedBackend {
    rules: Vec<TurnRule>,
}

impl ScriptedBackend {
    /// Rules may only invoke tools drawn from `known_tools`.
    pub fn new<S: AsRef<str>>(rules: Vec<TurnRule>, known_tools: &[S]) -> Result<Self, BackendError> {
        let known: BTreeSet<&str> = known_tools.iter().map(|s| s.as_ref()).collect();
        for rule in &rules {
            rule.response.validate()?;
            if let Some(call) = &rule.response.tool_call {
                if !known.contains(call.name.as_str()) {
                    return Err(BackendError::UnknownToolInRule(call.name.clone()));
                }
            }
        }
        Ok(Self { rules })
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, bundle: &PromptBundle) -> Result<BackendResponse, BackendError> {
        bundle.validate()?;
        let last = bundle.last_message_text();
        for rule in &self.rules {
            if rule.trigger.fires(last, &bundle.current_stage) {
                if let Some(call) = &rule.response.tool_call {
                    if !bundle.tool_specs.iter().any(|t| t.name == call.name) {
                        return Err(BackendError::ToolNotInBundle(call.name.clone()));
                    }
                }
                return Ok(rule.response.clone());
            }
        }
        Err(BackendError::NoRuleMatched { input: last.to_string() })
    }
}

/// Closure-backed backend, handy in tests and for deterministic extractors.
pub struct FnBackend<F>(pub F);

impl<F> Backend for FnBackend<F>
where
    F: Fn(&PromptBundle) -> Result<BackendResponse, BackendError> + Send + Sync,
{
    fn complete(&self, bundle: &PromptBundle) -> Result<BackendResponse, BackendError> {
        bundle.validate()?;
        (self.0)(bundle)
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("no scripted rule matched input '{input}'")]
    NoRuleMatched { input: String },

    #[error("rule invokes unknown tool '{0}'")]
    UnknownToolInRule(String),

    #[error("response names tool '{0}' absent from the prompt bundle")]
    ToolNotInBundle(String),

    #[error("prompt bundle carries {len} messages, cap is {cap}")]
    HistoryCapExceeded { len: usize, cap: usize },

    #[error("duplicate tool descriptor '{0}'")]
    DuplicateToolDescriptor(String),

    #[error("backend response has neither utterance nor tool call")]
    EmptyResponse,

    #[error("missing configuration: {0}")]
    MissingConfig(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("malformed provider reply: {0}")]
    MalformedProviderReply(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tools() -> Vec<ToolDescriptor> {
        vec![
            ToolDescriptor { name: "start_training".into(), description: "begin".into() },
            ToolDescriptor { name: "converse".into(), description: "chat".into() },
        ]
    }

    fn bundle_with(messages: Vec<Message>) -> PromptBundle {
        PromptBundle {
            system_prompt: "base".into(),
            current_stage: "converse".into(),
            messages,
            tool_specs: tools(),
            working_memory_block: String::new(),
            retrieved_context_block: None,
        }
    }

    #[test]
    fn first_matching_rule_wins() {
        let rules = vec![
            TurnRule::new(Trigger::text("never"), BackendResponse::say("no")),
            TurnRule::new(Trigger::text("let's start"), BackendResponse::invoke("start_training")),
            TurnRule::new(Trigger::text("start"), BackendResponse::say("also matches")),
        ];
        let backend = ScriptedBackend::new(rules, &["start_training"]).unwrap();
        let bundle = bundle_with(vec![Message::user("ok let's start")]);
        let response = backend.complete(&bundle).unwrap();
        assert_eq!(response.tool_call.unwrap().name, "start_training");
    }

    #[test]
    fn empty_rule_list_yields_no_rule_matched() {
        let backend = ScriptedBackend::new(vec![], &[] as &[&str]).unwrap();
        let bundle = bundle_with(vec![Message::user("hello")]);
        assert!(matches!(
            backend.complete(&bundle),
            Err(BackendError::NoRuleMatched { .. })
        ));
    }

    #[test]
    fn rule_with_unregistered_tool_is_rejected() {
        let rules = vec![TurnRule::new(Trigger::any(), BackendResponse::invoke("fly_away"))];
        let err = ScriptedBackend::new(rules, &["start_training"]).unwrap_err();
        assert!(matches!(err, BackendError::UnknownToolInRule(name) if name == "fly_away"));
    }

    #[test]
    fn over_cap_bundle_is_rejected_before_dispatch() {
        let backend = ScriptedBackend::new(
            vec![TurnRule::new(Trigger::any(), BackendResponse::say("hi"))],
            &[] as &[&str],
        )
        .unwrap();
        let messages: Vec<Message> = (0..11).map(|i| Message::user(format!("m{i}"))).collect();
        assert_eq!(messages.len(), 11);
        let bundle = bundle_with(messages);
        assert!(matches!(
            backend.complete(&bundle),
            Err(BackendError::HistoryCapExceeded { len: 11, cap: 10 })
        ));
    }

    #[test]
    fn identical_bundles_get_identical_responses() {
        let rules = vec![TurnRule::new(Trigger::text("hello"), BackendResponse::say("hi there"))];
        let backend = ScriptedBackend::new(rules, &[] as &[&str]).unwrap();
        let bundle = bundle_with(vec![Message::user("hello robot")]);
        let a = backend.complete(&bundle).unwrap();
        let b = backend.complete(&bundle).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stage_scoped_trigger_respects_stage() {
        let rules = vec![TurnRule::new(
            Trigger::text_in_stage("yes", "start_training"),
            BackendResponse::say("resuming"),
        )];
        let backend = ScriptedBackend::new(rules, &[] as &[&str]).unwrap();
        let mut bundle = bundle_with(vec![Message::user("yes")]);
        assert!(backend.complete(&bundle).is_err());
        bundle.current_stage = "start_training".into();
        assert!(backend.complete(&bundle).is_ok());
    }

    #[test]
    fn trigger_matching_is_case_insensitive() {
        assert!(Trigger::text("Let's Start").fires("ok LET'S START now", "x"));
    }

    #[test]
    fn duplicate_tool_descriptors_fail_validation() {
        let mut bundle = bundle_with(vec![]);
        bundle.tool_specs.push(bundle.tool_specs[0].clone());
        assert!(matches!(
            bundle.validate(),
            Err(BackendError::DuplicateToolDescriptor(_))
        ));
    }
}
