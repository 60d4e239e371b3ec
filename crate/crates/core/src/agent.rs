//! Interaction manager: tools as interaction stages, working memory, capped
//! conversation history, and tool-call dispatch as stage transitions.
//!
//! Each registered tool is a robot skill with its own stage system prompt.
//! When the backend invokes a tool, the session transitions into that
//! stage, the stage prompt is installed into subsequent prompt bundles, and
//! the tool's entry actions surface as typed module signals on the returned
//! [`AgentAction`]. Direct utterances never change the stage.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{
    Backend, BackendError, BackendResponse, Message, PromptBundle, ToolDescriptor, HISTORY_CAP,
};

/// Base instructions shared by every stage. Written for this engine; the
/// live study's prompts are not published, so these are original text.
pub const BASE_PROMPT: &str = "You are a friendly robot coach guiding one user through a \
physical training session. Balance social conversation with the training goals: answer \
briefly, keep the user engaged, and steer back to the pending exercises when the chat \
drifts. Invoke a tool whenever the interaction should move to a different stage.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuleSignal {
    StartPoseDemo,
    RequestRetrieval,
    NotifyTrainer,
    EndSession,
}

impl ModuleSignal {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModuleSignal::StartPoseDemo => "start-pose-demo",
            ModuleSignal::RequestRetrieval => "request-retrieval",
            ModuleSignal::NotifyTrainer => "notify-trainer",
            ModuleSignal::EndSession => "end-session",
        }
    }
}

/// A callable robot skill and the stage it represents.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub stage_prompt: String,
    #[serde(default)]
    pub entry_actions: Vec<ModuleSignal>,
}

impl ToolSpec {
    pub fn descriptor(&self) -> ToolDescriptor {
        ToolDescriptor { name: self.name.clone(), description: self.description.clone() }
    }
}

/// Immutable, shareable tool registry with deterministic (insertion) order.
#[derive(Clone, Debug, Default)]
pub struct ToolRegistry {
    specs: Vec<ToolSpec>,
    index: BTreeMap<String, usize>,
}

impl ToolRegistry {
    pub fn get(&self, name: &str) -> Option<&ToolSpec> {
        self.index.get(name).map(|&i| &self.specs[i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ToolSpec> {
        self.specs.iter()
    }

    pub fn descriptors(&self) -> Vec<ToolDescriptor> {
        self.specs.iter().map(ToolSpec::descriptor).collect()
    }

    pub fn tool_names(&self) -> Vec<String> {
        self.specs.iter().map(|s| s.name.clone()).collect()
    }
}

pub fn register_tools(specs: Vec<ToolSpec>) -> Result<ToolRegistry, AgentError> {
    let mut registry = ToolRegistry::default();
    for spec in specs {
        if spec.stage_prompt.trim().is_empty() {
            return Err(AgentError::EmptyStagePrompt(spec.name));
        }
        if registry.index.contains_key(&spec.name) {
            return Err(AgentError::DuplicateToolName(spec.name));
        }
        registry.index.insert(spec.name.clone(), registry.specs.len());
        registry.specs.push(spec);
    }
    Ok(registry)
}

/// The default seven-stage toolset: profiling, social talk, training,
/// feedback/motivation, pausing and closure.
pub fn default_toolset() -> Vec<ToolSpec> {
    let tool = |name: &str, description: &str, stage_prompt: &str, entry: &[ModuleSignal]| ToolSpec {
        name: name.into(),
        description: description.into(),
        stage_prompt: stage_prompt.into(),
        entry_actions: entry.to_vec(),
    };
    vec![
        tool(
            "profile_user",
            "Greet the user and learn who they are: name, language, sports, interests, experience.",
            "You are getting to know the user. Ask for their name if unknown, then about \
             sports, hobbies and prior experience with this kind of training. One question at a time.",
            &[ModuleSignal::RequestRetrieval],
        ),
        tool(
            "converse",
            "Hold open social conversation unrelated to the training task.",
            "You are chatting socially. Be warm and curious, but after a couple of turns guide \
             the user back toward the training goals.",
            &[],
        ),
        tool(
            "start_training",
            "Begin or resume the training sequence of poses.",
            "You are running the training. Announce the next pending pose, demonstrate it, and \
             ask the user to hold it. Track which poses remain.",
            &[ModuleSignal::StartPoseDemo],
        ),
        tool(
            "evaluate_pose",
            "Watch the user hold the current pose and judge their form.",
            "You are evaluating the user's current pose against the target. Wait for the \
             assessment, then deliver the feedback you are given.",
            &[ModuleSignal::NotifyTrainer],
        ),
        tool(
            "motivate",
            "Encourage a user who is struggling or discouraged.",
            "The user is struggling. Encourage them warmly, acknowledge the difficulty, and \
             offer to repeat the demonstration.",
            &[],
        ),
        tool(
            "pause_training",
            "Pause the training session at the user's request.",
            "Training is paused. Keep the conversation light and offer to resume when the user \
             is ready.",
            &[],
        ),
        tool(
            "end_session",
            "Close the session, thank the user and say goodbye.",
            "The session is ending. Summarize what was achieved, thank the user for their \
             feedback, and say goodbye.",
            &[ModuleSignal::EndSession],
        ),
    ]
}

#[derive(Serialize, Deserialize)]
struct ToolsetFile {
    #[serde(rename = "tool")]
    tools: Vec<ToolSpec>,
}

/// Load a toolset from a TOML file of `[[tool]]` tables
/// (name, description, stage_prompt, optional entry_actions).
pub fn load_toolset(path: &std::path::Path) -> Result<Vec<ToolSpec>, AgentError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AgentError::ToolsetFile(format!("{}: {e}", path.display())))?;
    let file: ToolsetFile = toml::from_str(&text)
        .map_err(|e| AgentError::ToolsetFile(format!("{}: {e}", path.display())))?;
    Ok(file.tools)
}

pub fn save_toolset(specs: &[ToolSpec], path: &std::path::Path) -> Result<(), AgentError> {
    let file = ToolsetFile { tools: specs.to_vec() };
    let text = toml::to_string_pretty(&file)
        .map_err(|e| AgentError::ToolsetFile(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| AgentError::ToolsetFile(e.to_string()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingLevel {
    Beginner,
    Intermediate,
    Advanced,
    #[default]
    Unknown,
}

impl TrainingLevel {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrainingLevel::Beginner => "beginner",
            TrainingLevel::Intermediate => "intermediate",
            TrainingLevel::Advanced => "advanced",
            TrainingLevel::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "beginner" => Some(Self::Beginner),
            "intermediate" => Some(Self::Intermediate),
            "advanced" => Some(Self::Advanced),
            "unknown" => Some(Self::Unknown),
            _ => None,
        }
    }
}

impl fmt::Display for TrainingLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingStatus {
    #[default]
    NotStarted,
    InProgress,
    Paused,
    Completed,
}

impl TrainingStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrainingStatus::NotStarted => "not_started",
            TrainingStatus::InProgress => "in_progress",
            TrainingStatus::Paused => "paused",
            TrainingStatus::Completed => "completed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "not_started" => Some(Self::NotStarted),
            "in_progress" => Some(Self::InProgress),
            "paused" => Some(Self::Paused),
            "completed" => Some(Self::Completed),
            _ => None,
        }
    }
}

/// Outcome of one pose within a session.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Failed,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::Failed => "failed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "completed" => Some(Self::Completed),
            "failed" => Some(Self::Failed),
            _ => None,
        }
    }
}

/// The agent's centralized real-time state: general user details plus
/// training-specific progress, serialized into every prompt bundle.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkingMemory {
    pub user_name: Option<String>,
    pub language: Option<String>,
    pub training_level: TrainingLevel,
    pub pending_poses: Vec<String>,
    pub completed_poses: Vec<(String, Outcome)>,
    pub training_status: TrainingStatus,
    pub objectives: Vec<String>,
    pub retrieved_context: Option<String>,
}

/// A typed fact observed during the interaction.
#[derive(Clone, Debug, PartialEq)]
pub enum Observation {
    NameLearned(String),
    LanguageDetected(String),
    LevelAssessed(TrainingLevel),
    PoseOutcome { pose: String, outcome: Outcome },
    StatusChange(TrainingStatus),
    ObjectiveAdded(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum WorkingMemoryError {
    #[error("pose '{0}' is not pending")]
    UnknownPose(String),

    #[error("cannot mark training completed with {0} poses still pending")]
    PendingPosesRemain(usize),
}

impl WorkingMemory {
    /// Install the pose roster for this session.
    pub fn assign_poses<S: Into<String>>(&mut self, poses: impl IntoIterator<Item = S>) {
        self.pending_poses = poses.into_iter().map(Into::into).collect();
    }

    /// Apply one observation; on error the memory is unchanged. Pose
    /// outcomes move the pose from pending to completed; other facts
    /// overwrite or append their field.
    pub fn apply(&mut self, observation: &Observation) -> Result<(), WorkingMemoryError> {
        match observation {
            Observation::NameLearned(name) => self.user_name = Some(name.clone()),
            Observation::LanguageDetected(lang) => self.language = Some(lang.clone()),
            Observation::LevelAssessed(level) => self.training_level = *level,
            Observation::PoseOutcome { pose, outcome } => {
                let idx = self
                    .pending_poses
                    .iter()
                    .position(|p| p == pose)
                    .ok_or_else(|| WorkingMemoryError::UnknownPose(pose.clone()))?;
                let pose = self.pending_poses.remove(idx);
                self.completed_poses.push((pose, *outcome));
            }
            Observation::StatusChange(status) => {
                if *status == TrainingStatus::Completed && !self.pending_poses.is_empty() {
                    return Err(WorkingMemoryError::PendingPosesRemain(self.pending_poses.len()));
                }
                self.training_status = *status;
            }
            Observation::ObjectiveAdded(text) => self.objectives.push(text.clone()),
        }
        debug_assert!(self.invariants_hold());
        Ok(())
    }

    /// pending and completed pose sets are disjoint; completed status
    /// implies nothing pending.
    pub fn invariants_hold(&self) -> bool {
        let disjoint = !self
            .pending_poses
            .iter()
            .any(|p| self.completed_poses.iter().any(|(c, _)| c == p));
        let status_ok =
            self.training_status != TrainingStatus::Completed || self.pending_poses.is_empty();
        disjoint && status_ok
    }

    pub fn poses_with(&self, outcome: Outcome) -> Vec<String> {
        self.completed_poses
            .iter()
            .filter(|(_, o)| *o == outcome)
            .map(|(p, _)| p.clone())
            .collect()
    }

    /// Labeled key/value block with stable field order, embedded in the
    /// system prompt so scripted backends can pattern-match it.
    pub fn render_block(&self) -> String {
        let list = |items: &[String]| {
            if items.is_empty() { "none".to_string() } else { items.join(", ") }
        };
        let completed: Vec<String> = self
            .completed_poses
            .iter()
            .map(|(p, o)| format!("{p} ({})", o.as_str()))
            .collect();
        format!(
            "user_name: {}\nlanguage: {}\ntraining_level: {}\ntraining_status: {}\n\
             pending_poses: {}\ncompleted_poses: {}\nobjectives: {}",
            self.user_name.as_deref().unwrap_or("unknown"),
            self.language.as_deref().unwrap_or("unknown"),
            self.training_level.as_str(),
            self.training_status.as_str(),
            list(&self.pending_poses),
            list(&completed),
            list(&self.objectives),
        )
    }

    /// Inverse of [`render_block`] for everything the block carries
    /// (`retrieved_context` travels in its own prompt block).
    pub fn parse_block(text: &str) -> Result<WorkingMemory, String> {
        let mut wm = WorkingMemory::default();
        let parse_list = |value: &str| -> Vec<String> {
            if value == "none" {
                vec![]
            } else {
                value.split(", ").map(str::to_string).collect()
            }
        };
        for line in text.lines() {
            let (key, value) = line
                .split_once(": ")
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| format!("bad line '{line}'"))?;
            let value = value.trim();
            match key {
                "user_name" => {
                    wm.user_name = (value != "unknown").then(|| value.to_string());
                }
                "language" => {
                    wm.language = (value != "unknown").then(|| value.to_string());
                }
                "training_level" => {
                    wm.training_level = TrainingLevel::parse(value)
                        .ok_or_else(|| format!("bad training_level '{value}'"))?;
                }
                "training_status" => {
                    wm.training_status = TrainingStatus::parse(value)
                        .ok_or_else(|| format!("bad training_status '{value}'"))?;
                }
                "pending_poses" => wm.pending_poses = parse_list(value),
                "completed_poses" => {
                    for item in parse_list(value) {
                        let (pose, outcome) = item
                            .rsplit_once(" (")
                            .ok_or_else(|| format!("bad completed pose '{item}'"))?;
                        let outcome = outcome
                            .strip_suffix(')')
                            .and_then(Outcome::parse)
                            .ok_or_else(|| format!("bad outcome in '{item}'"))?;
                        wm.completed_poses.push((pose.to_string(), outcome));
                    }
                }
                "objectives" => wm.objectives = parse_list(value),
                other => return Err(format!("unknown key '{other}'")),
            }
        }
        Ok(wm)
    }
}

/// Time source. Interactive sessions use [`SystemClock`]; simulations use a
/// deterministic clock so session records are byte-stable.
pub trait Clock {
    /// Seconds since an arbitrary session-local origin.
    fn now(&self) -> f64;
}

pub struct SystemClock {
    start: std::time::Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self { start: std::time::Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

/// Deterministic clock advancing a fixed step on every reading.
pub struct StepClock {
    t: std::cell::Cell<f64>,
    step: f64,
}

impl StepClock {
    pub fn new(step: f64) -> Self {
        Self { t: std::cell::Cell::new(0.0), step }
    }
}

impl Clock for StepClock {
    fn now(&self) -> f64 {
        let t = self.t.get();
        self.t.set(t + self.step);
        t
    }
}

/// One handled turn, kept for metrics and the session log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub timestamp_s: f64,
    pub input: String,
    pub response: BackendResponse,
    pub stage_before: String,
    pub stage_after: String,
    pub latency_s: f64,
}

#[derive(Clone, Debug)]
pub struct Session {
    pub session_id: String,
    pub current_stage: String,
    pub working_memory: WorkingMemory,
    pub history: Vec<Message>,
    pub turn_log: Vec<TurnRecord>,
}

impl Session {
    pub fn new(session_id: impl Into<String>, initial_stage: impl Into<String>) -> Self {
        Self {
            session_id: session_id.into(),
            current_stage: initial_stage.into(),
            working_memory: WorkingMemory::default(),
            history: Vec::new(),
            turn_log: Vec::new(),
        }
    }

    fn trim(&mut self) {
        self.history = trim_history(&self.history, HISTORY_CAP);
    }
}

/// Last `cap` messages, order preserved.
pub fn trim_history(history: &[Message], cap: usize) -> Vec<Message> {
    let start = history.len().saturating_sub(cap);
    history[start..].to_vec()
}

/// A user utterance or an engine-injected perception event.
#[derive(Clone, Debug, PartialEq)]
pub enum TurnInput {
    User(String),
    Perception(String),
}

impl TurnInput {
    pub fn text(&self) -> &str {
        match self {
            TurnInput::User(t) | TurnInput::Perception(t) => t,
        }
    }
}

/// What the agent decided to do this turn.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentAction {
    pub utterance: Option<String>,
    pub stage_transition: Option<String>,
    pub module_signals: Vec<ModuleSignal>,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("duplicate tool name '{0}'")]
    DuplicateToolName(String),

    #[error("tool '{0}' has an empty stage prompt")]
    EmptyStagePrompt(String),

    #[error("backend invoked unregistered tool '{0}'")]
    UnknownTool(String),

    #[error("toolset file error: {0}")]
    ToolsetFile(String),

    #[error(transparent)]
    WorkingMemory(#[from] WorkingMemoryError),

    #[error("backend failed in session '{session_id}' turn {turn}: {source}")]
    Backend {
        session_id: String,
        turn: usize,
        #[source]
        source: BackendError,
    },
}

/// The agent proper: registry + backend + clock. Sessions are single-owner;
/// one in-flight `handle_input` per session, distinct sessions freely in
/// parallel.
pub struct Agent<'a> {
    registry: &'a ToolRegistry,
    backend: &'a dyn Backend,
    clock: &'a dyn Clock,
    base_prompt: String,
}

impl<'a> Agent<'a> {
    pub fn new(registry: &'a ToolRegistry, backend: &'a dyn Backend, clock: &'a dyn Clock) -> Self {
        Self { registry, backend, clock, base_prompt: BASE_PROMPT.to_string() }
    }

    pub fn with_base_prompt(mut self, prompt: impl Into<String>) -> Self {
        self.base_prompt = prompt.into();
        self
    }

    /// Assemble the prompt bundle for the session's current state. Pure:
    /// identical session state yields an identical bundle.
    pub fn build_prompt(&self, session: &Session) -> PromptBundle {
        let stage_prompt = self
            .registry
            .get(&session.current_stage)
            .map(|s| s.stage_prompt.as_str())
            .unwrap_or("");
        let wm_block = session.working_memory.render_block();
        let mut system_prompt = format!(
            "{}\n\nCurrent stage: {}\n{}\n\nWorking memory:\n{}",
            self.base_prompt, session.current_stage, stage_prompt, wm_block
        );
        if let Some(ctx) = &session.working_memory.retrieved_context {
            system_prompt.push_str(&format!("\n\nRetrieved context:\n{ctx}"));
        }
        PromptBundle {
            system_prompt,
            current_stage: session.current_stage.clone(),
            messages: trim_history(&session.history, HISTORY_CAP),
            tool_specs: self.registry.descriptors(),
            working_memory_block: wm_block,
            retrieved_context_block: session.working_memory.retrieved_context.clone(),
        }
    }

    /// Run one turn: append the input, complete, dispatch any tool call as
    /// a stage transition (installing the stage prompt and collecting entry
    /// actions), append the reply, and record the turn with its latency.
    pub fn handle_input(
        &self,
        session: &mut Session,
        input: &TurnInput,
    ) -> Result<AgentAction, AgentError> {
        let t0 = self.clock.now();
        let message = match input {
            TurnInput::User(text) => Message::user(text.clone()),
            TurnInput::Perception(text) => Message::tool(text.clone()),
        };
        session.history.push(message);
        session.trim();

        let bundle = self.build_prompt(session);
        let response = self.backend.complete(&bundle).map_err(|source| AgentError::Backend {
            session_id: session.session_id.clone(),
            turn: session.turn_log.len(),
            source,
        })?;

        let stage_before = session.current_stage.clone();
        let mut action = AgentAction {
            utterance: response.utterance.clone(),
            stage_transition: None,
            module_signals: Vec::new(),
        };
        if let Some(call) = &response.tool_call {
            let spec = self
                .registry
                .get(&call.name)
                .ok_or_else(|| AgentError::UnknownTool(call.name.clone()))?;
            session.current_stage = spec.name.clone();
            action.stage_transition = Some(spec.name.clone());
            action.module_signals = spec.entry_actions.clone();
        }
        if let Some(utterance) = &response.utterance {
            session.history.push(Message::assistant(utterance.clone()));
            session.trim();
        }

        let t1 = self.clock.now();
        session.turn_log.push(TurnRecord {
            timestamp_s: t0,
            input: input.text().to_string(),
            response,
            stage_before,
            stage_after: session.current_stage.clone(),
            latency_s: t1 - t0,
        });
        Ok(action)
    }
}
