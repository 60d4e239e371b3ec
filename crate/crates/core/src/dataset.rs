//! Per-session interaction memories: the structured three-section summary
//! and the five files written for every session.
//!
//! Directory layout: `<data_root>/<user_id>/<session_id>/` containing
//! `Raw_Chat.txt`, `Raw_Performance.csv`, `Summary.txt`,
//! `Meta_Performance.csv` and `session.log`. CSVs are comma-separated with
//! a header row, UTF-8, LF endings. Files are written atomically
//! (write-then-rename), so re-running a session overwrites cleanly.
//!
//! Summary concrete syntax: three `# `-prefixed section headings, `key:
//! value` entries, comma-separated lists with a literal `none` marking an
//! empty list or empty free text. `parse_summary(render_summary(s)) == s`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Outcome, TrainingLevel, TurnRecord, WorkingMemory};
use crate::llm::{Backend, BackendError, Message, PromptBundle};
use crate::trainer::{MetaPerformanceRecord, PoseFrame, PoseOutcome, JOINT_NAMES};

pub const RAW_CHAT_FILE: &str = "Raw_Chat.txt";
pub const RAW_PERFORMANCE_FILE: &str = "Raw_Performance.csv";
pub const SUMMARY_FILE: &str = "Summary.txt";
pub const META_PERFORMANCE_FILE: &str = "Meta_Performance.csv";
pub const LOG_FILE: &str = "session.log";

pub const SESSION_FILES: [&str; 5] = [
    RAW_CHAT_FILE,
    RAW_PERFORMANCE_FILE,
    SUMMARY_FILE,
    META_PERFORMANCE_FILE,
    LOG_FILE,
];

const SECTION_GENERAL: &str = "General information";
const SECTION_INTERESTS: &str = "Insights about user interests and activities";
const SECTION_TRAINING: &str = "Key aspects related to the user's training";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("summary format error at line {line}: {message}")]
    SummaryFormat { line: usize, message: String },

    #[error("summary invariant violated: {0}")]
    InvalidSummary(String),

    #[error("extraction reply unparseable after repair retry: {0}")]
    ExtractionUnparseable(String),

    #[error("backend error: {0}")]
    Backend(#[from] BackendError),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkillLevel {
    Beginner,
    Intermediate,
    Advanced,
}

impl SkillLevel {
    pub fn as_str(&self) -> &'static str {
        match self {
            SkillLevel::Beginner => "beginner",
            SkillLevel::Intermediate => "intermediate",
            SkillLevel::Advanced => "advanced",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "beginner" => Some(Self::Beginner),
            "intermediate" => Some(Self::Intermediate),
            "advanced" => Some(Self::Advanced),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SportActivity {
    pub name: String,
    pub frequency_per_week: u32,
    pub level: SkillLevel,
}

impl fmt::Display for SportActivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}/week, {})", self.name, self.frequency_per_week, self.level.as_str())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneralInformation {
    pub user_name: String,
    pub language: String,
    pub training_level: TrainingLevel,
    pub completed_poses: Vec<String>,
    pub failed_poses: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InterestsAndActivities {
    pub hobbies: Vec<String>,
    pub current_sports: Vec<SportActivity>,
    pub past_sports: Vec<String>,
    pub yoga_experience: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingKeyAspects {
    pub challenges: Vec<String>,
    pub feedback: String,
    pub notes: Vec<String>,
}

/// The structured three-section summary that seeds the knowledge graph.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StructuredSummary {
    pub general: GeneralInformation,
    pub interests: InterestsAndActivities,
    pub training: TrainingKeyAspects,
}

impl StructuredSummary {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.general.user_name.is_empty() {
            return Err(DatasetError::InvalidSummary("empty user_name".into()));
        }
        for pose in &self.general.completed_poses {
            if self.general.failed_poses.contains(pose) {
                return Err(DatasetError::InvalidSummary(format!(
                    "pose '{pose}' listed as both completed and failed"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    Robot,
}

impl Speaker {
    pub fn as_str(&self) -> &'static str {
        match self {
            Speaker::User => "user",
            Speaker::Robot => "robot",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub timestamp_s: f64,
    pub speaker: Speaker,
    pub text: String,
}

/// Frames of one pose attempt together with the per-frame joint errors
/// computed against the target, so the raw performance file needs no pose
/// specs at write time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseAttempt {
    pub pose: String,
    pub frames: Vec<PoseFrame>,
    pub frame_errors: Vec<Vec<f64>>,
}

/// Everything one session leaves behind.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionRecord {
    pub user_id: String,
    pub session_id: String,
    pub transcript: Vec<TranscriptLine>,
    pub attempts: Vec<PoseAttempt>,
    pub outcomes: Vec<PoseOutcome>,
    pub working_memory_final: WorkingMemory,
    pub turn_log: Vec<TurnRecord>,
    /// Expected tool invocation per turn for scripted scenarios
    /// (None = no transition expected that turn).
    pub expected_transitions: Option<Vec<Option<String>>>,
    /// Chronological module signals, for the session log.
    pub module_signals: Vec<String>,
    /// Module-failure flags; non-empty flags mark an architecture failure.
    pub failure_flags: Vec<String>,
}

impl SessionRecord {
    pub fn new(user_id: impl Into<String>, session_id: impl Into<String>) -> Self {
        Self {
            user_id: user_id.into(),
            session_id: session_id.into(),
            transcript: Vec::new(),
            attempts: Vec::new(),
            outcomes: Vec::new(),
            working_memory_final: WorkingMemory::default(),
            turn_log: Vec::new(),
            expected_transitions: None,
            module_signals: Vec::new(),
            failure_flags: Vec::new(),
        }
    }
}

pub fn render_transcript(record: &SessionRecord) -> String {
    let mut out = String::new();
    for line in &record.transcript {
        out.push_str(&format!(
            "[{:.1}s] {}: {}\n",
            line.timestamp_s,
            line.speaker.as_str(),
            line.text
        ));
    }
    out
}

/// System prompt for the summary-extraction call. The reply must be exactly
/// the two conversational sections in the documented summary syntax.
pub const EXTRACTION_PROMPT: &str = "Read the training-session transcript and produce exactly \
two sections in this format, nothing else:\n\n\
# Insights about user interests and activities\n\
hobbies: <comma-separated or none>\n\
current_sports: <sport (N/week, level), ... or none>\n\
past_sports: <comma-separated or none>\n\
yoga_experience: <free text or none>\n\n\
# Key aspects related to the user's training\n\
challenges: <comma-separated or none>\n\
feedback: <free text or none>\n\
notes: <key: value pairs, comma-separated, or none>";

/// Build the summary for a session: general information comes straight from
/// the final working memory (no model call), the two conversational
/// sections come from one backend extraction with a single repair retry.
pub fn generate_summary(
    record: &SessionRecord,
    backend: &dyn Backend,
) -> Result<StructuredSummary, DatasetError> {
    let wm = &record.working_memory_final;
    let general = GeneralInformation {
        user_name: wm.user_name.clone().unwrap_or_else(|| "unknown".to_string()),
        language: wm.language.clone().unwrap_or_else(|| "unknown".to_string()),
        training_level: wm.training_level,
        completed_poses: wm.poses_with(Outcome::Completed),
        failed_poses: wm.poses_with(Outcome::Failed),
    };

    let transcript = render_transcript(record);
    let mut bundle = PromptBundle {
        system_prompt: EXTRACTION_PROMPT.to_string(),
        current_stage: "summarize".to_string(),
        messages: vec![Message::user(transcript)],
        tool_specs: vec![],
        working_memory_block: wm.render_block(),
        retrieved_context_block: None,
    };

    let reply = backend.complete(&bundle)?;
    let text = reply.utterance.clone().unwrap_or_default();
    let sections = match parse_sections(&text) {
        Ok(sections) => sections,
        Err(first_err) => {
            // one repair retry with an explicit format reminder
            bundle.messages.push(Message::assistant(text));
            bundle.messages.push(Message::user(
                "That did not match the required format. Reply with exactly the two sections.",
            ));
            let retry = backend.complete(&bundle)?;
            let retry_text = retry.utterance.unwrap_or_default();
            parse_sections(&retry_text)
                .map_err(|_| DatasetError::ExtractionUnparseable(first_err.to_string()))?
        }
    };

    let summary = StructuredSummary { general, interests: sections.0, training: sections.1 };
    summary.validate()?;
    Ok(summary)
}

fn render_list(items: &[String]) -> String {
    if items.is_empty() { "none".to_string() } else { items.join(", ") }
}

fn render_text(text: &str) -> &str {
    if text.is_empty() { "none" } else { text }
}

pub fn render_summary(summary: &StructuredSummary) -> String {
    let g = &summary.general;
    let i = &summary.interests;
    let t = &summary.training;
    let sports: Vec<String> = i.current_sports.iter().map(SportActivity::to_string).collect();
    format!(
        "# {SECTION_GENERAL}\nuser_name: {}\nlanguage: {}\ntraining_level: {}\n\
         completed_poses: {}\nfailed_poses: {}\n\n\
         # {SECTION_INTERESTS}\nhobbies: {}\ncurrent_sports: {}\npast_sports: {}\n\
         yoga_experience: {}\n\n\
         # {SECTION_TRAINING}\nchallenges: {}\nfeedback: {}\nnotes: {}\n",
        g.user_name,
        g.language,
        g.training_level.as_str(),
        render_list(&g.completed_poses),
        render_list(&g.failed_poses),
        render_list(&i.hobbies),
        render_list(&sports),
        render_list(&i.past_sports),
        render_text(&i.yoga_experience),
        render_list(&t.challenges),
        render_text(&t.feedback),
        render_list(&t.notes),
    )
}

struct LineParser<'a> {
    lines: Vec<(usize, &'a str)>,
    cursor: usize,
}

impl<'a> LineParser<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end()))
            .filter(|(_, l)| !l.trim().is_empty())
            .collect();
        Self { lines, cursor: 0 }
    }

    fn current_line_number(&self) -> usize {
        self.lines.get(self.cursor).map(|(n, _)| *n).unwrap_or_else(|| {
            self.lines.last().map(|(n, _)| n + 1).unwrap_or(1)
        })
    }

    fn error(&self, message: impl Into<String>) -> DatasetError {
        DatasetError::SummaryFormat { line: self.current_line_number(), message: message.into() }
    }

    fn expect_header(&mut self, header: &str) -> Result<(), DatasetError> {
        match self.lines.get(self.cursor) {
            Some((_, line)) if line.trim() == format!("# {header}") => {
                self.cursor += 1;
                Ok(())
            }
            Some((_, line)) => Err(self.error(format!("expected header '# {header}', found '{line}'"))),
            None => Err(self.error(format!("missing header '# {header}'"))),
        }
    }

    fn expect_value(&mut self, key: &str) -> Result<String, DatasetError> {
        match self.lines.get(self.cursor) {
            Some((_, line)) => {
                let (k, v) = line
                    .split_once(':')
                    .ok_or_else(|| self.error(format!("expected '{key}: ...', found '{line}'")))?;
                if k.trim() != key {
                    return Err(self.error(format!("expected key '{key}', found '{}'", k.trim())));
                }
                self.cursor += 1;
                Ok(v.trim().to_string())
            }
            None => Err(self.error(format!("missing '{key}' entry"))),
        }
    }

    fn expect_list(&mut self, key: &str) -> Result<Vec<String>, DatasetError> {
        let value = self.expect_value(key)?;
        Ok(parse_list(&value))
    }

    fn expect_text(&mut self, key: &str) -> Result<String, DatasetError> {
        let value = self.expect_value(key)?;
        Ok(if value == "none" { String::new() } else { value })
    }

    fn at_end(&self) -> bool {
        self.cursor == self.lines.len()
    }
}

fn parse_list(value: &str) -> Vec<String> {
    if value == "none" || value.is_empty() {
        vec![]
    } else {
        value.split(", ").map(str::to_string).collect()
    }
}

fn parse_sport(item: &str, line: usize) -> Result<SportActivity, DatasetError> {
    let bad = |message: String| DatasetError::SummaryFormat { line, message };
    let (name, rest) = item
        .split_once(" (")
        .ok_or_else(|| bad(format!("bad sport entry '{item}'")))?;
    let rest = rest
        .strip_suffix(')')
        .ok_or_else(|| bad(format!("unterminated sport entry '{item}'")))?;
    let (freq, level) = rest
        .split_once(", ")
        .ok_or_else(|| bad(format!("bad sport details '{rest}'")))?;
    let frequency_per_week = freq
        .strip_suffix("/week")
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| bad(format!("bad sport frequency '{freq}'")))?;
    let level =
        SkillLevel::parse(level).ok_or_else(|| bad(format!("bad sport level '{level}'")))?;
    Ok(SportActivity { name: name.to_string(), frequency_per_week, level })
}

fn parse_interests_section(
    parser: &mut LineParser<'_>,
) -> Result<InterestsAndActivities, DatasetError> {
    parser.expect_header(SECTION_INTERESTS)?;
    let hobbies = parser.expect_list("hobbies")?;
    let sport_line = parser.current_line_number().saturating_sub(0);
    let sports_raw = parser.expect_list("current_sports")?;
    let current_sports = sports_raw
        .iter()
        .map(|item| parse_sport(item, sport_line))
        .collect::<Result<Vec<_>, _>>()?;
    let past_sports = parser.expect_list("past_sports")?;
    let yoga_experience = parser.expect_text("yoga_experience")?;
    Ok(InterestsAndActivities { hobbies, current_sports, past_sports, yoga_experience })
}

fn parse_training_section(parser: &mut LineParser<'_>) -> Result<TrainingKeyAspects, DatasetError> {
    parser.expect_header(SECTION_TRAINING)?;
    let challenges = parser.expect_list("challenges")?;
    let feedback = parser.expect_text("feedback")?;
    let notes = parser.expect_list("notes")?;
    Ok(TrainingKeyAspects { challenges, feedback, notes })
}

/// Parse the two conversational sections (the shape of an extraction
/// reply).
pub fn parse_sections(
    text: &str,
) -> Result<(InterestsAndActivities, TrainingKeyAspects), DatasetError> {
    let mut parser = LineParser::new(text);
    let interests = parse_interests_section(&mut parser)?;
    let training = parse_training_section(&mut parser)?;
    if !parser.at_end() {
        return Err(parser.error("trailing content after sections"));
    }
    Ok((interests, training))
}

/// Parse a complete `Summary.txt`.
pub fn parse_summary(text: &str) -> Result<StructuredSummary, DatasetError> {
    let mut parser = LineParser::new(text);
    parser.expect_header(SECTION_GENERAL)?;
    let user_name = parser.expect_value("user_name")?;
    let language = parser.expect_value("language")?;
    let level_raw = parser.expect_value("training_level")?;
    let training_level = TrainingLevel::parse(&level_raw).ok_or_else(|| {
        DatasetError::SummaryFormat {
            line: parser.current_line_number().saturating_sub(1),
            message: format!("bad training_level '{level_raw}'"),
        }
    })?;
    let completed_poses = parser.expect_list("completed_poses")?;
    let failed_poses = parser.expect_list("failed_poses")?;
    let general = GeneralInformation {
        user_name,
        language,
        training_level,
        completed_poses,
        failed_poses,
    };
    let interests = parse_interests_section(&mut parser)?;
    let training = parse_training_section(&mut parser)?;
    if !parser.at_end() {
        return Err(parser.error("trailing content after sections"));
    }
    let summary = StructuredSummary { general, interests, training };
    summary.validate()?;
    Ok(summary)
}

fn atomic_write(path: &Path, contents: &str) -> Result<(), DatasetError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn raw_performance_csv(record: &SessionRecord) -> Result<String, DatasetError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["timestamp_s".to_string(), "pose".to_string()];
    header.extend(JOINT_NAMES.iter().map(|j| format!("{j}_deg")));
    header.extend(JOINT_NAMES.iter().map(|j| format!("{j}_err_deg")));
    writer.write_record(&header)?;
    for attempt in &record.attempts {
        for (frame, errors) in attempt.frames.iter().zip(&attempt.frame_errors) {
            let mut row = vec![frame.timestamp_s.to_string(), attempt.pose.clone()];
            row.extend(frame.detected_angles.iter().map(f64::to_string));
            row.extend(errors.iter().map(f64::to_string));
            writer.write_record(&row)?;
        }
    }
    Ok(String::from_utf8(writer.into_inner().expect("vec writer")).expect("utf-8"))
}

fn meta_performance_csv(meta: &[MetaPerformanceRecord]) -> Result<String, DatasetError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record([
        "pose",
        "attempts",
        "avg_joint_error_deg",
        "critical_joint",
        "hold_duration_s",
        "pose_complete",
    ])?;
    for row in meta {
        writer.write_record([
            row.pose.clone(),
            row.attempts.to_string(),
            row.avg_joint_error_deg.to_string(),
            row.critical_joint.clone(),
            row.hold_duration_s.to_string(),
            row.pose_complete.to_string(),
        ])?;
    }
    Ok(String::from_utf8(writer.into_inner().expect("vec writer")).expect("utf-8"))
}

fn session_log(record: &SessionRecord) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "session {} user {} turns {}\n",
        record.session_id,
        record.user_id,
        record.turn_log.len()
    ));
    for (i, turn) in record.turn_log.iter().enumerate() {
        let tool = turn
            .response
            .tool_call
            .as_ref()
            .map(|c| c.name.as_str())
            .unwrap_or("-");
        out.push_str(&format!(
            "turn {i} t={:.3}s stage {}->{} tool={} latency={:.3}s input={}\n",
            turn.timestamp_s, turn.stage_before, turn.stage_after, tool, turn.latency_s, turn.input
        ));
    }
    for signal in &record.module_signals {
        out.push_str(&format!("signal {signal}\n"));
    }
    for flag in &record.failure_flags {
        out.push_str(&format!("failure {flag}\n"));
    }
    out
}

/// Write the five session files into `dir` (created if needed).
pub fn write_session_files(
    record: &SessionRecord,
    summary: &StructuredSummary,
    meta: &[MetaPerformanceRecord],
    dir: &Path,
) -> Result<Vec<PathBuf>, DatasetError> {
    fs::create_dir_all(dir)?;
    let files = [
        (RAW_CHAT_FILE, render_transcript(record)),
        (RAW_PERFORMANCE_FILE, raw_performance_csv(record)?),
        (SUMMARY_FILE, render_summary(summary)),
        (META_PERFORMANCE_FILE, meta_performance_csv(meta)?),
        (LOG_FILE, session_log(record)),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = dir.join(name);
        atomic_write(&path, &contents)?;
        written.push(path);
    }
    Ok(written)
}

/// Session directory for a record under a data root.
pub fn session_dir(data_root: &Path, record: &SessionRecord) -> PathBuf {
    data_root.join(&record.user_id).join(&record.session_id)
}

pub fn load_summary(path: &Path) -> Result<StructuredSummary, DatasetError> {
    parse_summary(&fs::read_to_string(path)?)
}

pub fn load_meta(path: &Path) -> Result<Vec<MetaPerformanceRecord>, DatasetError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for result in reader.records() {
        let row = result?;
        let field = |i: usize| row.get(i).unwrap_or("").to_string();
        rows.push(MetaPerformanceRecord {
            pose: field(0),
            attempts: field(1).parse().unwrap_or(0),
            avg_joint_error_deg: field(2).parse().unwrap_or(0.0),
            critical_joint: field(3),
            hold_duration_s: field(4).parse().unwrap_or(0.0),
            pose_complete: field(5) == "true",
        });
    }
    Ok(rows)
}

/// All `(user_id, session_dir)` pairs under a data root, sorted.
pub fn list_session_dirs(data_root: &Path) -> Result<Vec<(String, PathBuf)>, DatasetError> {
    let mut out = Vec::new();
    for user_entry in fs::read_dir(data_root)? {
        let user_entry = user_entry?;
        if !user_entry.file_type()?.is_dir() {
            continue;
        }
        let user_id = user_entry.file_name().to_string_lossy().into_owned();
        for session_entry in fs::read_dir(user_entry.path())? {
            let session_entry = session_entry?;
            if session_entry.file_type()?.is_dir() {
                out.push((user_id.clone(), session_entry.path()));
            }
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{BackendResponse, ScriptedBackend, Trigger, TurnRule};
    use crate::trainer::JOINT_COUNT;
    use proptest::prelude::*;

    pub(crate) fn fixture_summary() -> StructuredSummary {
        StructuredSummary {
            general: GeneralInformation {
                user_name: "Anna".into(),
                language: "en".into(),
                training_level: TrainingLevel::Beginner,
                completed_poses: vec!["tree".into()],
                failed_poses: vec!["warrior".into()],
            },
            interests: InterestsAndActivities {
                hobbies: vec!["reading".into(), "chess".into()],
                current_sports: vec![SportActivity {
                    name: "running".into(),
                    frequency_per_week: 3,
                    level: SkillLevel::Intermediate,
                }],
                past_sports: vec!["tennis".into()],
                yoga_experience: "tried a few classes last year".into(),
            },
            training: TrainingKeyAspects {
                challenges: vec!["struggled with the warrior".into()],
                feedback: "i enjoyed the session".into(),
                notes: vec!["profession: teacher".into()],
            },
        }
    }

    fn minimal_record() -> SessionRecord {
        let mut record = SessionRecord::new("anna", "s001");
        record.transcript.push(TranscriptLine {
            timestamp_s: 0.0,
            speaker: Speaker::User,
            text: "hello, my name is Anna.".into(),
        });
        record.transcript.push(TranscriptLine {
            timestamp_s: 1.0,
            speaker: Speaker::Robot,
            text: "nice to meet you!".into(),
        });
        record.working_memory_final.user_name = Some("Anna".into());
        record.working_memory_final.language = Some("en".into());
        record.working_memory_final.assign_poses(["tree", "warrior"]);
        record
            .working_memory_final
            .apply(&crate::agent::Observation::PoseOutcome {
                pose: "tree".into(),
                outcome: Outcome::Completed,
            })
            .unwrap();
        record
            .working_memory_final
            .apply(&crate::agent::Observation::PoseOutcome {
                pose: "warrior".into(),
                outcome: Outcome::Failed,
            })
            .unwrap();
        record
    }

    #[test]
    fn summary_round_trips_exactly() {
        let summary = fixture_summary();
        let text = render_summary(&summary);
        let parsed = parse_summary(&text).unwrap();
        assert_eq!(parsed, summary);
    }

    #[test]
    fn empty_lists_render_none_and_round_trip() {
        let mut summary = fixture_summary();
        summary.interests.hobbies.clear();
        summary.interests.yoga_experience.clear();
        summary.training.notes.clear();
        let text = render_summary(&summary);
        assert!(text.contains("hobbies: none"));
        assert_eq!(parse_summary(&text).unwrap(), summary);
    }

    #[test]
    fn missing_general_header_is_format_error() {
        let text = render_summary(&fixture_summary());
        let broken = text.replace("# General information", "# Background");
        match parse_summary(&broken) {
            Err(DatasetError::SummaryFormat { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn pose_in_both_lists_is_invalid() {
        let mut summary = fixture_summary();
        summary.general.failed_poses.push("tree".into());
        assert!(matches!(
            parse_summary(&render_summary(&summary)),
            Err(DatasetError::InvalidSummary(_))
        ));
    }

    #[test]
    fn general_information_mirrors_working_memory() {
        let record = minimal_record();
        let sections = "# Insights about user interests and activities\nhobbies: none\n\
                        current_sports: none\npast_sports: none\nyoga_experience: none\n\n\
                        # Key aspects related to the user's training\nchallenges: none\n\
                        feedback: none\nnotes: none";
        let backend = ScriptedBackend::new(
            vec![TurnRule::new(Trigger::any(), BackendResponse::say(sections))],
            &[] as &[&str],
        )
        .unwrap();
        let summary = generate_summary(&record, &backend).unwrap();
        assert_eq!(summary.general.user_name, "Anna");
        assert_eq!(summary.general.completed_poses, vec!["tree".to_string()]);
        assert_eq!(summary.general.failed_poses, vec!["warrior".to_string()]);
    }

    #[test]
    fn scripted_fixture_sections_produce_exact_summary() {
        let record = minimal_record();
        let fixture = fixture_summary();
        let full = render_summary(&fixture);
        // strip the general section; the reply carries only the two
        // conversational sections
        let sections = full.split_once("# Insights").map(|(_, rest)| format!("# Insights{rest}")).unwrap();
        let backend = ScriptedBackend::new(
            vec![TurnRule::new(Trigger::any(), BackendResponse::say(sections))],
            &[] as &[&str],
        )
        .unwrap();
        let summary = generate_summary(&record, &backend).unwrap();
        assert_eq!(summary.interests, fixture.interests);
        assert_eq!(summary.training, fixture.training);
    }

    #[test]
    fn free_prose_reply_is_unparseable_after_retry() {
        let record = minimal_record();
        let backend = ScriptedBackend::new(
            vec![TurnRule::new(
                Trigger::any(),
                BackendResponse::say("Anna had a lovely time doing yoga."),
            )],
            &[] as &[&str],
        )
        .unwrap();
        assert!(matches!(
            generate_summary(&record, &backend),
            Err(DatasetError::ExtractionUnparseable(_))
        ));
    }

    #[test]
    fn repair_retry_can_recover() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let record = minimal_record();
        let calls = AtomicUsize::new(0);
        let good = "# Insights about user interests and activities\nhobbies: chess\n\
                    current_sports: none\npast_sports: none\nyoga_experience: none\n\n\
                    # Key aspects related to the user's training\nchallenges: none\n\
                    feedback: none\nnotes: none";
        let backend = crate::llm::FnBackend(move |_: &PromptBundle| {
            if calls.fetch_add(1, Ordering::SeqCst) == 0 {
                Ok(BackendResponse::say("oops, free prose"))
            } else {
                Ok(BackendResponse::say(good))
            }
        });
        let summary = generate_summary(&record, &backend).unwrap();
        assert_eq!(summary.interests.hobbies, vec!["chess".to_string()]);
    }

    #[test]
    fn writes_exactly_five_files_with_expected_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut record = minimal_record();
        let spec = crate::trainer::PoseSpec::new("tree", vec![90.0; JOINT_COUNT], 5.0).unwrap();
        let frames: Vec<PoseFrame> =
            (0..3).map(|i| PoseFrame::new(i as f64, vec![90.0; JOINT_COUNT])).collect();
        let frame_errors: Vec<Vec<f64>> = frames
            .iter()
            .map(|f| crate::trainer::frame_error(f, &spec).unwrap())
            .collect();
        let outcome = crate::trainer::assess_pose(&frames, &spec, 15.0).unwrap();
        record.attempts.push(PoseAttempt { pose: "tree".into(), frames, frame_errors });
        record.outcomes.push(outcome);

        let meta = crate::trainer::aggregate_meta(&record.outcomes);
        let summary = fixture_summary();
        let out = session_dir(dir.path(), &record);
        let written = write_session_files(&record, &summary, &meta, &out).unwrap();
        assert_eq!(written.len(), 5);
        for name in SESSION_FILES {
            assert!(out.join(name).exists(), "missing {name}");
        }
        let raw = fs::read_to_string(out.join(RAW_PERFORMANCE_FILE)).unwrap();
        assert_eq!(raw.lines().count(), 1 + 3, "header plus one row per frame");
        assert_eq!(raw.lines().next().unwrap().split(',').count(), 2 + 17 + 17);

        // byte-stable rewrite
        let before: Vec<String> = SESSION_FILES
            .iter()
            .map(|n| fs::read_to_string(out.join(n)).unwrap())
            .collect();
        write_session_files(&record, &summary, &meta, &out).unwrap();
        let after: Vec<String> = SESSION_FILES
            .iter()
            .map(|n| fs::read_to_string(out.join(n)).unwrap())
            .collect();
        assert_eq!(before, after);
    }

    #[test]
    fn empty_outcomes_meta_csv_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let record = minimal_record();
        let summary = fixture_summary();
        let out = session_dir(dir.path(), &record);
        write_session_files(&record, &summary, &[], &out).unwrap();
        let meta = fs::read_to_string(out.join(META_PERFORMANCE_FILE)).unwrap();
        assert_eq!(meta.lines().count(), 1);
    }

    #[test]
    fn meta_csv_round_trips_through_loader() {
        let dir = tempfile::tempdir().unwrap();
        let record = minimal_record();
        let meta = vec![MetaPerformanceRecord {
            pose: "tree".into(),
            attempts: 2,
            avg_joint_error_deg: 12.5,
            critical_joint: "left_knee".into(),
            hold_duration_s: 6.0,
            pose_complete: true,
        }];
        let out = session_dir(dir.path(), &record);
        write_session_files(&record, &fixture_summary(), &meta, &out).unwrap();
        let loaded = load_meta(&out.join(META_PERFORMANCE_FILE)).unwrap();
        assert_eq!(loaded, meta);
    }

    prop_compose! {
        fn word()(s in "[a-z]{2,8}") -> String { s }
    }

    prop_compose! {
        fn words(max: usize)(v in proptest::collection::vec(word(), 0..max)) -> Vec<String> {
            let mut v = v;
            v.sort();
            v.dedup();
            v
        }
    }

    prop_compose! {
        fn sport()(name in word(), freq in 1u32..9, level in 0usize..3) -> SportActivity {
            SportActivity {
                name,
                frequency_per_week: freq,
                level: [SkillLevel::Beginner, SkillLevel::Intermediate, SkillLevel::Advanced][level],
            }
        }
    }

    proptest! {
        /// Round-trip identity over randomized summaries.
        #[test]
        fn summary_round_trip_property(
            name in "[A-Z][a-z]{2,8}",
            language in "[a-z]{2}",
            level in 0usize..4,
            completed in words(3),
            hobbies in words(3),
            sports in proptest::collection::vec(sport(), 0..3),
            past in words(2),
            yoga in proptest::option::of(word()),
            challenges in words(2),
            feedback in proptest::option::of(word()),
            notes_vals in words(2),
        ) {
            let failed: Vec<String> =
                completed.iter().filter(|p| p.len() % 2 == 0).map(|p| format!("{p}x")).collect();
            let summary = StructuredSummary {
                general: GeneralInformation {
                    user_name: name,
                    language,
                    training_level: [
                        TrainingLevel::Beginner,
                        TrainingLevel::Intermediate,
                        TrainingLevel::Advanced,
                        TrainingLevel::Unknown,
                    ][level],
                    completed_poses: completed,
                    failed_poses: failed,
                },
                interests: InterestsAndActivities {
                    hobbies,
                    current_sports: sports,
                    past_sports: past,
                    yoga_experience: yoga.unwrap_or_default(),
                },
                training: TrainingKeyAspects {
                    challenges,
                    feedback: feedback.unwrap_or_default(),
                    notes: notes_vals.into_iter().map(|v| format!("topic: {v}")).collect(),
                },
            };
            let parsed = parse_summary(&render_summary(&summary)).unwrap();
            prop_assert_eq!(parsed, summary);
        }
    }
}
