//! Agent-memory engine for a conversational physical-training tutor.
//!
//! The engine runs fully offline: every place a language model would sit —
//! dialogue, summary extraction, query translation — is behind the
//! [`llm::Backend`] trait, with deterministic scripted implementations for
//! reproducible runs and an optional HTTP backend for live models.
//!
//! Pipeline overview:
//!
//! ```text
//! llm      — completion backends (scripted, HTTP)
//! agent    — interaction manager: tools as stages, working memory, history
//! trainer  — pose assessment against expert targets, feedback, aggregates
//! dataset  — per-session memory files (raw chat/performance, summary, meta)
//! kg       — structured summary -> per-user knowledge graph -> global merge
//! retrieval— naive-graph / query-translation / RAG strategies + answers
//! sim      — seeded synthetic personas driving full tutor sessions
//! eval     — faithfulness metric, question banks, interaction metrics
//! ```

pub mod agent;
pub mod dataset;
pub mod eval;
pub mod kg;
pub mod llm;
pub mod retrieval;
pub mod scenarios;
pub mod sim;
pub mod trainer;
