//! Client for chat-completion services and an LLM-backed NER adapter.
//!
//! Nothing else in the workspace needs network access; this crate is only
//! used when a real model is in the loop.

pub mod client;
pub mod ner;

pub use client::{chat, ChatRequest, ChatResponse, Conversation, LlmClient, LlmError, Message, Telemetry, DEFAULT_TOKEN_ENV};
pub use ner::{ner_instruction, ner_via_llm, LlmNer, NerError};
