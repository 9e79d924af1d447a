//! Stateless prompt sanitization.
//!
//! Sensitive tokens in a prompt are either encrypted with format-preserving
//! encryption (exact values that must round-trip) or replaced with a sample
//! from a metric-LDP mechanism (numeric values where approximate answers are
//! acceptable). Nothing is stored between calls: the key, the config and,
//! for names, the original prompt are everything needed to undo a sanitize.

pub mod annotate;
pub mod config;
pub mod fpe;
pub mod key;
pub mod mldp;
pub mod pipeline;
pub mod types;

pub use key::{keygen, KeyError, SanitizerKey};
pub use types::{Category, Prompt, SensitiveType, Span, TypedSequence, TypedToken};
