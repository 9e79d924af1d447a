//! What a sanitized prompt reveals about its plaintext.
//!
//! Sanitization keeps the non-sensitive text, the type and category of every
//! token, which tokens share a value (equal plaintexts encrypt or are noised
//! identically), and each token's public shape (separators, grouping,
//! decimal places). Two prompts may be compared in the privacy game only
//! when all of this agrees.

use psan_core::config::Treatment;
use psan_core::pipeline::{parse_number, SanitizeError, Sanitizer};
use psan_core::types::Segment;
use psan_core::{Category, SensitiveType, TypedSequence};
use serde::Serialize;

pub const BLANK: &str = "[ ]";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LeakageDescriptor {
    /// The prompt with every sensitive token replaced by `[ ]`.
    pub skeleton: String,
    pub types: Vec<SensitiveType>,
    pub categories: Vec<Category>,
    /// For each token, the index of the first token with the same type and value.
    pub equal_to: Vec<usize>,
    pub shapes: Vec<String>,
}

fn value_key(token: &psan_core::TypedToken) -> String {
    match token.category {
        Category::II => parse_number(&token.text).map(|(v, _)| v.normalize().to_string()).unwrap_or_default(),
        Category::I => token.text.clone(),
    }
}

fn shape(sanitizer: &Sanitizer, token: &psan_core::TypedToken) -> Result<String, SanitizeError> {
    Ok(match sanitizer.config().treatment(&token.ty)? {
        Treatment::Encrypt { format, .. } => format.shape(&token.text),
        Treatment::Perturb { .. } => match parse_number(&token.text) {
            Some((_, style)) => format!("group={:?} decimals={:?}", style.group, style.fraction_digits),
            None => "?".into(),
        },
    })
}

pub fn describe(seq: &TypedSequence, sanitizer: &Sanitizer) -> Result<LeakageDescriptor, SanitizeError> {
    let skeleton = seq
        .segments()
        .into_iter()
        .map(|s| match s {
            Segment::Plain(text) => text,
            Segment::Sensitive(_) => BLANK,
        })
        .collect();
    let tokens = seq.tokens();
    let keys: Vec<(SensitiveType, String)> = tokens.iter().map(|t| (t.ty.clone(), value_key(t))).collect();
    let equal_to = (0..tokens.len()).map(|i| keys.iter().position(|k| *k == keys[i]).unwrap_or(i)).collect();
    Ok(LeakageDescriptor {
        skeleton,
        types: tokens.iter().map(|t| t.ty.clone()).collect(),
        categories: tokens.iter().map(|t| t.category).collect(),
        equal_to,
        shapes: tokens.iter().map(|t| shape(sanitizer, t)).collect::<Result<_, _>>()?,
    })
}

/// Leakage of `prompt` under `sanitizer`'s recognizers and formats.
pub fn leakage(prompt: &str, sanitizer: &Sanitizer) -> Result<LeakageDescriptor, SanitizeError> {
    describe(&sanitizer.annotate(prompt)?, sanitizer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use psan_core::config::SanitizerConfig;
    use psan_core::SanitizerKey;

    fn sanitizer() -> Sanitizer {
        Sanitizer::with_builtin_patterns(SanitizerConfig::with_key(SanitizerKey::from_bytes(&[1; 32]).unwrap()))
    }

    #[test]
    fn redacts_age() {
        let l = leakage("My age is 26", &sanitizer()).unwrap();
        assert_eq!(l.skeleton, "My age is [ ]");
        assert_eq!(l.types, vec![SensitiveType::Age]);
        assert_eq!(l.categories, vec![Category::II]);
    }

    #[test]
    fn differing_values_share_leakage() {
        let s = sanitizer();
        assert_eq!(leakage("My age is 26", &s).unwrap(), leakage("My age is 71", &s).unwrap());
        assert_eq!(leakage("SSN 055-46-6168", &s).unwrap(), leakage("SSN 123-45-6789", &s).unwrap());
    }

    #[test]
    fn structure_differences_leak() {
        let s = sanitizer();
        assert_ne!(leakage("My age is 26", &s).unwrap(), leakage("My age is 26, my age is 30", &s).unwrap());
        assert_ne!(
            leakage("SSN 055-46-6168 and 055-46-6168", &s).unwrap(),
            leakage("SSN 055-46-6168 and 123-45-6789", &s).unwrap()
        );
        assert_ne!(leakage("call (415) 555-0134", &s).unwrap(), leakage("call 415.555.0134", &s).unwrap());
        assert_ne!(leakage("pay $5,000", &s).unwrap(), leakage("pay $5000", &s).unwrap());
    }
}
