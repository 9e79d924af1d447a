//! Type annotation: finds sensitive substrings, their types and categories.
//!
//! Recognizers are either regular expressions (a named group `value`, when
//! present, delimits the token inside a wider context match) or calls to an
//! external NER backend. Overlapping candidates are resolved by priority,
//! then leftmost, then longest.

pub mod ner;
pub mod patterns;

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use regex::Regex;
use serde::Deserialize;

use crate::config::{ConfigError, SanitizerConfig, Treatment};
use crate::fpe::FormatSpec;
use crate::pipeline::numeric::parse_number;
use crate::types::{Category, CharOffsets, Prompt, SensitiveType, Span, TypedSequence, TypedToken};

pub use ner::{locate_surfaces, parse_ner_response, NerEntityMap, NerParseError};

#[derive(Debug, thiserror::Error)]
pub enum AnnotateError {
    #[error("NER backend failed for {entity}: {reason}")]
    NerBackend { entity: String, reason: String },
    #[error("invalid recognizer set: {0}")]
    InvalidRecognizers(String),
    #[error("pattern for {ty}: {source}")]
    Pattern {
        ty: String,
        #[source]
        source: regex::Error,
    },
}

/// Entity extraction service, typically an LLM behind a chat API.
pub trait NerBackend: Send + Sync {
    fn extract(&self, text: &str, entity: &SensitiveType) -> Result<NerEntityMap, AnnotateError>;
}

#[derive(Clone, Debug)]
pub enum Strategy {
    Pattern(Regex),
    /// Asks the set's NER backend for this entity label.
    ExternalNer(String),
}

#[derive(Clone, Debug)]
pub struct Recognizer {
    pub ty: SensitiveType,
    pub strategy: Strategy,
    pub priority: i32,
}

impl Recognizer {
    pub fn pattern(ty: SensitiveType, source: &str, priority: i32) -> Result<Self, AnnotateError> {
        let regex = Regex::new(source)
            .map_err(|source| AnnotateError::Pattern { ty: ty.label().to_owned(), source })?;
        Ok(Self { ty, strategy: Strategy::Pattern(regex), priority })
    }

    pub fn external(ty: SensitiveType, priority: i32) -> Self {
        let label = ty.label().to_owned();
        Self { ty, strategy: Strategy::ExternalNer(label), priority }
    }
}

/// What a token must look like to be kept: category I tokens must be
/// encryptable under their format, category II tokens must be numbers.
#[derive(Clone, Debug)]
enum Acceptor {
    Format(FormatSpec),
    Number,
}

impl Acceptor {
    fn accepts(&self, text: &str) -> bool {
        match self {
            Acceptor::Format(f) => f.accepts(text),
            Acceptor::Number => parse_number(text).is_some(),
        }
    }
}

/// An ordered collection of recognizers with unique priorities.
#[derive(Clone)]
pub struct RecognizerSet {
    recognizers: Vec<Recognizer>,
    categories: BTreeMap<SensitiveType, (Category, Acceptor)>,
    ner: Option<Arc<dyn NerBackend>>,
}

impl std::fmt::Debug for RecognizerSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RecognizerSet")
            .field("recognizers", &self.recognizers)
            .field("ner", &self.ner.is_some())
            .finish()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PackFile {
    #[serde(default)]
    recognizer: Vec<PackEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PackEntry {
    #[serde(rename = "type")]
    ty: SensitiveType,
    pattern: String,
    priority: i32,
}

struct Candidate {
    ty: SensitiveType,
    span: Span,
    priority: i32,
}

impl RecognizerSet {
    /// Builds a set for `config`. Recognizers whose type is not registered
    /// are rejected.
    pub fn new(recognizers: Vec<Recognizer>, config: &SanitizerConfig) -> Result<Self, AnnotateError> {
        let mut seen = HashSet::new();
        for r in &recognizers {
            if !seen.insert(r.priority) {
                return Err(AnnotateError::InvalidRecognizers(format!("duplicate priority {}", r.priority)));
            }
            if config.treatment(&r.ty).is_err() {
                return Err(AnnotateError::InvalidRecognizers(format!("type {} is not registered", r.ty)));
            }
        }
        let categories = config
            .registry()
            .iter()
            .map(|(ty, t)| {
                let entry = match t {
                    Treatment::Encrypt { format, .. } => (Category::I, Acceptor::Format(format.clone())),
                    Treatment::Perturb { .. } => (Category::II, Acceptor::Number),
                };
                (ty.clone(), entry)
            })
            .collect();
        Ok(Self { recognizers, categories, ner: None })
    }

    /// The built-in pattern pack, restricted to types `config` registers.
    pub fn builtin(config: &SanitizerConfig) -> Self {
        let recognizers = patterns::builtin_recognizers(config.names())
            .into_iter()
            .filter(|r| config.treatment(&r.ty).is_ok())
            .collect();
        Self::new(recognizers, config).expect("built-in pack is consistent")
    }

    /// Parses a pattern pack:
    ///
    /// ```toml
    /// [[recognizer]]
    /// type = "SSN"
    /// pattern = '\b(?P<value>\d{3}-\d{2}-\d{4})\b'
    /// priority = 90
    /// ```
    pub fn from_pack(text: &str, config: &SanitizerConfig) -> Result<Self, AnnotateError> {
        let pack: PackFile =
            toml::from_str(text).map_err(|e| AnnotateError::InvalidRecognizers(e.to_string()))?;
        let recognizers = pack
            .recognizer
            .into_iter()
            .map(|e| Recognizer::pattern(e.ty, &e.pattern, e.priority))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(recognizers, config)
    }

    /// Adds external-NER recognizers for `types`, below every existing
    /// priority so that patterns win overlaps.
    pub fn with_ner(mut self, backend: Arc<dyn NerBackend>, types: &[SensitiveType]) -> Self {
        let mut next = self.recognizers.iter().map(|r| r.priority).min().unwrap_or(0) - 1;
        for ty in types {
            if self.categories.contains_key(ty) {
                self.recognizers.push(Recognizer::external(ty.clone(), next));
                next -= 1;
            }
        }
        self.ner = Some(backend);
        self
    }

    pub fn recognizers(&self) -> &[Recognizer] {
        &self.recognizers
    }

    pub fn is_empty(&self) -> bool {
        self.recognizers.is_empty()
    }

    pub fn annotate(&self, text: &str) -> Result<TypedSequence, AnnotateError> {
        let offsets = CharOffsets::new(text);
        let mut candidates = Vec::new();
        for r in &self.recognizers {
            match &r.strategy {
                Strategy::Pattern(regex) => {
                    for caps in regex.captures_iter(text) {
                        let m = caps.name("value").or_else(|| caps.get(0)).expect("group 0 exists");
                        if m.is_empty() {
                            continue;
                        }
                        let span = Span::new(offsets.char_of(m.start()), offsets.char_of(m.end()));
                        candidates.push(Candidate { ty: r.ty.clone(), span, priority: r.priority });
                    }
                }
                Strategy::ExternalNer(label) => {
                    let backend = self.ner.as_ref().ok_or_else(|| AnnotateError::NerBackend {
                        entity: label.clone(),
                        reason: "no backend configured".into(),
                    })?;
                    let map = backend.extract(text, &r.ty)?;
                    let surfaces = map.get(label);
                    let (spans, missing) = locate_surfaces(text, surfaces);
                    for m in &missing {
                        log::warn!("NER reported a {label} not present in the text; dropped ({} chars)", m.chars().count());
                    }
                    log::info!("NER {label}: {} reported, {} located", surfaces.len(), spans.len());
                    candidates.extend(spans.into_iter().map(|span| Candidate {
                        ty: r.ty.clone(),
                        span,
                        priority: r.priority,
                    }));
                }
            }
        }
        candidates.retain(|c| {
            let (_, acceptor) = &self.categories[&c.ty];
            acceptor.accepts(offsets.slice(text, c.span))
        });
        candidates.sort_by(|a, b| {
            b.priority
                .cmp(&a.priority)
                .then(a.span.start.cmp(&b.span.start))
                .then(b.span.len().cmp(&a.span.len()))
        });
        let mut chosen: Vec<Candidate> = Vec::new();
        for c in candidates {
            if chosen.iter().all(|k| !k.span.overlaps(&c.span)) {
                chosen.push(c);
            }
        }
        chosen.sort_by_key(|c| c.span.start);
        let tokens = chosen
            .into_iter()
            .map(|c| TypedToken {
                text: offsets.slice(text, c.span).to_owned(),
                category: self.categories[&c.ty].0,
                ty: c.ty,
                span: c.span,
            })
            .collect();
        Ok(TypedSequence::new(text, tokens).expect("resolved candidates are disjoint and sorted"))
    }
}

pub fn annotate(prompt: &Prompt, recognizers: &RecognizerSet) -> Result<TypedSequence, AnnotateError> {
    recognizers.annotate(prompt)
}

pub fn category_of(ty: &SensitiveType, config: &SanitizerConfig) -> Result<Category, ConfigError> {
    config.category_of(ty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::SanitizerKey;

    fn config() -> SanitizerConfig {
        SanitizerConfig::with_key(SanitizerKey::from_bytes(&[1; 32]).unwrap())
    }

    fn types(seq: &TypedSequence) -> Vec<(String, String)> {
        seq.tokens().iter().map(|t| (t.ty.label().to_owned(), t.text.clone())).collect()
    }

    #[test]
    fn finds_ssn() {
        let set = RecognizerSet::builtin(&config());
        let seq = set.annotate("My SSN is 055-46-6168").unwrap();
        assert_eq!(types(&seq), vec![("SSN".into(), "055-46-6168".into())]);
        assert_eq!(seq.tokens()[0].span, Span::new(10, 21));
        assert_eq!(seq.tokens()[0].category, Category::I);
    }

    #[test]
    fn empty_prompt() {
        let seq = RecognizerSet::builtin(&config()).annotate("").unwrap();
        assert!(seq.is_empty());
    }

    #[test]
    fn same_number_two_types() {
        let set = RecognizerSet::builtin(&config());
        let seq = set.annotate("My age is 53 years. I stay at 53 Broadway Street.").unwrap();
        assert_eq!(types(&seq), vec![("Age".into(), "53".into())]);
        assert_eq!(seq.tokens()[0].span, Span::new(10, 12));
        assert_eq!(seq.tokens()[0].category, Category::II);
    }

    #[test]
    fn category_lookup() {
        let cfg = config();
        assert_eq!(category_of(&SensitiveType::Ssn, &cfg).unwrap(), Category::I);
        assert_eq!(category_of(&SensitiveType::Age, &cfg).unwrap(), Category::II);
        assert!(matches!(
            category_of(&SensitiveType::Custom("ProductCode".into()), &cfg),
            Err(ConfigError::UnknownType(_))
        ));
    }

    #[test]
    fn priority_then_leftmost_longest() {
        let cfg = config();
        let set = RecognizerSet::new(
            vec![
                Recognizer::pattern(SensitiveType::Zipcode, r"\d{5}", 1).unwrap(),
                Recognizer::pattern(SensitiveType::Ssn, r"\d{3}-\d{2}-\d{4}", 2).unwrap(),
            ],
            &cfg,
        )
        .unwrap();
        let seq = set.annotate("123-45-67890").unwrap();
        assert_eq!(types(&seq), vec![("SSN".into(), "123-45-6789".into())]);
        let dup = RecognizerSet::new(
            vec![
                Recognizer::pattern(SensitiveType::Zipcode, r"\d{5}", 1).unwrap(),
                Recognizer::pattern(SensitiveType::Ssn, r"\d", 1).unwrap(),
            ],
            &cfg,
        );
        assert!(matches!(dup, Err(AnnotateError::InvalidRecognizers(_))));
    }

    struct Fixed(&'static str);

    impl NerBackend for Fixed {
        fn extract(&self, _text: &str, entity: &SensitiveType) -> Result<NerEntityMap, AnnotateError> {
            parse_ner_response(self.0, entity.label())
                .map_err(|e| AnnotateError::NerBackend { entity: entity.label().into(), reason: e.to_string() })
        }
    }

    #[test]
    fn external_ner_spans() {
        let cfg = config();
        let set = RecognizerSet::builtin(&cfg)
            .with_ner(Arc::new(Fixed("{'Name': ['Kaiser Soze', 'Nobody Here']}")), &[SensitiveType::Name]);
        let seq = set.annotate("Kaiser Soze is 50 years old").unwrap();
        assert_eq!(
            types(&seq),
            vec![("Name".into(), "Kaiser Soze".into()), ("Age".into(), "50".into())]
        );
        let failing = RecognizerSet::builtin(&cfg).with_ner(Arc::new(Fixed("no")), &[SensitiveType::Name]);
        assert!(matches!(failing.annotate("x"), Err(AnnotateError::NerBackend { .. })));
    }

    #[test]
    fn pack_file() {
        let cfg = config();
        let set = RecognizerSet::from_pack(
            "[[recognizer]]\ntype = 'SSN'\npattern = '\\d{3}-\\d{2}-\\d{4}'\npriority = 5\n",
            &cfg,
        )
        .unwrap();
        assert_eq!(set.recognizers().len(), 1);
        assert!(RecognizerSet::from_pack("[[recognizer]]\ntype = 'SSN'\npattern = '('\npriority = 5\n", &cfg).is_err());
    }
}
