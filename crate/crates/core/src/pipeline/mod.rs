//! Sanitization and desanitization of whole prompts.
//!
//! Sanitizing annotates the prompt, plans the helper string, encrypts
//! category I tokens, perturbs category II roots with `ε / t` each, and
//! derives every remaining category II token from the perturbed roots.
//! Desanitizing decrypts category I tokens found in a response. Both are
//! pure functions of the key, the config and their inputs.

pub mod numeric;
pub mod psi;
pub mod report;

use std::collections::HashSet;

use rand::Rng;
use rust_decimal::prelude::*;

use crate::annotate::{AnnotateError, RecognizerSet};
use crate::config::{ConfigError, SanitizerConfig, Treatment};
use crate::fpe::{FpeCipher, FpeError, NameContext, Tweak};
use crate::mldp::{self, IntegerDomain, MldpError};
use crate::types::{Category, SensitiveType, Span, TypedSequence, TypedToken};

pub use numeric::{parse_number, render_number};
pub use psi::{preprocess, Dependency, HelperString, Plan, PsiError, Transform};
pub use report::{Mechanism, TokenRecord};

#[derive(Debug, thiserror::Error)]
pub enum SanitizeError {
    #[error(transparent)]
    Annotate(#[from] AnnotateError),
    #[error(transparent)]
    Psi(#[from] PsiError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("token {index} ({ty}): {source}")]
    Fpe {
        index: usize,
        ty: String,
        #[source]
        source: FpeError,
    },
    #[error("token {index} ({ty}): {source}")]
    Mldp {
        index: usize,
        ty: String,
        #[source]
        source: MldpError,
    },
    #[error("token {index}: {reason}")]
    Value { index: usize, reason: String },
}

/// Source of category II noise.
pub trait NoiseSource {
    /// Noisy output index for true index `x_index`.
    fn perturb(&mut self, x_index: usize, epsilon: f64, domain: IntegerDomain) -> Result<usize, MldpError>;
}

/// The mLDP mechanism driven by `rng`.
pub struct MechanismNoise<R>(pub R);

impl<R: Rng> NoiseSource for MechanismNoise<R> {
    fn perturb(&mut self, x_index: usize, epsilon: f64, domain: IntegerDomain) -> Result<usize, MldpError> {
        Ok(mldp::distribution_at_index(x_index, epsilon, domain)?.sample_index(&mut self.0))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SanitizedPrompt {
    pub text: String,
    pub report: Vec<TokenRecord>,
    /// Number of category II roots the budget was split over.
    pub t: usize,
}

impl SanitizedPrompt {
    pub fn report_jsonl(&self) -> String {
        report::to_jsonl(&self.report)
    }

    pub fn types(&self) -> Vec<SensitiveType> {
        self.report.iter().map(|r| r.ty.clone()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesanitizeAction {
    Decrypted,
    /// Category I token that was not emitted for the given original prompt.
    NotEmitted,
    /// Category I token that does not decrypt under this key.
    NotACiphertext,
    /// Category II token; its noise cannot be undone.
    Untouched,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DesanitizedToken {
    pub index: usize,
    #[serde(rename = "type")]
    pub ty: SensitiveType,
    pub span: Span,
    pub action: DesanitizeAction,
    /// False when no original prompt was given, so a decrypted token may
    /// have been invented by the model rather than emitted by us.
    pub provenance_known: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Desanitized {
    pub text: String,
    pub tokens: Vec<DesanitizedToken>,
}

/// Sanitizer bound to one key, config and recognizer set.
#[derive(Clone, Debug)]
pub struct Sanitizer {
    config: SanitizerConfig,
    recognizers: RecognizerSet,
    cipher: FpeCipher,
}

impl std::fmt::Debug for FpeCipher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("FpeCipher")
    }
}

fn output_spans(seq: &TypedSequence, outputs: &[String]) -> Vec<Span> {
    let mut shift: isize = 0;
    seq.tokens()
        .iter()
        .zip(outputs)
        .map(|(t, out)| {
            let start = (t.span.start as isize + shift) as usize;
            let len = out.chars().count();
            shift += len as isize - t.span.len() as isize;
            Span::new(start, start + len)
        })
        .collect()
}

/// Fills every non-root category II value from the roots: repetition groups
/// copy their representative, dependencies apply their rule. Negative
/// results are clamped to zero.
pub fn postprocess(plan: &Plan, values: &mut [Option<Decimal>], reference_year: i64) -> Result<(), SanitizeError> {
    for (&i, &r) in &plan.representative {
        if i != r {
            values[i] = values[r];
        }
    }
    for dep in &plan.order {
        let inputs = dep
            .transform
            .inputs()
            .iter()
            .map(|&i| values[i].ok_or(SanitizeError::Value { index: i, reason: "determinant has no value".into() }))
            .collect::<Result<Vec<_>, _>>()?;
        let mut v = dep
            .transform
            .apply(&inputs, reference_year)
            .map_err(|reason| SanitizeError::Value { index: dep.target, reason })?;
        if v.is_sign_negative() && !v.is_zero() {
            log::warn!("token {} derived a negative value; clamped to 0", dep.target);
            v = Decimal::ZERO;
        }
        values[dep.target] = Some(v);
    }
    Ok(())
}

impl Sanitizer {
    pub fn new(config: SanitizerConfig, recognizers: RecognizerSet) -> Self {
        let cipher = FpeCipher::new(config.key());
        Self { config, recognizers, cipher }
    }

    /// Sanitizer using the built-in pattern pack.
    pub fn with_builtin_patterns(config: SanitizerConfig) -> Self {
        let recognizers = RecognizerSet::builtin(&config);
        Self::new(config, recognizers)
    }

    /// Same configuration and recognizers under another key.
    pub fn rekeyed(&self, key: crate::key::SanitizerKey) -> Self {
        Self::new(self.config.with_replaced_key(key), self.recognizers.clone())
    }

    pub fn config(&self) -> &SanitizerConfig {
        &self.config
    }

    pub fn recognizers(&self) -> &RecognizerSet {
        &self.recognizers
    }

    pub fn annotate(&self, text: &str) -> Result<TypedSequence, SanitizeError> {
        Ok(self.recognizers.annotate(text)?)
    }

    pub fn preprocess(&self, seq: &TypedSequence, psi: Option<&HelperString>) -> Result<Plan, SanitizeError> {
        Ok(psi::preprocess(seq, psi)?)
    }

    fn encrypt_token(&self, index: usize, token: &TypedToken, ctx: &mut NameContext) -> Result<String, SanitizeError> {
        let format = match self.config.treatment(&token.ty)? {
            Treatment::Encrypt { format, .. } => format,
            Treatment::Perturb { .. } => unreachable!("category I token has a format"),
        };
        self.cipher
            .encrypt_in(format, &Tweak::for_type(&token.ty), &token.text, ctx)
            .map_err(|source| SanitizeError::Fpe { index, ty: token.ty.label().to_owned(), source })
    }

    fn domain_of(&self, token: &TypedToken) -> Result<IntegerDomain, SanitizeError> {
        match self.config.treatment(&token.ty)? {
            Treatment::Perturb { domain } => Ok(*domain),
            Treatment::Encrypt { .. } => unreachable!("category II token has a domain"),
        }
    }

    /// Sanitizes an annotated prompt following `plan`.
    pub fn sanitize(
        &self,
        seq: &TypedSequence,
        plan: &Plan,
        noise: &mut dyn NoiseSource,
    ) -> Result<SanitizedPrompt, SanitizeError> {
        let tokens = seq.tokens();
        let n = tokens.len();
        let t = plan.t();
        let epsilon = mldp::split_budget(self.config.epsilon_total(), t)
            .map_err(|source| SanitizeError::Mldp { index: 0, ty: String::new(), source })?;
        let roots: HashSet<usize> = plan.roots.iter().copied().collect();
        let mut ctx = NameContext::new(self.config.names().clone());
        let mut outputs = vec![String::new(); n];
        let mut values: Vec<Option<Decimal>> = vec![None; n];
        let mut clamped = vec![false; n];

        for (i, token) in tokens.iter().enumerate() {
            match token.category {
                Category::I => outputs[i] = self.encrypt_token(i, token, &mut ctx)?,
                Category::II if roots.contains(&i) => {
                    let domain = self.domain_of(token)?;
                    let (value, _) = parse_number(&token.text)
                        .ok_or_else(|| SanitizeError::Value { index: i, reason: "not a number".into() })?;
                    let (x_index, was_clamped) = domain.nearest_index(value.to_f64().unwrap_or(f64::NAN));
                    if was_clamped {
                        log::warn!(
                            "token {i} ({}) lies outside {}..={}; clamped to the nearest endpoint",
                            token.ty,
                            domain.lo(),
                            domain.hi()
                        );
                    }
                    clamped[i] = was_clamped;
                    let out = noise
                        .perturb(x_index, epsilon, domain)
                        .map_err(|source| SanitizeError::Mldp { index: i, ty: token.ty.label().to_owned(), source })?;
                    values[i] = Some(Decimal::from(domain.value_at(out)));
                }
                Category::II => {}
            }
        }

        postprocess(plan, &mut values, self.config.reference_year())?;

        for (i, token) in tokens.iter().enumerate() {
            if token.category == Category::II {
                let (_, style) = parse_number(&token.text)
                    .ok_or_else(|| SanitizeError::Value { index: i, reason: "not a number".into() })?;
                let v = values[i].ok_or_else(|| SanitizeError::Value { index: i, reason: "no value assigned".into() })?;
                outputs[i] = render_number(v, &style);
            }
        }

        let spans = output_spans(seq, &outputs);
        let targets: HashSet<usize> = plan.order.iter().map(|d| d.target).collect();
        let report = tokens
            .iter()
            .enumerate()
            .map(|(i, token)| {
                let mechanism = match token.category {
                    Category::I => Mechanism::Fpe,
                    Category::II if roots.contains(&i) => Mechanism::Mldp,
                    Category::II if targets.contains(&i) => Mechanism::Derived,
                    Category::II => Mechanism::Repeated,
                };
                let noised = mechanism == Mechanism::Mldp;
                TokenRecord {
                    index: i,
                    ty: token.ty.clone(),
                    category: token.category,
                    mechanism,
                    span: spans[i],
                    epsilon: noised.then_some(epsilon),
                    epsilon_share: noised.then(|| format!("1/{t}")),
                    clamped: clamped[i],
                }
            })
            .collect();
        Ok(SanitizedPrompt { text: seq.render_with(&outputs), report, t })
    }

    /// Annotates, plans and sanitizes `text`.
    pub fn sanitize_text(
        &self,
        text: &str,
        psi: Option<&HelperString>,
        noise: &mut dyn NoiseSource,
    ) -> Result<SanitizedPrompt, SanitizeError> {
        let seq = self.annotate(text)?;
        let plan = self.preprocess(&seq, psi)?;
        self.sanitize(&seq, &plan, noise)
    }

    /// Restores category I tokens in `response`. With `original`, only
    /// ciphertexts that sanitizing `original` emits are decrypted, and
    /// names missing from the lists are restored as well.
    pub fn desanitize(&self, response: &str, original: Option<&str>) -> Result<Desanitized, SanitizeError> {
        let mut ctx = NameContext::new(self.config.names().clone());
        let emitted: Option<HashSet<(SensitiveType, String)>> = match original {
            None => None,
            Some(orig) => {
                let seq = self.annotate(orig)?;
                let mut set = HashSet::new();
                for (i, token) in seq.tokens().iter().enumerate() {
                    if token.category == Category::I {
                        set.insert((token.ty.clone(), self.encrypt_token(i, token, &mut ctx)?));
                    }
                }
                Some(set)
            }
        };
        let seq = self.annotate(response)?;
        let mut outputs = Vec::with_capacity(seq.len());
        let mut records = Vec::with_capacity(seq.len());
        for (i, token) in seq.tokens().iter().enumerate() {
            let (out, action) = match token.category {
                Category::II => (token.text.clone(), DesanitizeAction::Untouched),
                Category::I => {
                    let was_emitted =
                        emitted.as_ref().is_none_or(|set| set.contains(&(token.ty.clone(), token.text.clone())));
                    if !was_emitted {
                        (token.text.clone(), DesanitizeAction::NotEmitted)
                    } else {
                        let format = match self.config.treatment(&token.ty)? {
                            Treatment::Encrypt { format, .. } => format,
                            Treatment::Perturb { .. } => unreachable!("category I token has a format"),
                        };
                        match self.cipher.decrypt_in(format, &Tweak::for_type(&token.ty), &token.text, &ctx) {
                            Ok(plain) => (plain, DesanitizeAction::Decrypted),
                            Err(e) => {
                                log::warn!("token {i} ({}) left as is: {e}", token.ty);
                                (token.text.clone(), DesanitizeAction::NotACiphertext)
                            }
                        }
                    }
                }
            };
            outputs.push(out);
            records.push((token.ty.clone(), action));
        }
        let spans = output_spans(&seq, &outputs);
        let tokens = records
            .into_iter()
            .zip(spans)
            .enumerate()
            .map(|(index, ((ty, action), span))| DesanitizedToken {
                index,
                ty,
                span,
                action,
                provenance_known: original.is_some(),
            })
            .collect();
        Ok(Desanitized { text: seq.render_with(&outputs), tokens })
    }
}
