//! Utility runs over a corpus.
//!
//! Corpus files hold one JSON object per line:
//!
//! ```json
//! {"prompt": "My SSN is 055-46-6168. What is my SSN?", "expected": "055-46-6168"}
//! {"prompt": "I earn $5,000 a month.", "expected": "1000", "psi": {"repeat": [], "derive": []}}
//! ```
//!
//! Each sample is answered on the clean prompt (score α) and on the
//! sanitized prompt after desanitizing the answer (score β).

use std::path::Path;
use std::sync::LazyLock;

use psan_core::pipeline::{parse_number, HelperString, MechanismNoise, Sanitizer};
use psan_core::SensitiveType;
use rayon::prelude::*;
use regex::Regex;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::game::trial_rng;
use crate::metrics::{consistency, relative_error};
use crate::oracle::Oracle;
use crate::stats::{self, Percentiles};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSample {
    pub prompt: String,
    pub expected: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<HelperString>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("reading corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub fn parse_corpus(text: &str) -> Result<Vec<EvalSample>, CorpusError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CorpusError::Parse { line: i + 1, reason: e.to_string() }))
        .collect()
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<EvalSample>, CorpusError> {
    parse_corpus(&std::fs::read_to_string(path)?)
}

pub fn write_corpus(samples: &[EvalSample]) -> String {
    samples.iter().map(|s| serde_json::to_string(s).expect("sample serializes") + "\n").collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// 1 when the answer's first token of the type equals the expected text.
    ExactField(SensitiveType),
    /// Relative error of the first number in the answer against the expected value.
    RelativeError,
    /// Relative difference between the sanitized and the clean answers.
    Consistency,
    /// 1 for the expected word, 0.5 for `equal`, 0 otherwise.
    Comparison,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleOutcome {
    pub index: usize,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QualityReport {
    pub oracle: String,
    pub metric: Metric,
    pub samples: usize,
    pub outcomes: Vec<SampleOutcome>,
    /// Mean clean-prompt score.
    pub alpha: Option<f64>,
    /// Mean sanitized-prompt score.
    pub beta: Option<f64>,
    /// Quartiles of the sanitized-prompt scores.
    pub percentiles: Option<Percentiles>,
    pub failures: usize,
}

impl QualityReport {
    pub fn beta_scores(&self) -> Vec<f64> {
        self.outcomes.iter().filter_map(|o| o.beta).collect()
    }

    pub fn alpha_scores(&self) -> Vec<f64> {
        self.outcomes.iter().filter_map(|o| o.alpha).collect()
    }
}

static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"-?\d[\d,]*(?:\.\d+)?").expect("number pattern compiles"));

fn first_number(text: &str) -> Option<Decimal> {
    NUMBER.find_iter(text).find_map(|m| {
        let s = m.as_str();
        let (neg, body) = s.strip_prefix('-').map_or((false, s), |b| (true, b));
        let body = body.trim_end_matches(',');
        parse_number(body).map(|(v, _)| if neg { -v } else { v })
    })
}

fn score(
    metric: &Metric,
    sanitizer: &Sanitizer,
    answer: &str,
    clean_answer: &str,
    expected: &str,
) -> Result<f64, String> {
    match metric {
        Metric::ExactField(ty) => {
            let seq = sanitizer.annotate(answer).map_err(|e| e.to_string())?;
            let hit = seq.tokens().iter().find(|t| &t.ty == ty).is_some_and(|t| t.text == expected)
                || answer.trim() == expected;
            Ok(if hit { 1.0 } else { 0.0 })
        }
        Metric::RelativeError => {
            let pred = first_number(answer).ok_or("answer has no number")?;
            let truth = first_number(expected).ok_or("expected value is not a number")?;
            Ok(relative_error(pred, truth).value)
        }
        Metric::Consistency => {
            let pred = first_number(answer).ok_or("answer has no number")?;
            let clean = first_number(clean_answer).ok_or("clean answer has no number")?;
            Ok(consistency(pred, clean).value)
        }
        Metric::Comparison => Ok(match answer.trim() {
            a if a == expected.trim() => 1.0,
            "equal" => 0.5,
            _ => 0.0,
        }),
    }
}

fn fail(outcome: &mut SampleOutcome, error: String) {
    outcome.error.get_or_insert(error);
}

fn evaluate(
    index: usize,
    sample: &EvalSample,
    sanitizer: &Sanitizer,
    oracle: &dyn Oracle,
    metric: &Metric,
    seed: u64,
) -> SampleOutcome {
    let mut outcome = SampleOutcome { index, alpha: None, beta: None, error: None };
    let clean = match oracle.respond(&sample.prompt) {
        Ok(c) => c,
        Err(e) => {
            fail(&mut outcome, format!("clean prompt: {e}"));
            return outcome;
        }
    };
    match score(metric, sanitizer, &clean, &clean, &sample.expected) {
        Ok(s) => outcome.alpha = Some(s),
        Err(e) => fail(&mut outcome, format!("clean answer: {e}")),
    }
    let mut noise = MechanismNoise(trial_rng(seed, index as u64));
    let restored = sanitizer
        .sanitize_text(&sample.prompt, sample.psi.as_ref(), &mut noise)
        .map_err(|e| format!("sanitize: {e}"))
        .and_then(|s| oracle.respond(&s.text).map_err(|e| format!("sanitized prompt: {e}")))
        .and_then(|r| {
            sanitizer.desanitize(&r, Some(&sample.prompt)).map(|d| d.text).map_err(|e| format!("desanitize: {e}"))
        });
    match restored.and_then(|r| score(metric, sanitizer, &r, &clean, &sample.expected)) {
        Ok(s) => outcome.beta = Some(s),
        Err(e) => fail(&mut outcome, e),
    }
    outcome
}

/// Scores every sample; failures are recorded per sample and do not stop
/// the run. Sample `i` draws its noise from stream `i` of `seed`.
pub fn run_eval(
    corpus: &[EvalSample],
    sanitizer: &Sanitizer,
    oracle: &dyn Oracle,
    metric: Metric,
    seed: u64,
) -> QualityReport {
    let outcomes: Vec<SampleOutcome> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, s)| evaluate(i, s, sanitizer, oracle, &metric, seed))
        .collect();
    let alpha: Vec<f64> = outcomes.iter().filter_map(|o| o.alpha).collect();
    let beta: Vec<f64> = outcomes.iter().filter_map(|o| o.beta).collect();
    QualityReport {
        oracle: oracle.name(),
        metric,
        samples: corpus.len(),
        failures: outcomes.iter().filter(|o| o.error.is_some()).count(),
        alpha: stats::mean(&alpha),
        beta: stats::mean(&beta),
        percentiles: if beta.is_empty() { None } else { stats::percentiles(&beta) },
        outcomes,
    }
}
