//! Answer sources for utility runs: deterministic mocks or a chat model.

use psan_core::annotate::RecognizerSet;
use psan_core::pipeline::parse_number;
use psan_core::{Category, SensitiveType};
use psan_llm::{ChatRequest, LlmClient, LlmError, Message};
use rust_decimal::Decimal;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("no answer: {0}")]
    NoAnswer(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// Maps a prompt to a response.
pub trait Oracle: Sync {
    fn name(&self) -> String;
    fn respond(&self, prompt: &str) -> Result<String, OracleError>;
}

#[derive(Clone, Debug, PartialEq)]
pub enum MockTask {
    /// Answers `The <field> is <value>.` with the first token of that type.
    RetrieveField(SensitiveType),
    /// Answers `sum(c_i * x_i)` over the leading category II values.
    LinearFormula(Vec<Decimal>),
    /// Answers `first`, `second` or `equal` for the larger of the first two
    /// category II values.
    CompareTwoValues,
}

/// Phrase that the built-in patterns recognize in front of a value.
pub fn field_phrase(ty: &SensitiveType) -> &str {
    match ty {
        SensitiveType::Zipcode => "zip code",
        SensitiveType::BankAccount => "account number",
        SensitiveType::Password => "password",
        SensitiveType::Sex => "sex",
        SensitiveType::Name => "name",
        SensitiveType::CreditCard => "card number",
        other => other.label(),
    }
}

/// Deterministic stand-in for a model: a pure function of the prompt.
#[derive(Clone, Debug)]
pub struct MockOracle {
    task: MockTask,
    recognizers: RecognizerSet,
}

impl MockOracle {
    pub fn new(task: MockTask, recognizers: RecognizerSet) -> Self {
        Self { task, recognizers }
    }

    pub fn task(&self) -> &MockTask {
        &self.task
    }

    fn numbers(&self, prompt: &str) -> Result<Vec<Decimal>, OracleError> {
        let seq = self.recognizers.annotate(prompt).map_err(|e| OracleError::NoAnswer(e.to_string()))?;
        Ok(seq
            .tokens()
            .iter()
            .filter(|t| t.category == Category::II)
            .filter_map(|t| parse_number(&t.text).map(|(v, _)| v))
            .collect())
    }
}

impl Oracle for MockOracle {
    fn name(&self) -> String {
        match &self.task {
            MockTask::RetrieveField(ty) => format!("mock-retrieve-{}", ty.label()),
            MockTask::LinearFormula(c) => {
                let c: Vec<String> = c.iter().map(ToString::to_string).collect();
                format!("mock-linear-{}", c.join(","))
            }
            MockTask::CompareTwoValues => "mock-compare".into(),
        }
    }

    fn respond(&self, prompt: &str) -> Result<String, OracleError> {
        match &self.task {
            MockTask::RetrieveField(ty) => {
                let seq = self.recognizers.annotate(prompt).map_err(|e| OracleError::NoAnswer(e.to_string()))?;
                let token = seq
                    .tokens()
                    .iter()
                    .find(|t| &t.ty == ty)
                    .ok_or_else(|| OracleError::NoAnswer(format!("no {ty} in prompt")))?;
                Ok(format!("The {} is {}.", field_phrase(ty), token.text))
            }
            MockTask::LinearFormula(coefficients) => {
                let values = self.numbers(prompt)?;
                if values.len() < coefficients.len() {
                    return Err(OracleError::NoAnswer(format!(
                        "{} values for {} coefficients",
                        values.len(),
                        coefficients.len()
                    )));
                }
                let total: Decimal = coefficients.iter().zip(&values).map(|(c, v)| c * v).sum();
                Ok(format!("The answer is {}.", total.normalize()))
            }
            MockTask::CompareTwoValues => {
                let values = self.numbers(prompt)?;
                let [a, b, ..] = values[..] else {
                    return Err(OracleError::NoAnswer("fewer than two values".into()));
                };
                Ok(match a.cmp(&b) {
                    std::cmp::Ordering::Greater => "first",
                    std::cmp::Ordering::Less => "second",
                    std::cmp::Ordering::Equal => "equal",
                }
                .to_owned())
            }
        }
    }
}

/// A chat model behind [`LlmClient`].
#[derive(Clone, Debug)]
pub struct LlmOracle {
    client: LlmClient,
    base: ChatRequest,
}

impl LlmOracle {
    pub fn new(client: LlmClient, base: ChatRequest) -> Self {
        Self { client, base }
    }
}

impl Oracle for LlmOracle {
    fn name(&self) -> String {
        format!("llm-{}", self.base.model)
    }

    fn respond(&self, prompt: &str) -> Result<String, OracleError> {
        let request = self.base.clone().with_message(Message::user(prompt));
        Ok(self.client.chat(&request)?.content)
    }
}
