//! Entity extraction by prompting a chat model.

use psan_core::annotate::{parse_ner_response, AnnotateError, NerBackend, NerEntityMap, NerParseError};
use psan_core::SensitiveType;

use crate::client::{ChatRequest, LlmClient, LlmError, Message};

pub const NAME_TEMPLATE: &str = "Please find words that can be identified as names of people from the given text. \
Format the output as a dictionary of lists: {'Name': ['Name_1', 'Name_2']}. Do NOT provide any additional text.";

pub const MONEY_TEMPLATE: &str = "Please find currency values from the given text. Do not provide the currency, \
only provide the value, WITHOUT changing commas or decimal points. Format the output as a dictionary of lists: \
{'Money': ['Money_1', 'Money_2']}. Do NOT provide any additional text.";

/// Instruction for any entity without a dedicated template.
pub fn generic_template(entity: &str) -> String {
    format!(
        "Please find words that can be identified as '{entity}' from the given text. Format the output as a \
         dictionary of lists: {{'{entity}': ['{entity}_1', '{entity}_2']}}. Do NOT provide any additional text."
    )
}

pub fn ner_instruction(entity: &SensitiveType) -> String {
    match entity {
        SensitiveType::Name => NAME_TEMPLATE.to_owned(),
        SensitiveType::Money => MONEY_TEMPLATE.to_owned(),
        other => generic_template(other.label()),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NerError {
    #[error(transparent)]
    Chat(#[from] LlmError),
    #[error(transparent)]
    Parse(#[from] NerParseError),
}

/// Asks the model for all `entity` surfaces in `text`. `base` supplies the
/// endpoint and settings; its messages are replaced.
pub fn ner_via_llm(
    client: &LlmClient,
    base: &ChatRequest,
    text: &str,
    entity: &SensitiveType,
) -> Result<NerEntityMap, NerError> {
    let mut request = base.clone();
    request.messages = vec![Message::system(ner_instruction(entity)), Message::user(text)];
    let reply = client.chat(&request)?;
    Ok(parse_ner_response(&reply.content, entity.label())?)
}

/// [`NerBackend`] backed by a chat model.
#[derive(Clone, Debug)]
pub struct LlmNer {
    client: LlmClient,
    base: ChatRequest,
}

impl LlmNer {
    pub fn new(client: LlmClient, base: ChatRequest) -> Self {
        Self { client, base }
    }
}

impl NerBackend for LlmNer {
    fn extract(&self, text: &str, entity: &SensitiveType) -> Result<NerEntityMap, AnnotateError> {
        ner_via_llm(&self.client, &self.base, text, entity)
            .map_err(|e| AnnotateError::NerBackend { entity: entity.label().to_owned(), reason: e.to_string() })
    }
}
