//! Shared vocabulary: sensitive types, categories, typed tokens and sequences.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A prompt as handed to the sanitizer. Empty prompts are legal.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Prompt(String);

impl Prompt {
    pub fn new(text: impl Into<String>) -> Self {
        Self(text.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl std::ops::Deref for Prompt {
    type Target = str;

    fn deref(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Prompt {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for Prompt {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// How a sensitive token is sanitized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    /// Only the format matters downstream: encrypted with FPE, reversible.
    #[serde(rename = "I")]
    I,
    /// The numeric value matters downstream: perturbed with the mLDP mechanism.
    #[serde(rename = "II")]
    II,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::I => "I",
            Category::II => "II",
        })
    }
}

/// Label of a sensitive token type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SensitiveType {
    Name,
    Age,
    Money,
    Ssn,
    CreditCard,
    Zipcode,
    Phone,
    Date,
    Password,
    Sex,
    BankAccount,
    Custom(String),
}

impl SensitiveType {
    pub const BUILTIN: [SensitiveType; 11] = [
        SensitiveType::Name,
        SensitiveType::Age,
        SensitiveType::Money,
        SensitiveType::Ssn,
        SensitiveType::CreditCard,
        SensitiveType::Zipcode,
        SensitiveType::Phone,
        SensitiveType::Date,
        SensitiveType::Password,
        SensitiveType::Sex,
        SensitiveType::BankAccount,
    ];

    pub fn label(&self) -> &str {
        match self {
            SensitiveType::Name => "Name",
            SensitiveType::Age => "Age",
            SensitiveType::Money => "Money",
            SensitiveType::Ssn => "SSN",
            SensitiveType::CreditCard => "CreditCard",
            SensitiveType::Zipcode => "Zipcode",
            SensitiveType::Phone => "Phone",
            SensitiveType::Date => "Date",
            SensitiveType::Password => "Password",
            SensitiveType::Sex => "Sex",
            SensitiveType::BankAccount => "BankAccount",
            SensitiveType::Custom(label) => label,
        }
    }

    /// Category used when the configuration does not say otherwise.
    /// Custom types have no default.
    pub fn default_category(&self) -> Option<Category> {
        match self {
            SensitiveType::Age | SensitiveType::Money => Some(Category::II),
            SensitiveType::Custom(_) => None,
            _ => Some(Category::I),
        }
    }
}

impl fmt::Display for SensitiveType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SensitiveType {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let builtin = Self::BUILTIN
            .iter()
            .find(|t| t.label().eq_ignore_ascii_case(s))
            .cloned();
        Ok(builtin.unwrap_or_else(|| match s.to_ascii_lowercase().as_str() {
            "ccn" | "credit_card" | "credit card" => SensitiveType::CreditCard,
            "zip" | "zip_code" | "zipcode" => SensitiveType::Zipcode,
            "bank_account" | "account" => SensitiveType::BankAccount,
            _ => SensitiveType::Custom(s.to_owned()),
        }))
    }
}

impl Serialize for SensitiveType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for SensitiveType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(s.parse().unwrap_or_else(|never| match never {}))
    }
}

/// Half-open interval of Unicode scalar offsets into the source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// A sensitive substring of a prompt together with its type and category.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypedToken {
    pub text: String,
    #[serde(rename = "type")]
    pub ty: SensitiveType,
    pub category: Category,
    pub span: Span,
}

/// A prompt together with its sensitive tokens. Text between tokens is
/// non-sensitive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedSequence {
    source: String,
    tokens: Vec<TypedToken>,
    offsets: CharOffsets,
}

/// Segment of a typed sequence: either plain text or a sensitive token.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Segment<'a> {
    Plain(&'a str),
    Sensitive(&'a TypedToken),
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SequenceError {
    #[error("token {index} has an empty span")]
    EmptySpan { index: usize },
    #[error("token {index} span {start}..{end} lies outside the {len}-character source")]
    OutOfBounds { index: usize, start: usize, end: usize, len: usize },
    #[error("token {index} overlaps or precedes its predecessor")]
    Unsorted { index: usize },
    #[error("token {index} text does not match the source at its span")]
    TextMismatch { index: usize },
}

impl TypedSequence {
    /// Builds a sequence, checking that spans are non-empty, sorted, disjoint
    /// and that every token's text matches the source.
    pub fn new(source: impl Into<String>, tokens: Vec<TypedToken>) -> Result<Self, SequenceError> {
        let source = source.into();
        let offsets = CharOffsets::new(&source);
        let len = offsets.char_len();
        let mut prev_end = 0;
        for (index, token) in tokens.iter().enumerate() {
            let Span { start, end } = token.span;
            if end <= start {
                return Err(SequenceError::EmptySpan { index });
            }
            if end > len {
                return Err(SequenceError::OutOfBounds { index, start, end, len });
            }
            if start < prev_end {
                return Err(SequenceError::Unsorted { index });
            }
            if offsets.slice(&source, token.span) != token.text {
                return Err(SequenceError::TextMismatch { index });
            }
            prev_end = end;
        }
        Ok(Self { source, tokens, offsets })
    }

    pub fn empty(source: impl Into<String>) -> Self {
        let source = source.into();
        let offsets = CharOffsets::new(&source);
        Self { source, tokens: Vec::new(), offsets }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn tokens(&self) -> &[TypedToken] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn offsets(&self) -> &CharOffsets {
        &self.offsets
    }

    /// Alternating plain/sensitive segments in source order. Empty gaps are
    /// omitted.
    pub fn segments(&self) -> Vec<Segment<'_>> {
        let mut out = Vec::with_capacity(self.tokens.len() * 2 + 1);
        let mut cursor = 0;
        for token in &self.tokens {
            if token.span.start > cursor {
                out.push(Segment::Plain(
                    self.offsets.slice(&self.source, Span::new(cursor, token.span.start)),
                ));
            }
            out.push(Segment::Sensitive(token));
            cursor = token.span.end;
        }
        let len = self.offsets.char_len();
        if cursor < len {
            out.push(Segment::Plain(self.offsets.slice(&self.source, Span::new(cursor, len))));
        }
        out
    }

    /// Concatenates gaps and token texts; always equals `source()`.
    pub fn reconstruct(&self) -> String {
        self.segments()
            .into_iter()
            .map(|s| match s {
                Segment::Plain(p) => p,
                Segment::Sensitive(t) => t.text.as_str(),
            })
            .collect()
    }

    /// Rebuilds the text with each token replaced by `replacements[i]`.
    pub fn render_with(&self, replacements: &[String]) -> String {
        assert_eq!(replacements.len(), self.tokens.len());
        let mut out = String::with_capacity(self.source.len());
        // Right-to-left keeps every earlier byte range valid.
        let mut tail_end = self.source.len();
        let mut pieces = Vec::with_capacity(self.tokens.len() * 2 + 1);
        for (token, replacement) in self.tokens.iter().zip(replacements).rev() {
            let (bs, be) = self.offsets.byte_range(token.span);
            pieces.push(&self.source[be..tail_end]);
            pieces.push(replacement.as_str());
            tail_end = bs;
        }
        pieces.push(&self.source[..tail_end]);
        for piece in pieces.into_iter().rev() {
            out.push_str(piece);
        }
        out
    }
}

/// Maps Unicode scalar offsets to byte offsets for one string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharOffsets {
    bytes: Vec<usize>,
}

impl CharOffsets {
    pub fn new(text: &str) -> Self {
        let mut bytes: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        bytes.push(text.len());
        Self { bytes }
    }

    pub fn char_len(&self) -> usize {
        self.bytes.len() - 1
    }

    pub fn byte_of(&self, char_offset: usize) -> usize {
        self.bytes[char_offset]
    }

    /// Inverse of `byte_of`; `byte` must sit on a char boundary.
    pub fn char_of(&self, byte: usize) -> usize {
        self.bytes
            .binary_search(&byte)
            .expect("byte offset is not on a char boundary")
    }

    pub fn byte_range(&self, span: Span) -> (usize, usize) {
        (self.bytes[span.start], self.bytes[span.end])
    }

    pub fn slice<'a>(&self, text: &'a str, span: Span) -> &'a str {
        let (s, e) = self.byte_range(span);
        &text[s..e]
    }
}
