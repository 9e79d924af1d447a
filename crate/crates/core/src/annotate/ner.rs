//! Parsing NER replies of the form `{'Label': ['a', 'b']}` and mapping the
//! reported surface strings back to spans.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::{CharOffsets, SensitiveType, Span};

/// Entity label to surface strings, as reported by an NER backend.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NerEntityMap(pub BTreeMap<String, Vec<String>>);

impl NerEntityMap {
    /// Surface strings for `label`, compared case-insensitively.
    pub fn get(&self, label: &str) -> &[String] {
        self.0
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(label))
            .map_or(&[], |(_, v)| v.as_slice())
    }

    pub fn insert(&mut self, label: impl Into<String>, values: Vec<String>) {
        self.0.insert(label.into(), values);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no dictionary of lists found in NER reply for {expected}")]
pub struct NerParseError {
    pub expected: String,
}

/// Extracts the first well-formed dictionary of string lists from `raw`,
/// ignoring any surrounding prose. Keys and strings may use single or double
/// quotes.
pub fn parse_ner_response(raw: &str, expected_entity: &str) -> Result<NerEntityMap, NerParseError> {
    for (start, _) in raw.match_indices('{') {
        let mut p = Parser { s: &raw[start..], pos: 0 };
        if let Some(map) = p.dict() {
            return Ok(NerEntityMap(map));
        }
    }
    Err(NerParseError { expected: expected_entity.to_owned() })
}

struct Parser<'a> {
    s: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.s[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.ws();
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn string(&mut self) -> Option<String> {
        self.ws();
        let quote = self.bump().filter(|c| *c == '\'' || *c == '"')?;
        let mut out = String::new();
        loop {
            match self.bump()? {
                '\\' => out.push(self.bump()?),
                c if c == quote => return Some(out),
                c => out.push(c),
            }
        }
    }

    fn list(&mut self) -> Option<Vec<String>> {
        if !self.eat('[') {
            return None;
        }
        let mut items = Vec::new();
        loop {
            if self.eat(']') {
                return Some(items);
            }
            items.push(self.string()?);
            if !self.eat(',') {
                return self.eat(']').then_some(items);
            }
        }
    }

    fn dict(&mut self) -> Option<BTreeMap<String, Vec<String>>> {
        if !self.eat('{') {
            return None;
        }
        let mut map = BTreeMap::new();
        loop {
            if self.eat('}') {
                return Some(map);
            }
            let key = self.string()?;
            if !self.eat(':') {
                return None;
            }
            map.insert(key, self.list()?);
            if !self.eat(',') {
                return self.eat('}').then_some(map);
            }
        }
    }
}

fn is_word_char(c: Option<char>) -> bool {
    c.is_some_and(|c| c.is_alphanumeric())
}

/// Spans of every whole-word occurrence of each surface string. Strings not
/// found in `text` are returned separately.
pub fn locate_surfaces(text: &str, surfaces: &[String]) -> (Vec<Span>, Vec<String>) {
    let offsets = CharOffsets::new(text);
    let mut spans = Vec::new();
    let mut missing = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for surface in surfaces {
        let surface = surface.trim();
        if surface.is_empty() || !seen.insert(surface) {
            continue;
        }
        let mut found = false;
        for (b, m) in text.match_indices(surface) {
            let before = text[..b].chars().next_back();
            let after = text[b + m.len()..].chars().next();
            let first = m.chars().next();
            let last = m.chars().next_back();
            let bounded_left = !(is_word_char(before) && is_word_char(first));
            let bounded_right = !(is_word_char(after) && is_word_char(last));
            if bounded_left && bounded_right {
                spans.push(Span::new(offsets.char_of(b), offsets.char_of(b + m.len())));
                found = true;
            }
        }
        if !found {
            missing.push(surface.to_owned());
        }
    }
    (spans, missing)
}

/// Label used for a type in NER requests and replies.
pub fn entity_label(ty: &SensitiveType) -> &str {
    ty.label()
}
