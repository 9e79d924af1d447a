//! Built-in pattern pack.
//!
//! Context-dependent types (ages, zip codes, account numbers, passwords)
//! only match next to a cue word, so a bare `53` in `53 Broadway Street` is
//! left alone while `My age is 53` is typed as an age.

use std::sync::Arc;

use super::Recognizer;
use crate::config::year_type;
use crate::fpe::NameIndex;
use crate::types::SensitiveType;

const NUMBER: &str = r"\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?";

fn alternation(words: &[String]) -> String {
    let mut sorted: Vec<&String> = words.iter().collect();
    // Longest first so a name never matches as the prefix of a longer one.
    sorted.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    sorted.iter().map(|w| regex::escape(w)).collect::<Vec<_>>().join("|")
}

/// `(type, pattern, priority)` for every built-in recognizer.
pub fn builtin_patterns(names: &NameIndex) -> Vec<(SensitiveType, String, i32)> {
    use SensitiveType::*;
    let first = alternation(names.first_names());
    let last = alternation(names.last_names());
    let cap_word = r"\p{Lu}[\p{Ll}'-]+";
    vec![
        (CreditCard, r"\b(?P<value>\d{4}-\d{4}-\d{4}-\d{4}|\d{4} \d{4} \d{4} \d{4}|\d{16})\b".into(), 100),
        (Ssn, r"\b(?P<value>\d{3}-\d{2}-\d{4})\b".into(), 95),
        (Phone, r"(?P<value>\(\d{3}\) ?\d{3}-\d{4})\b".into(), 90),
        (Phone, r"\b(?P<value>\d{3}[-.]\d{3}[-.]\d{4})\b".into(), 89),
        (Date, r"\b(?P<value>\d{4}-\d{2}-\d{2}|\d{2}/\d{2}/\d{4}|\d{2}\.\d{2}\.\d{4})\b".into(), 85),
        (Money, format!(r"[$€£]\s?(?P<value>{NUMBER})"), 80),
        (Money, format!(r"(?i)\b(?P<value>{NUMBER})\s?(?:usd|eur|gbp|dollars?|euros?|pounds?)\b"), 79),
        (
            BankAccount,
            r"(?i)\b(?:bank account|account)(?:\s+(?:number|no\.?|#))?(?:\s+is)?[:\s]+(?P<value>\d{8,17})\b".into(),
            70,
        ),
        (
            Zipcode,
            r"(?i)\b(?:zip(?:\s?code)?|postal code)(?:\s+is)?[:\s]+(?P<value>\d{5}(?:-\d{4})?)\b".into(),
            65,
        ),
        (Password, r"(?i)\bpassword(?:\s+is)?[:\s]+(?P<value>[A-Za-z0-9!@#$%^&*_+=-]{6,64})".into(), 60),
        (Sex, r"(?i)\b(?:sex|gender)(?:\s+is)?[:\s]+(?P<value>male|female)\b".into(), 55),
        (Age, r"(?i)\bage(?:d|\s+is|:)?\s+(?P<value>\d{1,3})\b".into(), 50),
        (Age, r"(?i)\b(?P<value>\d{1,3})(?:\s+|-)years?(?:\s+|-)old\b".into(), 49),
        (Age, r"\bI(?:'m| am) (?P<value>\d{1,3})(?:\s*[,.;!]|\s*$)".into(), 48),
        (year_type(), r"(?i)\bborn in (?P<value>\d{4})\b".into(), 45),
        (year_type(), r"(?i)\bbirth year(?:\s+is|:)?\s+(?P<value>\d{4})\b".into(), 44),
        (Name, format!(r"\b(?:Mr|Mrs|Ms|Dr|Prof)\.?\s(?P<value>{cap_word}(?:\s{cap_word})?)\b"), 30),
        (Name, format!(r"\b(?P<value>(?:{first})\s(?:{last}))\b"), 29),
        (Name, format!(r"\b(?P<value>(?:{first})\s{cap_word})\b"), 28),
        (Name, format!(r"\b(?P<value>{first})\b"), 27),
    ]
}

pub fn builtin_recognizers(names: &Arc<NameIndex>) -> Vec<Recognizer> {
    builtin_patterns(names)
        .into_iter()
        .map(|(ty, p, prio)| Recognizer::pattern(ty, &p, prio).expect("built-in patterns compile"))
        .collect()
}
