//! Token report: one JSON object per sensitive token, without values.
//!
//! ```json
//! {"index":0,"type":"Money","category":"II","mechanism":"mldp","span":{"start":20,"end":25},"epsilon":0.5,"epsilon_share":"1/2"}
//! ```
//!
//! `span` is in characters of the sanitized text. `epsilon` and
//! `epsilon_share` (the exact fraction of the budget) appear only on noised
//! tokens.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::types::{Category, SensitiveType, Span};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    /// Format-preserving encryption.
    Fpe,
    /// Fresh sample from the mLDP mechanism.
    Mldp,
    /// Copied from the representative of its repetition group.
    Repeated,
    /// Computed from other tokens by a helper-string rule.
    Derived,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub index: usize,
    #[serde(rename = "type")]
    pub ty: SensitiveType,
    pub category: Category,
    pub mechanism: Mechanism,
    pub span: Span,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_share: Option<String>,
    /// Set when the value fell outside the configured domain.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub clamped: bool,
}

impl TokenRecord {
    pub fn share(&self) -> Option<Ratio<u64>> {
        let s = self.epsilon_share.as_deref()?;
        let (n, d) = s.split_once('/')?;
        Some(Ratio::new(n.parse().ok()?, d.parse().ok()?))
    }
}

pub fn to_jsonl(records: &[TokenRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}

pub fn from_jsonl(text: &str) -> Result<Vec<TokenRecord>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

/// Sum of the budget shares of all noised tokens, exactly.
pub fn total_share(records: &[TokenRecord]) -> Ratio<u64> {
    records.iter().filter_map(TokenRecord::share).fold(Ratio::from_integer(0), |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let r = TokenRecord {
            index: 2,
            ty: SensitiveType::Money,
            category: Category::II,
            mechanism: Mechanism::Mldp,
            span: Span::new(3, 8),
            epsilon: Some(0.5),
            epsilon_share: Some("1/2".into()),
            clamped: false,
        };
        let text = to_jsonl(&[r.clone(), r.clone()]);
        assert!(text.contains("\"type\":\"Money\""));
        assert!(!text.contains("clamped"));
        let back = from_jsonl(&text).unwrap();
        assert_eq!(back, vec![r.clone(), r]);
        assert_eq!(total_share(&back), Ratio::from_integer(1));
    }
}
