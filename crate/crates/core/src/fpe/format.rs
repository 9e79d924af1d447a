//! Rankable formats: a validation pattern plus a bijection between the
//! strings it accepts and `[0, size)`.

use std::fmt;
use std::sync::Arc;

use chrono::NaiveDate;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::money::MoneySkeleton;
use super::names::{NameIndex, NAME_DOMAIN};
use super::FpeError;

pub const DIGITS: &str = "0123456789";
pub const ALPHANUMERIC: &str = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";

/// Serializable description of a format, as written in config files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatDef {
    /// Regular expression every plaintext and ciphertext must match in full.
    pub pattern: String,
    #[serde(flatten)]
    pub rank: RankDef,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rank", rename_all = "snake_case")]
pub enum RankDef {
    /// Characters from `alphabet` are ranked positionally, all other
    /// characters are kept in place. With `luhn`, the last symbol is a Luhn
    /// check digit recomputed after enciphering the rest.
    #[serde(alias = "digits")]
    Alphabet {
        #[serde(default = "default_alphabet")]
        alphabet: String,
        #[serde(default)]
        luhn: bool,
    },
    /// Decimal integers in `lo..=hi`.
    IntegerRange { lo: u64, hi: u64 },
    /// Calendar dates in `min..=max` in any of `layouts` (chrono syntax). The
    /// layout of each token is preserved.
    Date {
        min: String,
        max: String,
        #[serde(default = "default_date_layouts")]
        layouts: Vec<String>,
    },
    /// A fixed, case-insensitive vocabulary.
    Enumerated { values: Vec<String> },
    /// First/last name lists.
    NameIndex,
    /// Monetary amounts with the nine-prefix construction.
    #[serde(alias = "money")]
    MoneySkeleton,
}

fn default_alphabet() -> String {
    DIGITS.to_owned()
}

fn default_date_layouts() -> Vec<String> {
    vec!["%Y-%m-%d".into(), "%m/%d/%Y".into(), "%d.%m.%Y".into()]
}

#[derive(Clone, Debug)]
pub(crate) enum Strategy {
    Alphabet { symbols: Vec<char>, luhn: bool },
    IntegerRange { lo: u64, hi: u64 },
    Date { min: NaiveDate, max: NaiveDate, layouts: Vec<String> },
    Enumerated { values: Vec<String> },
    NameIndex(Arc<NameIndex>),
    Money,
}

/// A compiled format.
#[derive(Clone)]
pub struct FormatSpec {
    name: String,
    def: FormatDef,
    pattern: Regex,
    pub(crate) strategy: Strategy,
}

impl fmt::Debug for FormatSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormatSpec").field("name", &self.name).field("def", &self.def).finish()
    }
}

impl PartialEq for FormatSpec {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.def == other.def
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FormatDefError {
    #[error("pattern does not compile: {0}")]
    Pattern(#[from] regex::Error),
    #[error("{0}")]
    Invalid(String),
}

/// Position of the text inside its format domain, with what is needed to
/// render another index the same way.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ranked {
    pub index: u128,
    pub size: u128,
    pub(crate) layout: Layout,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Layout {
    /// Characters outside the alphabet, in place; `None` marks a ranked slot.
    Template(Vec<Option<char>>),
    Plain,
    Date(String),
    Case(CaseStyle),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum CaseStyle {
    Lower,
    Upper,
    Title,
}

impl CaseStyle {
    fn of(text: &str) -> Self {
        if text.chars().all(|c| !c.is_lowercase()) && text.chars().any(char::is_uppercase) {
            CaseStyle::Upper
        } else if text.chars().next().is_some_and(char::is_uppercase) {
            CaseStyle::Title
        } else {
            CaseStyle::Lower
        }
    }

    fn apply(&self, word: &str) -> String {
        match self {
            CaseStyle::Lower => word.to_lowercase(),
            CaseStyle::Upper => word.to_uppercase(),
            CaseStyle::Title => {
                let lower = word.to_lowercase();
                let mut chars = lower.chars();
                chars
                    .next()
                    .map(|c| c.to_uppercase().chain(chars).collect())
                    .unwrap_or_default()
            }
        }
    }
}

fn luhn_check_digit(payload: &[u32]) -> u32 {
    // Doubling starts from the rightmost payload digit.
    let sum: u32 = payload
        .iter()
        .rev()
        .enumerate()
        .map(|(i, &d)| {
            if i % 2 == 0 {
                let x = d * 2;
                if x > 9 { x - 9 } else { x }
            } else {
                d
            }
        })
        .sum();
    (10 - sum % 10) % 10
}

pub fn luhn_valid(digits: &str) -> bool {
    let ds: Option<Vec<u32>> = digits.chars().map(|c| c.to_digit(10)).collect();
    match ds {
        Some(ds) if ds.len() >= 2 => {
            let (payload, check) = ds.split_at(ds.len() - 1);
            luhn_check_digit(payload) == check[0]
        }
        _ => false,
    }
}

impl FormatSpec {
    /// Compiles a definition. Name-index formats take their lists from `names`.
    pub fn compile(name: &str, def: FormatDef, names: &Arc<NameIndex>) -> Result<Self, FormatDefError> {
        let pattern = Regex::new(&format!("^(?:{})$", def.pattern))?;
        let strategy = match &def.rank {
            RankDef::Alphabet { alphabet, luhn } => {
                let symbols: Vec<char> = alphabet.chars().collect();
                let mut sorted = symbols.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if symbols.len() < 2 || sorted.len() != symbols.len() {
                    return Err(FormatDefError::Invalid(
                        "alphabet needs at least two distinct symbols".into(),
                    ));
                }
                if *luhn && alphabet != DIGITS {
                    return Err(FormatDefError::Invalid("luhn requires the decimal alphabet".into()));
                }
                Strategy::Alphabet { symbols, luhn: *luhn }
            }
            RankDef::IntegerRange { lo, hi } => {
                if hi <= lo {
                    return Err(FormatDefError::Invalid("integer range needs at least two values".into()));
                }
                Strategy::IntegerRange { lo: *lo, hi: *hi }
            }
            RankDef::Date { min, max, layouts } => {
                let parse = |s: &str| {
                    NaiveDate::parse_from_str(s, "%Y-%m-%d")
                        .map_err(|e| FormatDefError::Invalid(format!("date bound {s:?}: {e}")))
                };
                let (min, max) = (parse(min)?, parse(max)?);
                if max <= min || layouts.is_empty() {
                    return Err(FormatDefError::Invalid("empty date range or no layouts".into()));
                }
                Strategy::Date { min, max, layouts: layouts.clone() }
            }
            RankDef::Enumerated { values } => {
                let lowered: Vec<String> = values.iter().map(|v| v.to_lowercase()).collect();
                let mut dedup = lowered.clone();
                dedup.sort();
                dedup.dedup();
                if lowered.len() < 2 || dedup.len() != lowered.len() {
                    return Err(FormatDefError::Invalid("need at least two distinct values".into()));
                }
                Strategy::Enumerated { values: lowered }
            }
            RankDef::NameIndex => Strategy::NameIndex(names.clone()),
            RankDef::MoneySkeleton => Strategy::Money,
        };
        Ok(Self { name: name.to_owned(), def, pattern, strategy })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn def(&self) -> &FormatDef {
        &self.def
    }

    pub fn pattern(&self) -> &Regex {
        &self.pattern
    }

    pub fn matches(&self, text: &str) -> bool {
        self.pattern.is_match(text)
    }

    /// Whether `text` can be encrypted under this format: it matches the
    /// pattern and falls inside the rankable domain.
    pub fn accepts(&self, text: &str) -> bool {
        if !self.matches(text) {
            return false;
        }
        match &self.strategy {
            Strategy::NameIndex(_) => true,
            Strategy::Money => MoneySkeleton::parse(text)
                .is_ok_and(|(_, digits)| digits.len() + super::money::NINE_PREFIX.len() <= 37),
            _ => self.rank(text).is_ok(),
        }
    }

    pub fn is_name_index(&self) -> bool {
        matches!(self.strategy, Strategy::NameIndex(_))
    }

    pub fn is_money(&self) -> bool {
        matches!(self.strategy, Strategy::Money)
    }

    pub(crate) fn mismatch(&self, text: &str) -> FpeError {
        FpeError::FormatMismatch { format: self.name.clone(), text: text.to_owned() }
    }

    /// Domain size for fixed-size formats; `None` when it depends on the token
    /// (alphabet and money formats with variable length).
    pub fn fixed_size(&self) -> Option<u128> {
        match &self.strategy {
            Strategy::IntegerRange { lo, hi } => Some((hi - lo) as u128 + 1),
            Strategy::Date { min, max, .. } => Some((*max - *min).num_days() as u128 + 1),
            Strategy::Enumerated { values } => Some(values.len() as u128),
            Strategy::NameIndex(_) => Some(NAME_DOMAIN),
            Strategy::Alphabet { .. } | Strategy::Money => None,
        }
    }

    /// Public shape of a token: what an observer of the ciphertext learns
    /// about the plaintext beyond its type.
    pub fn shape(&self, text: &str) -> String {
        match &self.strategy {
            Strategy::Alphabet { symbols, .. } => {
                text.chars().map(|c| if symbols.contains(&c) { '#' } else { c }).collect()
            }
            Strategy::Money => match MoneySkeleton::parse(text) {
                Ok((sk, digits)) => sk.render(&"#".repeat(digits.len())),
                Err(_) => "?".into(),
            },
            Strategy::Date { layouts, .. } => layouts
                .iter()
                .find(|l| NaiveDate::parse_from_str(text, l).is_ok())
                .cloned()
                .unwrap_or_else(|| "?".into()),
            Strategy::Enumerated { .. } => format!("{:?}", CaseStyle::of(text)),
            Strategy::IntegerRange { .. } | Strategy::NameIndex(_) => String::new(),
        }
    }

    /// Maps a string of this format to its index. Name and money formats are
    /// ranked by their dedicated routines.
    pub fn rank(&self, text: &str) -> Result<Ranked, FpeError> {
        if !self.matches(text) {
            return Err(self.mismatch(text));
        }
        match &self.strategy {
            Strategy::Alphabet { symbols, luhn } => {
                let radix = symbols.len() as u128;
                let mut template = Vec::new();
                let mut digits = Vec::new();
                for c in text.chars() {
                    match symbols.iter().position(|s| *s == c) {
                        Some(d) => {
                            template.push(None);
                            digits.push(d as u32);
                        }
                        None => template.push(Some(c)),
                    }
                }
                let ranked_digits = if *luhn {
                    let (payload, check) = match digits.split_last() {
                        Some((c, p)) if !p.is_empty() => (p, *c),
                        _ => return Err(self.mismatch(text)),
                    };
                    if luhn_check_digit(payload) != check {
                        return Err(self.mismatch(text));
                    }
                    payload
                } else {
                    &digits[..]
                };
                let size = radix
                    .checked_pow(ranked_digits.len() as u32)
                    .ok_or(FpeError::DomainTooLarge(u128::MAX))?;
                let index = ranked_digits.iter().fold(0u128, |acc, d| acc * radix + *d as u128);
                Ok(Ranked { index, size, layout: Layout::Template(template) })
            }
            Strategy::IntegerRange { lo, hi } => {
                let v: u64 = text.parse().map_err(|_| self.mismatch(text))?;
                if v < *lo || v > *hi || v.to_string() != text {
                    return Err(self.mismatch(text));
                }
                Ok(Ranked { index: (v - lo) as u128, size: (hi - lo) as u128 + 1, layout: Layout::Plain })
            }
            Strategy::Date { min, max, layouts } => {
                for layout in layouts {
                    if let Ok(date) = NaiveDate::parse_from_str(text, layout) {
                        if date < *min || date > *max || date.format(layout).to_string() != text {
                            continue;
                        }
                        return Ok(Ranked {
                            index: (date - *min).num_days() as u128,
                            size: (*max - *min).num_days() as u128 + 1,
                            layout: Layout::Date(layout.clone()),
                        });
                    }
                }
                Err(self.mismatch(text))
            }
            Strategy::Enumerated { values } => {
                let lower = text.to_lowercase();
                let index = values.iter().position(|v| *v == lower).ok_or_else(|| self.mismatch(text))?;
                Ok(Ranked {
                    index: index as u128,
                    size: values.len() as u128,
                    layout: Layout::Case(CaseStyle::of(text)),
                })
            }
            Strategy::NameIndex(_) | Strategy::Money => Err(FpeError::Unsupported(self.name.clone())),
        }
    }

    /// Renders `index` with the layout captured by a previous [`rank`](Self::rank).
    pub fn unrank(&self, index: u128, like: &Ranked) -> Result<String, FpeError> {
        if index >= like.size {
            return Err(FpeError::IndexOutOfRange { index, size: like.size });
        }
        match (&self.strategy, &like.layout) {
            (Strategy::Alphabet { symbols, luhn }, Layout::Template(template)) => {
                let radix = symbols.len() as u128;
                let slots = template.iter().filter(|t| t.is_none()).count();
                let ranked_len = if *luhn { slots - 1 } else { slots };
                let mut digits = vec![0u32; ranked_len];
                let mut rest = index;
                for d in digits.iter_mut().rev() {
                    *d = (rest % radix) as u32;
                    rest /= radix;
                }
                if *luhn {
                    let check = luhn_check_digit(&digits);
                    digits.push(check);
                }
                let mut it = digits.into_iter();
                Ok(template
                    .iter()
                    .map(|slot| match slot {
                        Some(c) => *c,
                        None => symbols[it.next().expect("slot count matches") as usize],
                    })
                    .collect())
            }
            (Strategy::IntegerRange { lo, .. }, Layout::Plain) => Ok((*lo as u128 + index).to_string()),
            (Strategy::Date { min, .. }, Layout::Date(layout)) => {
                let date = *min + chrono::Days::new(index as u64);
                Ok(date.format(layout).to_string())
            }
            (Strategy::Enumerated { values }, Layout::Case(style)) => Ok(style.apply(&values[index as usize])),
            _ => Err(FpeError::Unsupported(self.name.clone())),
        }
    }
}

/// Formats shipped with the crate, keyed by the name used in config files.
pub fn builtin_def(name: &str) -> Option<FormatDef> {
    let alphabet = |pattern: &str, luhn| FormatDef {
        pattern: pattern.to_owned(),
        rank: RankDef::Alphabet { alphabet: DIGITS.to_owned(), luhn },
    };
    Some(match name {
        "ssn" => alphabet(r"\d{3}-\d{2}-\d{4}", false),
        "credit_card" => alphabet(r"\d{4}-\d{4}-\d{4}-\d{4}|\d{4} \d{4} \d{4} \d{4}|\d{16}", true),
        "zipcode" => alphabet(r"\d{5}(?:-\d{4})?", false),
        "phone" => alphabet(r"\(\d{3}\) ?\d{3}-\d{4}|\d{3}[-.]\d{3}[-.]\d{4}", false),
        "bank_account" => alphabet(r"\d{8,17}", false),
        "password" => FormatDef {
            pattern: r"\S{6,64}".to_owned(),
            rank: RankDef::Alphabet { alphabet: ALPHANUMERIC.to_owned(), luhn: false },
        },
        "date" => FormatDef {
            pattern: r"\d{4}-\d{2}-\d{2}|\d{2}/\d{2}/\d{4}|\d{2}\.\d{2}\.\d{4}".to_owned(),
            rank: RankDef::Date {
                min: "1900-01-01".into(),
                max: "2099-12-31".into(),
                layouts: default_date_layouts(),
            },
        },
        "sex" => FormatDef {
            pattern: r"(?i:male|female)".to_owned(),
            rank: RankDef::Enumerated { values: vec!["male".into(), "female".into()] },
        },
        "name" => FormatDef {
            pattern: r"\p{L}[\p{L}.'-]*(?: \p{L}[\p{L}.'-]*)*".to_owned(),
            rank: RankDef::NameIndex,
        },
        "money" => FormatDef {
            pattern: r"\d{1,3}(?:[, ']\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?".to_owned(),
            rank: RankDef::MoneySkeleton,
        },
        "two_digit" => FormatDef {
            pattern: r"\d{2}".to_owned(),
            rank: RankDef::IntegerRange { lo: 10, hi: 99 },
        },
        "four_digit" => alphabet(r"\d{4}", false),
        _ => return None,
    })
}

pub const BUILTIN_FORMATS: [&str; 12] = [
    "ssn",
    "credit_card",
    "zipcode",
    "phone",
    "bank_account",
    "password",
    "date",
    "sex",
    "name",
    "money",
    "two_digit",
    "four_digit",
];

pub fn builtin(name: &str, names: &Arc<NameIndex>) -> Option<FormatSpec> {
    builtin_def(name).map(|def| FormatSpec::compile(name, def, names).expect("built-in formats compile"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: &str) -> FormatSpec {
        builtin(name, &NameIndex::builtin()).unwrap()
    }

    #[test]
    fn every_builtin_compiles() {
        for name in BUILTIN_FORMATS {
            assert!(builtin(name, &NameIndex::builtin()).is_some(), "{name}");
        }
    }

    #[test]
    fn luhn_reference() {
        assert!(luhn_valid("4111111111111111"));
        assert!(luhn_valid("79927398713"));
        assert!(!luhn_valid("4111111111111112"));
    }

    #[test]
    fn alphabet_rank_unrank() {
        let ssn = spec("ssn");
        let r = ssn.rank("055-46-6168").unwrap();
        assert_eq!(r.index, 55_466_168);
        assert_eq!(r.size, 1_000_000_000);
        assert_eq!(ssn.unrank(r.index, &r).unwrap(), "055-46-6168");
        assert_eq!(ssn.unrank(7, &r).unwrap(), "000-00-0007");
        assert!(ssn.rank("55-46-6168").is_err());
    }

    #[test]
    fn luhn_card_rank() {
        let cc = spec("credit_card");
        let r = cc.rank("4111-1111-1111-1111").unwrap();
        assert_eq!(r.size, 10u128.pow(15));
        let other = cc.unrank(123, &r).unwrap();
        assert!(luhn_valid(&other.replace('-', "")));
        assert!(other.starts_with("0000-0000-0000-123"));
        assert!(cc.rank("4111-1111-1111-1112").is_err());
    }

    #[test]
    fn integer_range_rank() {
        let two = spec("two_digit");
        assert_eq!(two.fixed_size(), Some(90));
        let r = two.rank("10").unwrap();
        assert_eq!(r.index, 0);
        assert_eq!(two.unrank(89, &r).unwrap(), "99");
        assert!(two.rank("09").is_err());
    }

    #[test]
    fn date_rank_keeps_layout() {
        let date = spec("date");
        let r = date.rank("03/15/1987").unwrap();
        assert_eq!(date.unrank(r.index, &r).unwrap(), "03/15/1987");
        assert_eq!(date.unrank(0, &r).unwrap(), "01/01/1900");
        let iso = date.rank("2000-02-29").unwrap();
        assert_eq!(date.unrank(iso.index, &iso).unwrap(), "2000-02-29");
        assert!(date.rank("2001-02-29").is_err());
    }

    #[test]
    fn enumerated_keeps_case() {
        let sex = spec("sex");
        let r = sex.rank("Female").unwrap();
        assert_eq!(sex.unrank(0, &r).unwrap(), "Male");
        let r = sex.rank("MALE").unwrap();
        assert_eq!(sex.unrank(1, &r).unwrap(), "FEMALE");
    }

    #[test]
    fn shapes_hide_values() {
        assert_eq!(spec("ssn").shape("055-46-6168"), "###-##-####");
        assert_eq!(spec("money").shape("12,345.67"), "##,###.##");
        assert_eq!(spec("ssn").shape("123-45-6789"), spec("ssn").shape("055-46-6168"));
    }

    #[test]
    fn config_syntax_round_trips() {
        let def = builtin_def("credit_card").unwrap();
        let text = toml::to_string(&def).unwrap();
        assert!(text.contains("rank = \"alphabet\""));
        let back: FormatDef = toml::from_str(&text).unwrap();
        assert_eq!(back, def);
        let digits: FormatDef = toml::from_str("pattern = '\\d{4}'\nrank = 'digits'").unwrap();
        assert_eq!(digits.rank, RankDef::Alphabet { alphabet: DIGITS.into(), luhn: false });
    }

    #[test]
    fn rejects_bad_defs() {
        let names = NameIndex::builtin();
        let bad_alpha = FormatDef {
            pattern: ".".into(),
            rank: RankDef::Alphabet { alphabet: "a".into(), luhn: false },
        };
        assert!(FormatSpec::compile("x", bad_alpha, &names).is_err());
        let bad_regex = FormatDef { pattern: "(".into(), rank: RankDef::NameIndex };
        assert!(matches!(FormatSpec::compile("x", bad_regex, &names), Err(FormatDefError::Pattern(_))));
        let bad_range = FormatDef { pattern: r"\d".into(), rank: RankDef::IntegerRange { lo: 3, hi: 3 } };
        assert!(FormatSpec::compile("x", bad_range, &names).is_err());
    }
}
