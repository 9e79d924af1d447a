//! Session configuration: key reference, privacy budget and the type
//! registry.
//!
//! The file is TOML:
//!
//! ```toml
//! key_file = "psan.key"        # relative to the config file; never inline
//! security_bits = 256
//! epsilon_total = 1.0
//! reference_year = 2025
//!
//! [names]                      # optional, defaults to the built-in lists
//! first = "first.txt"
//! last = "last.txt"
//! default_first = "Aapo"
//! default_last = "Aalts"
//!
//! [types.SSN]
//! category = "I"
//! format = "ssn"               # built-in name or an inline format table
//!
//! [types.Age]
//! category = "II"
//! domain = { lo = 10, hi = 99 } # optional `step`, default 1
//! ```
//!
//! Types not listed keep their defaults. A listed type replaces its default
//! entry entirely.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fpe::{self, FormatDef, FormatSpec, NameIndex};
use crate::key::{SanitizerKey, DEFAULT_SECURITY_BITS};
use crate::mldp::IntegerDomain;
use crate::types::{Category, SensitiveType};

pub const DEFAULT_REFERENCE_YEAR: i64 = 2025;
pub const DEFAULT_EPSILON: f64 = 1.0;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },
    #[error("key: {0}")]
    Key(#[from] crate::key::KeyError),
    #[error("unknown sensitive type {0}")]
    UnknownType(String),
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Validation { field: field.into(), reason: reason.into() }
}

/// How tokens of one type are sanitized.
#[derive(Clone, Debug, PartialEq)]
pub enum Treatment {
    /// Category I: format-preserving encryption. `builtin` records whether
    /// the format was referenced by its built-in name.
    Encrypt { format: FormatSpec, builtin: bool },
    /// Category II: mLDP over an integer domain.
    Perturb { domain: IntegerDomain },
}

impl Treatment {
    pub fn category(&self) -> Category {
        match self {
            Treatment::Encrypt { .. } => Category::I,
            Treatment::Perturb { .. } => Category::II,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    key_file: PathBuf,
    #[serde(default = "default_bits")]
    security_bits: u32,
    epsilon_total: f64,
    #[serde(default = "default_year")]
    reference_year: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    names: Option<NamesDef>,
    #[serde(default)]
    types: BTreeMap<String, RawType>,
}

fn default_bits() -> u32 {
    DEFAULT_SECURITY_BITS
}

fn default_year() -> i64 {
    DEFAULT_REFERENCE_YEAR
}

/// Custom name lists, paths relative to the config file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamesDef {
    pub first: PathBuf,
    pub last: PathBuf,
    pub default_first: String,
    pub default_last: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawType {
    category: Option<Category>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    format: Option<FormatRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<RawDomain>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum FormatRef {
    Builtin(String),
    Inline(FormatDef),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    lo: i64,
    hi: i64,
    #[serde(default = "one")]
    step: i64,
}

fn one() -> i64 {
    1
}

/// Validated, immutable session configuration.
#[derive(Clone, Debug)]
pub struct SanitizerConfig {
    key: SanitizerKey,
    key_file: PathBuf,
    security_bits: u32,
    epsilon_total: f64,
    reference_year: i64,
    names: Arc<NameIndex>,
    names_def: Option<NamesDef>,
    registry: BTreeMap<SensitiveType, Treatment>,
}

impl PartialEq for SanitizerConfig {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
            && self.security_bits == other.security_bits
            && self.epsilon_total == other.epsilon_total
            && self.reference_year == other.reference_year
            && self.names == other.names
            && self.registry == other.registry
    }
}

/// Calendar-year type used for birth years derived from ages.
pub fn year_type() -> SensitiveType {
    SensitiveType::Custom("Year".into())
}

/// Built-in format used for a type when no config overrides it.
pub fn default_format_name(ty: &SensitiveType) -> Option<&'static str> {
    Some(match ty {
        SensitiveType::Name => "name",
        SensitiveType::Money => "money",
        SensitiveType::Ssn => "ssn",
        SensitiveType::CreditCard => "credit_card",
        SensitiveType::Zipcode => "zipcode",
        SensitiveType::Phone => "phone",
        SensitiveType::Date => "date",
        SensitiveType::Password => "password",
        SensitiveType::Sex => "sex",
        SensitiveType::BankAccount => "bank_account",
        SensitiveType::Age => "two_digit",
        SensitiveType::Custom(_) => return None,
    })
}

/// The registry used for types a config file does not mention.
pub fn default_registry(names: &Arc<NameIndex>) -> BTreeMap<SensitiveType, Treatment> {
    let mut reg = BTreeMap::new();
    for ty in SensitiveType::BUILTIN {
        let treatment = match ty {
            SensitiveType::Age => Treatment::Perturb { domain: IntegerDomain::range(10, 99).expect("valid") },
            SensitiveType::Money => {
                Treatment::Perturb { domain: IntegerDomain::new(0, 200_000, 100).expect("valid") }
            }
            _ => {
                let name = default_format_name(&ty).expect("built-in types have formats");
                Treatment::Encrypt { format: fpe::builtin(name, names).expect("built-in"), builtin: true }
            }
        };
        reg.insert(ty, treatment);
    }
    reg.insert(year_type(), Treatment::Perturb { domain: IntegerDomain::range(1900, 2025).expect("valid") });
    reg
}

fn check_epsilon(epsilon: f64) -> Result<(), ConfigError> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(invalid("epsilon_total", format!("must be positive and finite, got {epsilon}")))
    }
}

impl SanitizerConfig {
    /// Default registry, budget and reference year around an in-memory key.
    pub fn with_key(key: SanitizerKey) -> Self {
        let names = NameIndex::builtin();
        Self {
            security_bits: key.security_bits(),
            key,
            key_file: PathBuf::from("psan.key"),
            epsilon_total: DEFAULT_EPSILON,
            reference_year: DEFAULT_REFERENCE_YEAR,
            registry: default_registry(&names),
            names,
            names_def: None,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Self::from_raw(raw, base, None)
    }

    /// Like [`from_toml`](Self::from_toml) with the key supplied directly,
    /// ignoring `key_file`.
    pub fn from_toml_with_key(text: &str, base: &Path, key: SanitizerKey) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Self::from_raw(raw, base, Some(key))
    }

    fn from_raw(raw: RawConfig, base: &Path, key: Option<SanitizerKey>) -> Result<Self, ConfigError> {
        check_epsilon(raw.epsilon_total)?;
        if raw.security_bits != 128 && raw.security_bits != 256 {
            return Err(invalid("security_bits", format!("must be 128 or 256, got {}", raw.security_bits)));
        }
        let key = match key {
            Some(k) => k,
            None => SanitizerKey::read_file(base.join(&raw.key_file))?,
        };
        if key.security_bits() != raw.security_bits {
            return Err(invalid(
                "key_file",
                format!("key has {} bits, config requires {}", key.security_bits(), raw.security_bits),
            ));
        }
        let names = match &raw.names {
            None => NameIndex::builtin(),
            Some(def) => Arc::new(
                NameIndex::from_files(
                    &base.join(&def.first),
                    &base.join(&def.last),
                    &def.default_first,
                    &def.default_last,
                )
                .map_err(|e| invalid("names", e.to_string()))?,
            ),
        };
        let mut registry = default_registry(&names);
        for (label, entry) in &raw.types {
            let ty: SensitiveType = label.parse().unwrap_or_else(|never| match never {});
            let field = format!("types.{label}");
            let category = entry
                .category
                .ok_or_else(|| invalid(format!("{field}.category"), "missing"))?;
            let treatment = match category {
                Category::I => {
                    if entry.domain.is_some() {
                        return Err(invalid(format!("{field}.domain"), "category I types take a format"));
                    }
                    let format = entry
                        .format
                        .as_ref()
                        .ok_or_else(|| invalid(format!("{field}.format"), "category I types need a format"))?;
                    match format {
                        FormatRef::Builtin(name) => Treatment::Encrypt {
                            format: fpe::builtin(name, &names)
                                .ok_or_else(|| invalid(format!("{field}.format"), format!("unknown format {name:?}")))?,
                            builtin: true,
                        },
                        FormatRef::Inline(def) => Treatment::Encrypt {
                            format: FormatSpec::compile(&label.to_lowercase(), def.clone(), &names)
                                .map_err(|e| invalid(format!("{field}.format"), e.to_string()))?,
                            builtin: false,
                        },
                    }
                }
                Category::II => {
                    if entry.format.is_some() {
                        return Err(invalid(format!("{field}.format"), "category II types take a domain"));
                    }
                    let d = entry
                        .domain
                        .ok_or_else(|| invalid(format!("{field}.domain"), "category II types need a domain"))?;
                    Treatment::Perturb {
                        domain: IntegerDomain::new(d.lo, d.hi, d.step)
                            .map_err(|e| invalid(format!("{field}.domain"), e.to_string()))?,
                    }
                }
            };
            registry.insert(ty, treatment);
        }
        Ok(Self {
            key,
            key_file: raw.key_file,
            security_bits: raw.security_bits,
            epsilon_total: raw.epsilon_total,
            reference_year: raw.reference_year,
            names,
            names_def: raw.names,
            registry,
        })
    }

    /// TOML text listing every registry entry explicitly; loading it from the
    /// same directory yields an equal config.
    pub fn to_toml(&self) -> String {
        let types = self
            .registry
            .iter()
            .map(|(ty, t)| {
                let raw = match t {
                    Treatment::Encrypt { format, builtin } => RawType {
                        category: Some(Category::I),
                        format: Some(if *builtin {
                            FormatRef::Builtin(format.name().to_owned())
                        } else {
                            FormatRef::Inline(format.def().clone())
                        }),
                        domain: None,
                    },
                    Treatment::Perturb { domain } => RawType {
                        category: Some(Category::II),
                        format: None,
                        domain: Some(RawDomain { lo: domain.lo(), hi: domain.hi(), step: domain.step() }),
                    },
                };
                (ty.label().to_owned(), raw)
            })
            .collect();
        let raw = RawConfig {
            key_file: self.key_file.clone(),
            security_bits: self.security_bits,
            epsilon_total: self.epsilon_total,
            reference_year: self.reference_year,
            names: self.names_def.clone(),
            types,
        };
        toml::to_string(&raw).expect("config serializes")
    }

    /// Minimal config text for a freshly registered user.
    pub fn default_toml(key_file: &Path, security_bits: u32) -> String {
        let raw = RawConfig {
            key_file: key_file.to_owned(),
            security_bits,
            epsilon_total: DEFAULT_EPSILON,
            reference_year: DEFAULT_REFERENCE_YEAR,
            names: None,
            types: BTreeMap::new(),
        };
        toml::to_string(&raw).expect("config serializes")
    }

    pub fn key(&self) -> &SanitizerKey {
        &self.key
    }

    pub fn key_file(&self) -> &Path {
        &self.key_file
    }

    pub fn security_bits(&self) -> u32 {
        self.security_bits
    }

    pub fn epsilon_total(&self) -> f64 {
        self.epsilon_total
    }

    pub fn reference_year(&self) -> i64 {
        self.reference_year
    }

    pub fn names(&self) -> &Arc<NameIndex> {
        &self.names
    }

    pub fn registry(&self) -> &BTreeMap<SensitiveType, Treatment> {
        &self.registry
    }

    pub fn treatment(&self, ty: &SensitiveType) -> Result<&Treatment, ConfigError> {
        self.registry.get(ty).ok_or_else(|| ConfigError::UnknownType(ty.label().to_owned()))
    }

    pub fn category_of(&self, ty: &SensitiveType) -> Result<Category, ConfigError> {
        self.treatment(ty).map(Treatment::category)
    }

    /// Copy with another key; used where every run needs a fresh key.
    pub fn with_replaced_key(&self, key: SanitizerKey) -> Self {
        Self { security_bits: key.security_bits(), key, ..self.clone() }
    }

    pub fn with_epsilon(&self, epsilon_total: f64) -> Result<Self, ConfigError> {
        check_epsilon(epsilon_total)?;
        Ok(Self { epsilon_total, ..self.clone() })
    }

    pub fn with_reference_year(&self, reference_year: i64) -> Self {
        Self { reference_year, ..self.clone() }
    }

    /// Copy with one registry entry replaced or added.
    pub fn with_treatment(&self, ty: SensitiveType, treatment: Treatment) -> Self {
        let mut registry = self.registry.clone();
        registry.insert(ty, treatment);
        Self { registry, ..self.clone() }
    }
}
