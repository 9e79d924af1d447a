//! Format-preserving encryption of sensitive tokens.
//!
//! Every format ranks its strings into `[0, n)`; the keyed Feistel
//! permutation enciphers the rank, which is then rendered back in the same
//! format. Names and monetary amounts have their own ranking.

pub mod feistel;
pub mod format;
pub mod money;
pub mod names;

use crate::key::SanitizerKey;
use crate::types::SensitiveType;

pub use feistel::{FeistelCipher, MAX_DOMAIN};
pub use format::{builtin, builtin_def, luhn_valid, FormatDef, FormatDefError, FormatSpec, RankDef, BUILTIN_FORMATS};
pub use money::{MoneySkeleton, NINE_PREFIX};
pub use names::{NameContext, NameIndex, NameListError, RankedName, NAME_DOMAIN};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FpeError {
    #[error("domain of size {0} is too small to encipher")]
    DomainTooSmall(u128),
    #[error("domain of size {0} exceeds the supported maximum")]
    DomainTooLarge(u128),
    #[error("index {index} outside domain of size {size}")]
    IndexOutOfRange { index: u128, size: u128 },
    #[error("cycle walking did not terminate")]
    CycleWalkExceeded,
    #[error("{text:?} does not match format {format}")]
    FormatMismatch { format: String, text: String },
    #[error("{0:?} is not a ciphertext of this format")]
    NotACiphertext(String),
    #[error("format {0} has no generic ranking")]
    Unsupported(String),
}

/// Public per-call input that separates otherwise identical domains.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tweak(Vec<u8>);

impl Tweak {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Self {
        Self(bytes.into())
    }

    /// The default tweak: the type label.
    pub fn for_type(ty: &SensitiveType) -> Self {
        Self(ty.label().as_bytes().to_vec())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl From<&str> for Tweak {
    fn from(s: &str) -> Self {
        Self::new(s.as_bytes())
    }
}

/// Keyed FPE over all supported formats.
#[derive(Clone)]
pub struct FpeCipher {
    feistel: FeistelCipher,
}

fn small_domain_warning(format: &FormatSpec, size: u128) {
    if size < 100 {
        log::warn!(
            "format {} has only {size} values; its ciphertexts hide little",
            format.name()
        );
    }
}

impl FpeCipher {
    pub fn new(key: &SanitizerKey) -> Self {
        Self { feistel: FeistelCipher::new(key) }
    }

    pub fn feistel(&self) -> &FeistelCipher {
        &self.feistel
    }

    /// Encrypts one token. Name formats get a fresh [`NameContext`]; use
    /// [`encrypt_in`](Self::encrypt_in) to share one across a prompt.
    pub fn encrypt(&self, format: &FormatSpec, tweak: &Tweak, text: &str) -> Result<String, FpeError> {
        let mut ctx = self.fresh_context(format);
        self.encrypt_in(format, tweak, text, &mut ctx)
    }

    pub fn decrypt(&self, format: &FormatSpec, tweak: &Tweak, text: &str) -> Result<String, FpeError> {
        let ctx = self.fresh_context(format);
        self.decrypt_in(format, tweak, text, &ctx)
    }

    fn fresh_context(&self, format: &FormatSpec) -> NameContext {
        match &format.strategy {
            format::Strategy::NameIndex(idx) => NameContext::new(idx.clone()),
            _ => NameContext::new(NameIndex::builtin()),
        }
    }

    pub fn encrypt_in(
        &self,
        format: &FormatSpec,
        tweak: &Tweak,
        text: &str,
        ctx: &mut NameContext,
    ) -> Result<String, FpeError> {
        if !format.matches(text) {
            return Err(format.mismatch(text));
        }
        let t = tweak.as_bytes();
        match &format.strategy {
            format::Strategy::NameIndex(idx) => {
                let rank = ctx.rank(text);
                let y = self.feistel.encrypt_index(rank.index as u128, NAME_DOMAIN, t)?;
                Ok(idx.render_full(y as u32))
            }
            format::Strategy::Money => {
                let (skeleton, digits) = MoneySkeleton::parse(text)?;
                let prefixed = format!("{NINE_PREFIX}{digits}");
                let size = 10u128
                    .checked_pow(prefixed.len() as u32)
                    .filter(|n| *n <= MAX_DOMAIN)
                    .ok_or(FpeError::DomainTooLarge(u128::MAX))?;
                let x = money::digits_to_index(&prefixed)?;
                let y = self.feistel.encrypt_index(x, size, t)?;
                Ok(skeleton.render(&money::index_to_digits(y, prefixed.len())))
            }
            _ => {
                let ranked = format.rank(text)?;
                small_domain_warning(format, ranked.size);
                let y = self.feistel.encrypt_index(ranked.index, ranked.size, t)?;
                format.unrank(y, &ranked)
            }
        }
    }

    /// Decrypts one token. Name ciphertexts are read against the unmodified
    /// lists and rendered through `ctx`, which must hold the same
    /// replacements as when encrypting.
    pub fn decrypt_in(
        &self,
        format: &FormatSpec,
        tweak: &Tweak,
        text: &str,
        ctx: &NameContext,
    ) -> Result<String, FpeError> {
        if !format.matches(text) {
            return Err(format.mismatch(text));
        }
        let t = tweak.as_bytes();
        match &format.strategy {
            format::Strategy::NameIndex(idx) => {
                let ranked = idx
                    .rank_exact(text)
                    .ok_or_else(|| FpeError::NotACiphertext(text.to_owned()))?;
                let x = self.feistel.decrypt_index(ranked.index as u128, NAME_DOMAIN, t)?;
                Ok(ctx.render_plain(x as u32))
            }
            format::Strategy::Money => {
                let (skeleton, digits) = MoneySkeleton::parse(text)?;
                if digits.len() <= NINE_PREFIX.len() {
                    return Err(FpeError::NotACiphertext(text.to_owned()));
                }
                let size = 10u128
                    .checked_pow(digits.len() as u32)
                    .filter(|n| *n <= MAX_DOMAIN)
                    .ok_or(FpeError::DomainTooLarge(u128::MAX))?;
                let y = money::digits_to_index(&digits)?;
                let x = self.feistel.decrypt_index(y, size, t)?;
                let plain = money::index_to_digits(x, digits.len());
                let stripped = plain
                    .strip_prefix(NINE_PREFIX)
                    .ok_or_else(|| FpeError::NotACiphertext(text.to_owned()))?;
                Ok(skeleton.render(stripped))
            }
            _ => {
                let ranked = format.rank(text)?;
                let x = self.feistel.decrypt_index(ranked.index, ranked.size, t)?;
                format.unrank(x, &ranked)
            }
        }
    }
}

/// One-shot encryption with a throwaway cipher.
pub fn encrypt(key: &SanitizerKey, format: &FormatSpec, tweak: &Tweak, text: &str) -> Result<String, FpeError> {
    FpeCipher::new(key).encrypt(format, tweak, text)
}

pub fn decrypt(key: &SanitizerKey, format: &FormatSpec, tweak: &Tweak, text: &str) -> Result<String, FpeError> {
    FpeCipher::new(key).decrypt(format, tweak, text)
}
