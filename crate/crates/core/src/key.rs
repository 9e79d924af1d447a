//! Per-user secret key: generation and key-file IO.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use rand::rngs::OsRng;
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

/// Smallest accepted security parameter, in bits.
pub const MIN_SECURITY_BITS: u32 = 128;
pub const DEFAULT_SECURITY_BITS: u32 = 256;

#[derive(Debug, thiserror::Error)]
pub enum KeyError {
    #[error("unsupported security parameter {0} bits (expected 128 or 256)")]
    UnsupportedSecurityParameter(u32),
    #[error("operating system entropy source unavailable: {0}")]
    EntropyUnavailable(String),
    #[error("key material must be 16 or 32 bytes, got {0}")]
    BadLength(usize),
    #[error("key file is neither raw bytes nor hex: {0}")]
    Malformed(String),
    #[error("key file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

/// Secret key `K` shared by all sanitize/desanitize sessions of one user.
///
/// Never printed: `Debug` and `Display` show only the fingerprint.
#[derive(Clone, PartialEq, Eq)]
pub struct SanitizerKey {
    bytes: Vec<u8>,
}

impl SanitizerKey {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, KeyError> {
        match bytes.len() {
            16 | 32 => Ok(Self { bytes: bytes.to_vec() }),
            n => Err(KeyError::BadLength(n)),
        }
    }

    /// Draws a key from a caller-supplied CSPRNG. Used by the privacy game,
    /// which needs reproducible per-trial keys.
    pub fn from_rng<R: RngCore + CryptoRng>(rng: &mut R, security_bits: u32) -> Result<Self, KeyError> {
        let len = key_len(security_bits)?;
        let mut bytes = vec![0u8; len];
        rng.fill_bytes(&mut bytes);
        Ok(Self { bytes })
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn security_bits(&self) -> u32 {
        self.bytes.len() as u32 * 8
    }

    /// Short public fingerprint, safe to display.
    pub fn key_id(&self) -> String {
        let digest = Sha256::digest(&self.bytes);
        hex::encode(&digest[..4])
    }

    /// Reads a key file holding either raw key bytes or their hex encoding.
    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, KeyError> {
        let path = path.as_ref();
        let raw = fs::read(path).map_err(|source| KeyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_file_contents(&raw)
    }

    pub fn parse_file_contents(raw: &[u8]) -> Result<Self, KeyError> {
        if let Ok(text) = std::str::from_utf8(raw) {
            let trimmed = text.trim();
            if (trimmed.len() == 64 || trimmed.len() == 32)
                && trimmed.bytes().all(|b| b.is_ascii_hexdigit())
            {
                let bytes = hex::decode(trimmed).map_err(|e| KeyError::Malformed(e.to_string()))?;
                return Self::from_bytes(&bytes);
            }
        }
        match raw.len() {
            16 | 32 => Self::from_bytes(raw),
            n => Err(KeyError::Malformed(format!(
                "{n} bytes; expected 16/32 raw bytes or 32/64 hex characters"
            ))),
        }
    }

    /// Writes the key as hex. On unix the file is created owner-read/write only.
    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<(), KeyError> {
        let path = path.as_ref();
        let io_err = |source| KeyError::Io { path: path.display().to_string(), source };
        let mut options = fs::OpenOptions::new();
        options.write(true).create_new(true);
        #[cfg(unix)]
        {
            use std::os::unix::fs::OpenOptionsExt;
            options.mode(0o600);
        }
        let mut file = options.open(path).map_err(io_err)?;
        io::Write::write_all(&mut file, format!("{}\n", hex::encode(&self.bytes)).as_bytes())
            .map_err(io_err)
    }
}

impl fmt::Debug for SanitizerKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SanitizerKey")
            .field("key_id", &self.key_id())
            .field("bits", &self.security_bits())
            .finish()
    }
}

impl fmt::Display for SanitizerKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "key:{}", self.key_id())
    }
}

fn key_len(security_bits: u32) -> Result<usize, KeyError> {
    match security_bits {
        128 => Ok(16),
        256 => Ok(32),
        other => Err(KeyError::UnsupportedSecurityParameter(other)),
    }
}

/// Setup algorithm: a fresh uniformly random key from the OS entropy source.
pub fn keygen(security_bits: u32) -> Result<SanitizerKey, KeyError> {
    let len = key_len(security_bits)?;
    let mut bytes = vec![0u8; len];
    OsRng
        .try_fill_bytes(&mut bytes)
        .map_err(|e| KeyError::EntropyUnavailable(e.to_string()))?;
    Ok(SanitizerKey { bytes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keygen_lengths() {
        assert_eq!(keygen(256).unwrap().as_bytes().len(), 32);
        assert_eq!(keygen(128).unwrap().as_bytes().len(), 16);
    }

    #[test]
    fn keygen_rejects_small_parameters() {
        assert!(matches!(keygen(64), Err(KeyError::UnsupportedSecurityParameter(64))));
        assert!(matches!(keygen(0), Err(KeyError::UnsupportedSecurityParameter(0))));
    }

    #[test]
    fn keygen_twice_differs() {
        assert_ne!(keygen(256).unwrap(), keygen(256).unwrap());
    }

    #[test]
    fn debug_hides_material() {
        let key = SanitizerKey::from_bytes(&[0xab; 32]).unwrap();
        let shown = format!("{key:?} {key}");
        assert!(!shown.contains(&hex::encode([0xab; 32])));
        assert!(!shown.contains("171, 171"));
        assert!(shown.contains(&key.key_id()));
    }

    #[test]
    fn key_file_formats() {
        let key = SanitizerKey::from_bytes(&[7u8; 32]).unwrap();
        let hex_form = format!("{}\n", hex::encode([7u8; 32]));
        assert_eq!(SanitizerKey::parse_file_contents(hex_form.as_bytes()).unwrap(), key);
        assert_eq!(SanitizerKey::parse_file_contents(&[7u8; 32]).unwrap(), key);
        assert!(SanitizerKey::parse_file_contents(b"not a key").is_err());
        assert!(SanitizerKey::parse_file_contents(&[1u8; 31]).is_err());
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("user.key");
        let key = keygen(256).unwrap();
        key.write_file(&path).unwrap();
        assert_eq!(SanitizerKey::read_file(&path).unwrap(), key);
        // Refuses to clobber an existing key.
        assert!(key.write_file(&path).is_err());
    }
}
