//! Keyed permutation of `[0, n)` for arbitrary `n`.
//!
//! `n` is embedded in `Z_a × Z_b` with `a = ⌈√n⌉`, `b = ⌈n / a⌉`. A ten-round
//! alternating Feistel network permutes `Z_a × Z_b`; cycle walking maps the
//! permutation back onto `[0, n)`. Round functions are HMAC-SHA256 over the
//! domain size, tweak, round index and half-value.

use hmac::{Hmac, KeyInit, Mac};
use sha2::Sha256;

use super::FpeError;
use crate::key::SanitizerKey;

type HmacSha256 = Hmac<Sha256>;

pub const ROUNDS: u8 = 10;
/// Expected walk length is `a·b / n < 2`; hitting this means a bug.
pub const CYCLE_WALK_CAP: usize = 10_000;
/// Keeps `a·b` and the half sums inside `u128`.
pub const MAX_DOMAIN: u128 = 1 << 126;

const DOMAIN_SEPARATOR: &[u8] = b"psan/fpe/feistel/v1";

#[derive(Clone)]
pub struct FeistelCipher {
    mac: HmacSha256,
}

#[derive(Clone, Copy, Debug)]
struct Split {
    n: u128,
    a: u128,
    b: u128,
}

impl Split {
    fn new(n: u128) -> Result<Self, FpeError> {
        if n < 2 {
            return Err(FpeError::DomainTooSmall(n));
        }
        if n > MAX_DOMAIN {
            return Err(FpeError::DomainTooLarge(n));
        }
        let mut a = n.isqrt();
        if a * a < n {
            a += 1;
        }
        let b = n.div_ceil(a);
        debug_assert!(a * b >= n);
        Ok(Self { n, a, b })
    }

    fn modulus(&self, round: u8) -> u128 {
        if round % 2 == 0 {
            self.a
        } else {
            self.b
        }
    }
}

impl FeistelCipher {
    pub fn new(key: &SanitizerKey) -> Self {
        let mac = <HmacSha256 as KeyInit>::new_from_slice(key.as_bytes())
            .expect("HMAC accepts keys of any length");
        Self { mac }
    }

    fn round_value(&self, split: &Split, tweak: &[u8], round: u8, half: u128, modulus: u128) -> u128 {
        let mut mac = self.mac.clone();
        mac.update(DOMAIN_SEPARATOR);
        mac.update(&split.n.to_be_bytes());
        mac.update(&(tweak.len() as u32).to_be_bytes());
        mac.update(tweak);
        mac.update(&[round]);
        mac.update(&half.to_be_bytes());
        let tag = mac.finalize().into_bytes();
        let mut head = [0u8; 16];
        head.copy_from_slice(&tag[..16]);
        u128::from_be_bytes(head) % modulus
    }

    fn forward(&self, split: &Split, tweak: &[u8], x: u128) -> u128 {
        let (mut left, mut right) = (x / split.b, x % split.b);
        for round in 0..ROUNDS {
            let m = split.modulus(round);
            let f = self.round_value(split, tweak, round, right, m);
            let mixed = (left + f) % m;
            left = right;
            right = mixed;
        }
        left * split.b + right
    }

    fn backward(&self, split: &Split, tweak: &[u8], y: u128) -> u128 {
        let (mut left, mut right) = (y / split.b, y % split.b);
        for round in (0..ROUNDS).rev() {
            let m = split.modulus(round);
            let f = self.round_value(split, tweak, round, left, m);
            let prev_left = (right + m - f) % m;
            right = left;
            left = prev_left;
        }
        left * split.b + right
    }

    /// Enciphers `x ∈ [0, n)`.
    pub fn encrypt_index(&self, x: u128, n: u128, tweak: &[u8]) -> Result<u128, FpeError> {
        let split = Split::new(n)?;
        if x >= n {
            return Err(FpeError::IndexOutOfRange { index: x, size: n });
        }
        let mut y = x;
        for _ in 0..CYCLE_WALK_CAP {
            y = self.forward(&split, tweak, y);
            if y < n {
                return Ok(y);
            }
        }
        Err(FpeError::CycleWalkExceeded)
    }

    /// Inverse of [`encrypt_index`](Self::encrypt_index).
    pub fn decrypt_index(&self, y: u128, n: u128, tweak: &[u8]) -> Result<u128, FpeError> {
        let split = Split::new(n)?;
        if y >= n {
            return Err(FpeError::IndexOutOfRange { index: y, size: n });
        }
        let mut x = y;
        for _ in 0..CYCLE_WALK_CAP {
            x = self.backward(&split, tweak, x);
            if x < n {
                return Ok(x);
            }
        }
        Err(FpeError::CycleWalkExceeded)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cipher(byte: u8) -> FeistelCipher {
        FeistelCipher::new(&SanitizerKey::from_bytes(&[byte; 32]).unwrap())
    }

    #[test]
    fn split_covers_domain() {
        for n in [2u128, 3, 90, 99, 100, 101, 9999, 10_000, 1_000_000, 10u128.pow(15)] {
            let s = Split::new(n).unwrap();
            assert!(s.a * s.b >= n);
            assert!(s.a * (s.b - 1) < n || s.b == 1);
        }
        assert!(matches!(Split::new(1), Err(FpeError::DomainTooSmall(1))));
        assert!(matches!(Split::new(MAX_DOMAIN + 1), Err(FpeError::DomainTooLarge(_))));
    }

    #[test]
    fn permutes_small_domains() {
        let c = cipher(3);
        for n in [2u128, 3, 7, 90, 101, 1000, 4099] {
            let mut seen = vec![false; n as usize];
            for x in 0..n {
                let y = c.encrypt_index(x, n, b"t").unwrap();
                assert!(!seen[y as usize], "collision at n={n}");
                seen[y as usize] = true;
                assert_eq!(c.decrypt_index(y, n, b"t").unwrap(), x);
            }
        }
    }

    #[test]
    fn tweak_and_key_change_output() {
        let n = 10u128.pow(9);
        let x = 55_466_168;
        let base = cipher(1).encrypt_index(x, n, b"SSN").unwrap();
        assert_ne!(base, cipher(1).encrypt_index(x, n, b"Zipcode").unwrap());
        assert_ne!(base, cipher(2).encrypt_index(x, n, b"SSN").unwrap());
        assert_eq!(base, cipher(1).encrypt_index(x, n, b"SSN").unwrap());
    }

    #[test]
    fn large_domain_round_trip() {
        let c = cipher(9);
        let n = 10u128.pow(37);
        for x in [0, 1, n / 3, n - 1] {
            let y = c.encrypt_index(x, n, b"Money").unwrap();
            assert!(y < n);
            assert_eq!(c.decrypt_index(y, n, b"Money").unwrap(), x);
        }
    }

    #[test]
    fn rejects_out_of_range_index() {
        assert!(matches!(
            cipher(0).encrypt_index(90, 90, b""),
            Err(FpeError::IndexOutOfRange { index: 90, size: 90 })
        ));
    }
}
