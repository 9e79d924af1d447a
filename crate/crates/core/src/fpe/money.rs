//! Monetary amounts: six `9`s are prepended to the digits before enciphering,
//! so a decrypted value that does not start with them was never produced by
//! us. Group separators and the decimal point are re-inserted around the
//! enciphered digits.

use super::FpeError;

pub const NINE_PREFIX: &str = "999999";

/// Layout of a monetary string: where its digits sit relative to separators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoneySkeleton {
    /// Thousands separator, when the integer part is grouped.
    pub group: Option<char>,
    /// Digits after the decimal point; `None` when there is no point.
    pub fraction_digits: Option<usize>,
}

impl MoneySkeleton {
    /// Splits `text` into its skeleton and bare digits.
    pub fn parse(text: &str) -> Result<(Self, String), FpeError> {
        let mismatch = || FpeError::FormatMismatch { format: "money".into(), text: text.to_owned() };
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (text, None),
        };
        if let Some(f) = frac_part {
            if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
                return Err(mismatch());
            }
        }
        let group = int_part.chars().find(|c| !c.is_ascii_digit());
        if let Some(g) = group {
            if !matches!(g, ',' | ' ' | '\'') {
                return Err(mismatch());
            }
            let groups: Vec<&str> = int_part.split(g).collect();
            let head_ok = (1..=3).contains(&groups[0].len());
            let tail_ok = groups[1..].iter().all(|s| s.len() == 3);
            if !head_ok || !tail_ok || !groups.iter().all(|s| s.bytes().all(|b| b.is_ascii_digit())) {
                return Err(mismatch());
            }
        } else if int_part.is_empty() {
            return Err(mismatch());
        }
        let digits: String = text.chars().filter(char::is_ascii_digit).collect();
        Ok((Self { group, fraction_digits: frac_part.map(str::len) }, digits))
    }

    /// Inverse of [`parse`](Self::parse) for any digit count.
    pub fn render(&self, digits: &str) -> String {
        let frac_len = self.fraction_digits.unwrap_or(0);
        let (int_digits, frac_digits) = digits.split_at(digits.len() - frac_len);
        let mut out = String::with_capacity(digits.len() + digits.len() / 3 + 1);
        match self.group {
            Some(g) => {
                let head = int_digits.len() % 3;
                let head = if head == 0 { 3.min(int_digits.len()) } else { head };
                out.push_str(&int_digits[..head]);
                for chunk in int_digits.as_bytes()[head..].chunks(3) {
                    out.push(g);
                    out.push_str(std::str::from_utf8(chunk).expect("ascii digits"));
                }
            }
            None => out.push_str(int_digits),
        }
        if self.fraction_digits.is_some() {
            out.push('.');
            out.push_str(frac_digits);
        }
        out
    }
}

pub(crate) fn digits_to_index(digits: &str) -> Result<u128, FpeError> {
    digits
        .parse::<u128>()
        .map_err(|_| FpeError::DomainTooLarge(u128::MAX))
}

pub(crate) fn index_to_digits(index: u128, width: usize) -> String {
    format!("{index:0width$}")
}
