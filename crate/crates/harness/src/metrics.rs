//! Scoring functions for model answers.

use psan_core::mldp::{self, IntegerDomain, MldpError};
use rust_decimal::prelude::*;
use serde::Serialize;

/// Adjusted errors below this replace the plain relative error.
pub const ADJUST_THRESHOLD: f64 = 0.1;

/// Largest domain for which the double sum is evaluated.
pub const EXACT_DOMAIN_LIMIT: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Score {
    pub value: f64,
    /// Set when the reference was zero and `value` is the absolute prediction.
    pub zero_reference: bool,
    /// Set when a sign flip or power-of-ten rescaling produced `value`.
    pub adjusted: bool,
}

fn rel(pred: Decimal, truth: Decimal) -> Option<f64> {
    ((pred - truth).abs() / truth.abs()).to_f64()
}

/// `|pred - truth| / |truth|`, or the smallest error of `±pred * 10^k`
/// (`k` in -4..=4) when that is below 0.1.
pub fn relative_error(pred: Decimal, truth: Decimal) -> Score {
    if truth.is_zero() {
        return Score { value: pred.abs().to_f64().unwrap_or(f64::INFINITY), zero_reference: true, adjusted: false };
    }
    let base = rel(pred, truth).unwrap_or(f64::INFINITY);
    let mut best = base;
    let mut best_is_base = true;
    for sign in [Decimal::ONE, Decimal::NEGATIVE_ONE] {
        for k in -4i32..=4 {
            let factor = if k >= 0 {
                Decimal::from(10i64.pow(k as u32))
            } else {
                Decimal::new(1, (-k) as u32)
            };
            let Some(candidate) = pred.checked_mul(sign * factor) else { continue };
            if let Some(e) = rel(candidate, truth) {
                if e < best {
                    best = e;
                    best_is_base = sign == Decimal::ONE && k == 0;
                }
            }
        }
    }
    if best < ADJUST_THRESHOLD && !best_is_base {
        Score { value: best, zero_reference: false, adjusted: true }
    } else {
        Score { value: base, zero_reference: false, adjusted: false }
    }
}

/// `|sanitized - clean| / |clean|`.
pub fn consistency(pred_sanitized: Decimal, pred_clean: Decimal) -> Score {
    if pred_clean.is_zero() {
        return Score {
            value: pred_sanitized.abs().to_f64().unwrap_or(f64::INFINITY),
            zero_reference: true,
            adjusted: false,
        };
    }
    Score { value: rel(pred_sanitized, pred_clean).unwrap_or(f64::INFINITY), zero_reference: false, adjusted: false }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OrderError {
    #[error(transparent)]
    Domain(#[from] MldpError),
    #[error("the two values are equal")]
    Equal,
    #[error("domain of {0} points exceeds the exact-sum limit of {EXACT_DOMAIN_LIMIT}")]
    TooLarge(usize),
}

/// Probability that independent perturbations of `a` and `b` keep their
/// order, counting ties as one half.
pub fn order_preservation_probability(a: i64, b: i64, epsilon: f64, domain: IntegerDomain) -> Result<f64, OrderError> {
    if a == b {
        return Err(OrderError::Equal);
    }
    if domain.size() > EXACT_DOMAIN_LIMIT {
        return Err(OrderError::TooLarge(domain.size()));
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let p = mldp::distribution(lo, epsilon, domain)?;
    let q = mldp::distribution(hi, epsilon, domain)?;
    let (p, q) = (p.probs(), q.probs());
    let mut total = 0.0;
    for (i, pi) in p.iter().enumerate() {
        for (j, qj) in q.iter().enumerate() {
            if i < j {
                total += pi * qj;
            } else if i == j {
                total += 0.5 * pi * qj;
            }
        }
    }
    Ok(total)
}
