//! Exponential mechanism over a bounded integer domain, satisfying metric
//! local differential privacy for the ℓ1 distance between domain indices.
//!
//! For a true index `x` in a domain of `k` values the output index `i` is
//! drawn with probability proportional to `exp(-|x - i| * ε / 2)`.
//!
//! Distributions are computed exactly as vectors (O(k)) so that the harness
//! can check the mechanism's guarantees without sampling. Distances are
//! measured in index steps: for a domain with `step = 100`, two values 100
//! apart are at distance 1.

use rand::Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MldpError {
    #[error("invalid domain {lo}..={hi} step {step}")]
    InvalidDomain { lo: i64, hi: i64, step: i64 },
    #[error("value {value} is not a point of the domain {lo}..={hi} step {step}")]
    Domain { value: i64, lo: i64, hi: i64, step: i64 },
    #[error("privacy budget must be positive and finite, got {0}")]
    Budget(f64),
}

/// The output domain `{lo, lo + step, …, hi}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct IntegerDomain {
    lo: i64,
    hi: i64,
    step: i64,
}

impl IntegerDomain {
    /// `hi - lo` must be a multiple of `step`.
    pub fn new(lo: i64, hi: i64, step: i64) -> Result<Self, MldpError> {
        let bad = MldpError::InvalidDomain { lo, hi, step };
        if step <= 0 || lo > hi {
            return Err(bad);
        }
        let width = hi.checked_sub(lo).ok_or(bad.clone())?;
        if width % step != 0 {
            return Err(bad);
        }
        Ok(Self { lo, hi, step })
    }

    pub fn range(lo: i64, hi: i64) -> Result<Self, MldpError> {
        Self::new(lo, hi, 1)
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn step(&self) -> i64 {
        self.step
    }

    /// Number of points `k`.
    pub fn size(&self) -> usize {
        ((self.hi - self.lo) / self.step) as usize + 1
    }

    pub fn value_at(&self, index: usize) -> i64 {
        debug_assert!(index < self.size());
        self.lo + index as i64 * self.step
    }

    pub fn index_of(&self, value: i64) -> Result<usize, MldpError> {
        if value < self.lo || value > self.hi || (value - self.lo) % self.step != 0 {
            return Err(MldpError::Domain { value, lo: self.lo, hi: self.hi, step: self.step });
        }
        Ok(((value - self.lo) / self.step) as usize)
    }

    pub fn contains(&self, value: i64) -> bool {
        self.index_of(value).is_ok()
    }

    /// Nearest domain point to an arbitrary real value. The flag is set when
    /// the value lay outside `[lo, hi]` and was clamped to an endpoint.
    pub fn nearest_index(&self, value: f64) -> (usize, bool) {
        if value.is_nan() || value <= self.lo as f64 {
            return (0, value.is_nan() || value < self.lo as f64);
        }
        if value >= self.hi as f64 {
            return (self.size() - 1, value > self.hi as f64);
        }
        let idx = ((value - self.lo as f64) / self.step as f64).round() as usize;
        (idx.min(self.size() - 1), false)
    }
}

fn check_epsilon(epsilon: f64) -> Result<(), MldpError> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(MldpError::Budget(epsilon))
    }
}

/// Exact output distribution of the mechanism for one true value.
///
/// `probs` may contain 0.0 where `|x - i| * ε / 2` exceeds the f64 exponent
/// range (about 745); `log_probs` stays finite everywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct MldpDistribution {
    domain: IntegerDomain,
    x_index: usize,
    epsilon: f64,
    probs: Vec<f64>,
    log_probs: Vec<f64>,
}

impl MldpDistribution {
    fn compute(x_index: usize, epsilon: f64, domain: IntegerDomain) -> Self {
        let k = domain.size();
        let max_distance = x_index.max(k - 1 - x_index);
        // One weight per distance so equal distances give bit-identical
        // probabilities. The exponent is already max-shifted: distance 0
        // has weight exactly 1.
        let log_weights: Vec<f64> = (0..=max_distance).map(|d| -(d as f64) * epsilon / 2.0).collect();
        let weights: Vec<f64> = log_weights.iter().map(|w| w.exp()).collect();
        let z: f64 = (0..k).map(|i| weights[x_index.abs_diff(i)]).sum();
        let log_z = z.ln();
        let probs = (0..k).map(|i| weights[x_index.abs_diff(i)] / z).collect();
        let log_probs = (0..k).map(|i| log_weights[x_index.abs_diff(i)] - log_z).collect();
        Self { domain, x_index, epsilon, probs, log_probs }
    }

    pub fn domain(&self) -> IntegerDomain {
        self.domain
    }

    pub fn x_index(&self) -> usize {
        self.x_index
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    /// Probability of emitting the given domain value (0 if outside).
    pub fn prob_of(&self, value: i64) -> f64 {
        self.domain.index_of(value).map_or(0.0, |i| self.probs[i])
    }

    /// Inverse-CDF draw of an output index.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut cumulative = 0.0;
        let mut last_positive = self.x_index;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > 0.0 {
                last_positive = i;
            }
            cumulative += p;
            if u < cumulative {
                return i;
            }
        }
        // Rounding left the total a hair below 1.
        last_positive
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        self.domain.value_at(self.sample_index(rng))
    }
}

/// Distribution of the mechanism for true value `x` with budget `epsilon`.
pub fn distribution(x: i64, epsilon: f64, domain: IntegerDomain) -> Result<MldpDistribution, MldpError> {
    check_epsilon(epsilon)?;
    let x_index = domain.index_of(x)?;
    Ok(MldpDistribution::compute(x_index, epsilon, domain))
}

/// Same as [`distribution`] but addressed by index.
pub fn distribution_at_index(
    x_index: usize,
    epsilon: f64,
    domain: IntegerDomain,
) -> Result<MldpDistribution, MldpError> {
    check_epsilon(epsilon)?;
    if x_index >= domain.size() {
        return Err(MldpError::Domain {
            value: domain.lo() + x_index as i64 * domain.step(),
            lo: domain.lo(),
            hi: domain.hi(),
            step: domain.step(),
        });
    }
    Ok(MldpDistribution::compute(x_index, epsilon, domain))
}

/// Draws one noisy value for `x`.
pub fn sample<R: Rng + ?Sized>(
    x: i64,
    epsilon: f64,
    domain: IntegerDomain,
    rng: &mut R,
) -> Result<i64, MldpError> {
    Ok(distribution(x, epsilon, domain)?.sample(rng))
}

/// Equal split of the session budget across `t` perturbed tokens.
/// With `t == 0` nothing is spent and the whole budget is returned.
pub fn split_budget(epsilon_total: f64, t: usize) -> Result<f64, MldpError> {
    check_epsilon(epsilon_total)?;
    if t == 0 {
        return Ok(epsilon_total);
    }
    Ok(epsilon_total / t as f64)
}

/// Worst case of `p_x[i] / (p_x'[i] · e^{ε|x - x'|})` over every pair of true
/// indices and every output. Pairs with `x = x'` contribute exactly 1, so the
/// result is at least 1, and a mechanism meeting its guarantee yields no more
/// than 1 (up to rounding).
///
/// Exhaustive and cubic in the domain size.
pub fn ratio_bound_check(epsilon: f64, domain: IntegerDomain) -> Result<f64, MldpError> {
    check_epsilon(epsilon)?;
    let k = domain.size();
    let dists: Vec<MldpDistribution> =
        (0..k).map(|x| MldpDistribution::compute(x, epsilon, domain)).collect();
    let worst_log = (0..k)
        .into_par_iter()
        .map(|x| {
            let px = dists[x].log_probs();
            let mut worst = f64::NEG_INFINITY;
            for (x2, d2) in dists.iter().enumerate() {
                let allowance = epsilon * x.abs_diff(x2) as f64;
                for (a, b) in px.iter().zip(d2.log_probs()) {
                    worst = worst.max(a - b - allowance);
                }
            }
            worst
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(worst_log.exp())
}

/// Total-variation distance between two distributions on the same domain.
pub fn tv_distance(p: &MldpDistribution, q: &MldpDistribution) -> f64 {
    assert_eq!(p.domain, q.domain, "distributions over different domains");
    0.5 * p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
