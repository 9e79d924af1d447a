//! The prompt-distinguishing game.
//!
//! Each trial draws a fresh key and a hidden bit `b`, sanitizes prompt `b`
//! with fresh noise, and asks the adversary which prompt it saw. The
//! advantage is `2 * wins / trials - 1`.

use std::collections::BTreeSet;

use psan_core::mldp::{self, IntegerDomain, MldpDistribution};
use psan_core::pipeline::{parse_number, MechanismNoise, Plan, SanitizeError, Sanitizer};
use psan_core::{Category, SanitizerKey, TypedSequence};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use rust_decimal::prelude::ToPrimitive;
use serde::Serialize;

use crate::leakage::{describe, LeakageDescriptor};
use crate::stats;

#[derive(Debug, thiserror::Error)]
pub enum GameError {
    #[error("the prompts have different leakage")]
    LeakageMismatch { left: Box<LeakageDescriptor>, right: Box<LeakageDescriptor> },
    #[error("no trials requested")]
    NoTrials,
    #[error("leak percentage {0} is outside 0..=100")]
    InvalidLambda(f64),
    #[error(transparent)]
    Sanitize(#[from] SanitizeError),
    #[error("cannot build adversary: {0}")]
    Adversary(String),
}

/// Decision rule mapping a sanitized prompt to a guess of the hidden bit.
pub trait Adversary: Sync {
    fn name(&self) -> &str;
    fn guess(&self, sanitized: &str) -> bool;
}

impl<F: Fn(&str) -> bool + Sync> Adversary for F {
    fn name(&self) -> &str {
        "custom"
    }

    fn guess(&self, sanitized: &str) -> bool {
        self(sanitized)
    }
}

/// Two annotated prompts with equal leakage and the sanitizer they are
/// played under.
#[derive(Clone, Debug)]
pub struct GamePair {
    sanitizer: Sanitizer,
    seqs: [TypedSequence; 2],
    plans: [Plan; 2],
    leakage: LeakageDescriptor,
}

/// A category II root whose value differs between the two prompts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericDifference {
    pub token: usize,
    pub epsilon: f64,
    pub index_distance: usize,
    pub tv: f64,
    /// `1 - exp(-epsilon * index_distance)`.
    pub bound: f64,
}

impl GamePair {
    pub fn new(p0: &str, p1: &str, sanitizer: &Sanitizer) -> Result<Self, GameError> {
        let seqs = [sanitizer.annotate(p0)?, sanitizer.annotate(p1)?];
        let left = describe(&seqs[0], sanitizer)?;
        let right = describe(&seqs[1], sanitizer)?;
        if left != right {
            return Err(GameError::LeakageMismatch { left: Box::new(left), right: Box::new(right) });
        }
        let plans = [sanitizer.preprocess(&seqs[0], None)?, sanitizer.preprocess(&seqs[1], None)?];
        Ok(Self { sanitizer: sanitizer.clone(), seqs, plans, leakage: left })
    }

    pub fn leakage(&self) -> &LeakageDescriptor {
        &self.leakage
    }

    pub fn sequence(&self, b: usize) -> &TypedSequence {
        &self.seqs[b]
    }

    pub fn sanitizer(&self) -> &Sanitizer {
        &self.sanitizer
    }

    /// Token positions whose text differs.
    pub fn differing_tokens(&self) -> Vec<usize> {
        let (a, b) = (self.seqs[0].tokens(), self.seqs[1].tokens());
        (0..a.len()).filter(|&i| a[i].text != b[i].text).collect()
    }

    fn domain(&self, token: usize) -> Result<IntegerDomain, GameError> {
        match self.sanitizer.config().treatment(&self.seqs[0].tokens()[token].ty).map_err(SanitizeError::from)? {
            psan_core::config::Treatment::Perturb { domain } => Ok(*domain),
            _ => Err(GameError::Adversary(format!("token {token} is not category II"))),
        }
    }

    fn index_of(&self, b: usize, token: usize, domain: IntegerDomain) -> Result<usize, GameError> {
        let text = &self.seqs[b].tokens()[token].text;
        let (v, _) = parse_number(text).ok_or_else(|| GameError::Adversary(format!("{text:?} is not a number")))?;
        Ok(domain.nearest_index(v.to_f64().unwrap_or(f64::NAN)).0)
    }

    /// Differing category II roots with their exact per-token distinguishing
    /// power. Differences in repeated tokens are counted once, at the root.
    pub fn numeric_differences(&self) -> Result<Vec<NumericDifference>, GameError> {
        let plan = &self.plans[0];
        let eps = mldp::split_budget(self.sanitizer.config().epsilon_total(), plan.t())
            .map_err(|e| GameError::Adversary(e.to_string()))?;
        let differing: BTreeSet<usize> = self.differing_tokens().into_iter().collect();
        let mut out = Vec::new();
        for &r in &plan.roots {
            let group_differs = plan.representative.iter().any(|(i, rep)| *rep == r && differing.contains(i));
            if !(differing.contains(&r) || group_differs) {
                continue;
            }
            let domain = self.domain(r)?;
            let (x0, x1) = (self.index_of(0, r, domain)?, self.index_of(1, r, domain)?);
            let d0 = mldp::distribution_at_index(x0, eps, domain).map_err(|e| GameError::Adversary(e.to_string()))?;
            let d1 = mldp::distribution_at_index(x1, eps, domain).map_err(|e| GameError::Adversary(e.to_string()))?;
            let l = x0.abs_diff(x1);
            out.push(NumericDifference {
                token: r,
                epsilon: eps,
                index_distance: l,
                tv: mldp::tv_distance(&d0, &d1),
                bound: 1.0 - (-eps * l as f64).exp(),
            });
        }
        Ok(out)
    }

    /// Sum of the per-token total-variation distances, when every difference
    /// is a noised category II root. Zero for identical prompts.
    pub fn exact_tv_bound(&self) -> Option<f64> {
        let differing = self.differing_tokens();
        let tokens = self.seqs[0].tokens();
        if differing.iter().any(|&i| tokens[i].category == Category::I) {
            return None;
        }
        Some(self.numeric_differences().ok()?.iter().map(|d| d.tv).sum())
    }

    /// Sum of `1 - exp(-epsilon * l)` over differing roots, when every
    /// difference is a noised category II root.
    pub fn advantage_bound(&self) -> Option<f64> {
        let differing = self.differing_tokens();
        let tokens = self.seqs[0].tokens();
        if differing.iter().any(|&i| tokens[i].category == Category::I) {
            return None;
        }
        Some(self.numeric_differences().ok()?.iter().map(|d| d.bound).sum())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GameResult {
    pub adversary: String,
    pub trials: u64,
    pub wins: u64,
    pub empirical_advantage: f64,
    /// Standard error of the win rate.
    pub sigma_win_rate: f64,
    /// Standard error of the advantage, twice that of the win rate.
    pub sigma: f64,
    pub exact_tv_bound: Option<f64>,
    pub advantage_bound: Option<f64>,
}

impl GameResult {
    fn new(adversary: &str, trials: u64, wins: u64, pair: &GamePair) -> Self {
        let p = wins as f64 / trials as f64;
        let sigma_win_rate = stats::binomial_se(p, trials);
        Self {
            adversary: adversary.to_owned(),
            trials,
            wins,
            empirical_advantage: 2.0 * p - 1.0,
            sigma_win_rate,
            sigma: 2.0 * sigma_win_rate,
            exact_tv_bound: pair.exact_tv_bound(),
            advantage_bound: pair.advantage_bound(),
        }
    }
}

/// Per-trial generator: stream `trial` of the ChaCha20 generator seeded by `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Plays `trials` independent games on `pair`. Every trial uses a fresh key
/// of the configured strength and fresh mechanism randomness.
pub fn play_pair(pair: &GamePair, trials: u64, seed: u64, adversary: &dyn Adversary) -> Result<GameResult, GameError> {
    if trials == 0 {
        return Err(GameError::NoTrials);
    }
    let bits = pair.sanitizer.config().security_bits();
    let wins = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<u64, GameError> {
            let mut rng = trial_rng(seed, trial);
            let key = SanitizerKey::from_rng(&mut rng, bits).map_err(|e| GameError::Adversary(e.to_string()))?;
            let b = usize::from(rng.gen::<bool>());
            let sanitizer = pair.sanitizer.rekeyed(key);
            let out = sanitizer.sanitize(&pair.seqs[b], &pair.plans[b], &mut MechanismNoise(&mut rng))?;
            Ok(u64::from(adversary.guess(&out.text) == (b == 1)))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(GameResult::new(adversary.name(), trials, wins, pair))
}

/// Checks leakage and plays the game on `p0`, `p1`.
pub fn play_game(
    p0: &str,
    p1: &str,
    sanitizer: &Sanitizer,
    trials: u64,
    seed: u64,
    adversary: &dyn Adversary,
) -> Result<GameResult, GameError> {
    play_pair(&GamePair::new(p0, p1, sanitizer)?, trials, seed, adversary)
}

/// Likelihood-ratio test on the differing category II roots. Optimal when
/// those are the only differences.
pub struct LikelihoodRatio {
    sanitizer: Sanitizer,
    token_count: usize,
    terms: Vec<(usize, MldpDistribution, MldpDistribution)>,
}

impl LikelihoodRatio {
    pub fn new(pair: &GamePair) -> Result<Self, GameError> {
        let mut terms = Vec::new();
        for d in pair.numeric_differences()? {
            let domain = pair.domain(d.token)?;
            let build = |b| -> Result<MldpDistribution, GameError> {
                mldp::distribution_at_index(pair.index_of(b, d.token, domain)?, d.epsilon, domain)
                    .map_err(|e| GameError::Adversary(e.to_string()))
            };
            terms.push((d.token, build(0)?, build(1)?));
        }
        Ok(Self { sanitizer: pair.sanitizer.clone(), token_count: pair.seqs[0].len(), terms })
    }
}

impl Adversary for LikelihoodRatio {
    fn name(&self) -> &str {
        "likelihood-ratio"
    }

    fn guess(&self, sanitized: &str) -> bool {
        let Ok(seq) = self.sanitizer.annotate(sanitized) else { return false };
        if seq.len() != self.token_count {
            return false;
        }
        let mut llr = 0.0;
        for (token, d0, d1) in &self.terms {
            let Some((v, _)) = parse_number(&seq.tokens()[*token].text) else { return false };
            let (i, _) = d0.domain().nearest_index(v.to_f64().unwrap_or(f64::NAN));
            llr += d1.log_probs()[i] - d0.log_probs()[i];
        }
        llr > 0.0
    }
}

/// Guesses prompt 1 when the first byte of the first differing token matches
/// prompt 1's plaintext. Blind to formats and to the mechanism.
pub struct FirstByte {
    sanitizer: Sanitizer,
    token: Option<usize>,
    byte: u8,
}

impl FirstByte {
    pub fn new(pair: &GamePair) -> Self {
        let token = pair.differing_tokens().first().copied();
        let byte = token.map_or(0, |t| pair.seqs[1].tokens()[t].text.as_bytes()[0]);
        Self { sanitizer: pair.sanitizer.clone(), token, byte }
    }
}

impl Adversary for FirstByte {
    fn name(&self) -> &str {
        "first-byte"
    }

    fn guess(&self, sanitized: &str) -> bool {
        let Some(t) = self.token else { return sanitized.as_bytes().first().is_some_and(|b| b & 1 == 1) };
        match self.sanitizer.annotate(sanitized) {
            Ok(seq) if seq.len() > t => seq.tokens()[t].text.as_bytes().first() == Some(&self.byte),
            _ => false,
        }
    }
}

/// `p1` with a share of its tokens replaced by `p0`'s, as an NER leak would.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NerLeak {
    pub prompt: String,
    /// Copied token positions, ascending.
    pub copied: Vec<usize>,
}

/// Number of positions leaked: `ceil(lambda_pct / 100 * n)`.
pub fn leaked_count(lambda_pct: f64, n: usize) -> usize {
    let exact = lambda_pct * n as f64 / 100.0;
    let rounded = exact.round();
    if (exact - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        exact.ceil() as usize
    }
}

/// Copies `p0`'s values into `ceil(lambda_pct / 100 * n)` uniformly chosen
/// token positions of `p1`.
pub fn apply_ner_leakage<R: Rng + ?Sized>(
    p0: &str,
    p1: &str,
    lambda_pct: f64,
    sanitizer: &Sanitizer,
    rng: &mut R,
) -> Result<NerLeak, GameError> {
    if !(0.0..=100.0).contains(&lambda_pct) {
        return Err(GameError::InvalidLambda(lambda_pct));
    }
    let pair = GamePair::new(p0, p1, sanitizer)?;
    let n = pair.seqs[0].len();
    let m = leaked_count(lambda_pct, n);
    let mut copied = index::sample(rng, n, m).into_vec();
    copied.sort_unstable();
    let mut values: Vec<String> = pair.seqs[1].tokens().iter().map(|t| t.text.clone()).collect();
    for &i in &copied {
        values[i] = pair.seqs[0].tokens()[i].text.clone();
    }
    Ok(NerLeak { prompt: pair.seqs[1].render_with(&values), copied })
}
