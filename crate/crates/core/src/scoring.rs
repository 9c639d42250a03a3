//! Normalized rank-scoring rules.
//!
//! A customer who ranks campaigns by their offers gives the campaign in rank
//! `j` (1-based, rank 1 is the best offer) the fraction `s_j` of her value. A
//! normalized rule has `s_1 >= ... >= s_K = 0` and `Σ s_j = 1`.
//!
//! When every rival independently offers less than a given amount with
//! probability `q`, the expected fraction won is the Bernstein polynomial
//! `r(q) = Σ_j P(j, q) s_j`.

use std::fmt;

use crate::error::{Error, Result};

/// Above this many campaigns binomial weights are evaluated in log space.
const LOG_SPACE_THRESHOLD: usize = 30;

/// Recognized closed-form rule families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleShape {
    /// `(1, 0, ..., 0)`.
    WinnerTakesAll,
    /// Scores decreasing linearly to zero.
    Borda,
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankScoringRule {
    scores: Vec<f64>,
    shape: RuleShape,
}

impl RankScoringRule {
    /// Normalizes arbitrary raw scores, sorting them in descending order first.
    pub fn normalize(raw: &[f64]) -> Result<Self> {
        let mut sorted = raw.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        Self::normalize_strict(&sorted)
    }

    /// Normalizes raw scores that must already be nonincreasing.
    ///
    /// Maps `s_j` to `(s_j - s_K) / S` with `S = Σ (s_j - s_K)`.
    pub fn normalize_strict(raw: &[f64]) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::input(format!("a rule needs at least 2 scores, got {}", raw.len())));
        }
        if raw.iter().any(|s| !s.is_finite()) {
            return Err(Error::input("scores must be finite"));
        }
        if raw.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::input("scores must be nonincreasing"));
        }
        let last = raw[raw.len() - 1];
        let total: f64 = raw.iter().map(|s| s - last).sum();
        if total <= 0.0 {
            return Err(Error::DegenerateRule(raw.len()));
        }
        Ok(Self::from_normalized(raw.iter().map(|s| (s - last) / total).collect()))
    }

    fn from_normalized(scores: Vec<f64>) -> Self {
        let shape = detect_shape(&scores);
        RankScoringRule { scores, shape }
    }

    /// `(1, 0, ..., 0)` with `k` entries.
    pub fn winner_takes_all(k: usize) -> Result<Self> {
        check_k(k)?;
        let mut scores = vec![0.0; k];
        scores[0] = 1.0;
        Ok(Self::from_normalized(scores))
    }

    /// `s_j = (K - j) / S` with `S = K(K-1)/2`.
    pub fn borda(k: usize) -> Result<Self> {
        check_k(k)?;
        let total = (k * (k - 1)) as f64 / 2.0;
        Ok(Self::from_normalized((1..=k).map(|j| (k - j) as f64 / total).collect()))
    }

    pub fn campaign_count(&self) -> usize {
        self.scores.len()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Score for 1-based `rank`.
    pub fn score(&self, rank: usize) -> f64 {
        self.scores[rank - 1]
    }

    /// `s_1`, the top score.
    pub fn top(&self) -> f64 {
        self.scores[0]
    }

    pub fn shape(&self) -> RuleShape {
        self.shape
    }

    /// Expected score `r(q)` against rivals who each offer less with probability `q`.
    pub fn expected_score(&self, q: f64) -> Result<f64> {
        check_probability(q)?;
        Ok(self.expected_score_unchecked(q))
    }

    pub(crate) fn expected_score_unchecked(&self, q: f64) -> f64 {
        let k = self.scores.len();
        // Rank j means K - j of the K - 1 rivals are below.
        self.scores
            .iter()
            .enumerate()
            .filter(|(_, s)| **s != 0.0)
            .map(|(idx, s)| s * bernstein(k - 1 - idx, k - 1, q))
            .sum()
    }

    /// `r'(q)`, from the Bernstein derivative identity.
    pub fn expected_score_derivative(&self, q: f64) -> Result<f64> {
        check_probability(q)?;
        let k = self.scores.len();
        let n = k - 1;
        // c_i = score with i rivals below = scores[K-1-i].
        let c = |i: usize| self.scores[k - 1 - i];
        let sum: f64 = (0..n).map(|i| (c(i + 1) - c(i)) * bernstein(i, n - 1, q)).sum();
        Ok(n as f64 * sum)
    }
}

impl fmt::Display for RankScoringRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.scores.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

fn detect_shape(scores: &[f64]) -> RuleShape {
    let k = scores.len();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-15;
    if close(scores[0], 1.0) && scores[1..].iter().all(|&s| s == 0.0) {
        return RuleShape::WinnerTakesAll;
    }
    let total = (k * (k - 1)) as f64 / 2.0;
    if scores.iter().enumerate().all(|(i, &s)| close(s, (k - 1 - i) as f64 / total)) {
        RuleShape::Borda
    } else {
        RuleShape::General
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        Err(Error::input(format!("need at least 2 campaigns, got {k}")))
    } else {
        Ok(())
    }
}

pub(crate) fn check_probability(q: f64) -> Result<()> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::input(format!("probability {q} outside [0, 1]")))
    }
}

/// `C(n, i) q^i (1-q)^(n-i)`.
fn bernstein(i: usize, n: usize, q: f64) -> f64 {
    debug_assert!(i <= n);
    if n < LOG_SPACE_THRESHOLD {
        return binomial(n, i) * q.powi(i as i32) * (1.0 - q).powi((n - i) as i32);
    }
    if q == 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    if q == 1.0 {
        return if i == n { 1.0 } else { 0.0 };
    }
    (ln_binomial(n, i) + i as f64 * q.ln() + (n - i) as f64 * (-q).ln_1p()).exp()
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (1..=k).fold(1.0, |acc, t| acc * (n - k + t) as f64 / t as f64)
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (1..=k).map(|t| ((n - k + t) as f64 / t as f64).ln()).sum()
}

/// `P(j, q)`: probability that exactly `j - 1` of the `k - 1` rivals offer
/// more, when each offers less independently with probability `q`.
pub fn position_probability(rank: usize, q: f64, k: usize) -> Result<f64> {
    check_k(k)?;
    if rank == 0 || rank > k {
        return Err(Error::input(format!("rank {rank} outside 1..={k}")));
    }
    check_probability(q)?;
    Ok(bernstein(k - rank, k - 1, q))
}

pub fn normalize_rule(raw: &[f64]) -> Result<RankScoringRule> {
    RankScoringRule::normalize(raw)
}

pub fn winner_takes_all(k: usize) -> Result<RankScoringRule> {
    RankScoringRule::winner_takes_all(k)
}

pub fn borda(k: usize) -> Result<RankScoringRule> {
    RankScoringRule::borda(k)
}

pub fn expected_rank_score(rule: &RankScoringRule, q: f64) -> Result<f64> {
    rule.expected_score(q)
}
