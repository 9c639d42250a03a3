//! Ranking offers, computing payoffs and running contests.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::equilibrium::{DeviationDistribution, EquilibriumFamily};
use crate::error::{Error, Result};
use crate::graph::ValueVector;
use crate::rng;
use crate::scoring::RankScoringRule;

/// `K × N` matrix of offers; entry `(k, n)` is campaign `k`'s offer to customer `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct OfferMatrix {
    campaigns: usize,
    customers: usize,
    entries: Vec<f64>,
}

impl OfferMatrix {
    /// One row per campaign.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let campaigns = rows.len();
        if campaigns == 0 {
            return Err(Error::input("offer matrix has no campaigns"));
        }
        let customers = rows[0].len();
        let mut entries = Vec::with_capacity(campaigns * customers);
        for row in rows {
            Error::check_dim(customers, row.len())?;
            if row.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::input("offers must be finite and nonnegative"));
            }
            entries.extend(row);
        }
        Ok(OfferMatrix { campaigns, customers, entries })
    }

    pub fn campaigns(&self) -> usize {
        self.campaigns
    }

    pub fn customers(&self) -> usize {
        self.customers
    }

    pub fn get(&self, campaign: usize, customer: usize) -> f64 {
        self.entries[campaign * self.customers + customer]
    }

    pub fn set(&mut self, campaign: usize, customer: usize, offer: f64) -> Result<()> {
        if !offer.is_finite() || offer < 0.0 {
            return Err(Error::input("offers must be finite and nonnegative"));
        }
        self.entries[campaign * self.customers + customer] = offer;
        Ok(())
    }

    /// All campaigns' offers to one customer.
    pub fn column(&self, customer: usize) -> Vec<f64> {
        (0..self.campaigns).map(|k| self.get(k, customer)).collect()
    }

    pub fn row(&self, campaign: usize) -> &[f64] {
        &self.entries[campaign * self.customers..(campaign + 1) * self.customers]
    }
}

/// How rank scores are shared between campaigns making identical offers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreakPolicy {
    /// Tied campaigns split the scores of the positions they occupy evenly.
    #[default]
    AverageScores,
    /// A uniformly random permutation orders tied campaigns.
    SeededRandom,
}

impl fmt::Display for TieBreakPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieBreakPolicy::AverageScores => "average-scores",
            TieBreakPolicy::SeededRandom => "seeded-random",
        })
    }
}

impl FromStr for TieBreakPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average-scores" => Ok(TieBreakPolicy::AverageScores),
            "seeded-random" => Ok(TieBreakPolicy::SeededRandom),
            other => Err(Error::input(format!(
                "unknown tie-break policy `{other}` (expected average-scores or seeded-random)"
            ))),
        }
    }
}

/// Effective rank score of each campaign for one customer's offers.
///
/// Higher offers rank first. The returned weights always sum to the rule's
/// total mass. `rng` is only consulted under [`TieBreakPolicy::SeededRandom`].
pub fn rank_offers<R: Rng + ?Sized>(
    offers: &[f64],
    rule: &RankScoringRule,
    policy: TieBreakPolicy,
    rng: &mut R,
) -> Vec<f64> {
    let mut out = vec![0.0; offers.len()];
    rank_offers_into(offers, rule, policy, rng, &mut out);
    out
}

fn rank_offers_into<R: Rng + ?Sized>(
    offers: &[f64],
    rule: &RankScoringRule,
    policy: TieBreakPolicy,
    rng: &mut R,
    out: &mut [f64],
) {
    let k = offers.len();
    debug_assert_eq!(k, rule.campaign_count());
    let scores = rule.scores();
    let mut order: Vec<usize> = (0..k).collect();
    if policy == TieBreakPolicy::SeededRandom {
        order.shuffle(rng);
    }
    // stable, so shuffled ties stay shuffled
    order.sort_by(|&a, &b| offers[b].total_cmp(&offers[a]));
    match policy {
        TieBreakPolicy::SeededRandom => {
            for (pos, &c) in order.iter().enumerate() {
                out[c] = scores[pos];
            }
        }
        TieBreakPolicy::AverageScores => {
            let mut start = 0;
            while start < k {
                let mut end = start + 1;
                while end < k && offers[order[end]] == offers[order[start]] {
                    end += 1;
                }
                let share = if end - start == 1 {
                    scores[start]
                } else {
                    scores[start..end].iter().sum::<f64>() / (end - start) as f64
                };
                for &c in &order[start..end] {
                    out[c] = share;
                }
                start = end;
            }
        }
    }
}

/// Per-campaign payoff in value units.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffVector(pub Vec<f64>);

impl PayoffVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// `π_k = Σ_n w_n · s_{u_n(k)}` with tie-resolved scores.
pub fn intrinsic_payoffs<R: Rng + ?Sized>(
    offers: &OfferMatrix,
    values: &ValueVector,
    rule: &RankScoringRule,
    policy: TieBreakPolicy,
    rng: &mut R,
) -> Result<PayoffVector> {
    Error::check_dim(rule.campaign_count(), offers.campaigns())?;
    Error::check_dim(offers.customers(), values.len())?;
    let k = offers.campaigns();
    let mut payoffs = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for (n, &w) in values.as_slice().iter().enumerate() {
        rank_offers_into(&offers.column(n), rule, policy, rng, &mut weights);
        for (p, s) in payoffs.iter_mut().zip(&weights) {
            *p += w * s;
        }
    }
    Ok(PayoffVector(payoffs))
}

/// Expected network payoff: the intrinsic computation applied to network values.
pub fn network_payoffs<R: Rng + ?Sized>(
    offers: &OfferMatrix,
    network_values: &ValueVector,
    rule: &RankScoringRule,
    policy: TieBreakPolicy,
    rng: &mut R,
) -> Result<PayoffVector> {
    intrinsic_payoffs(offers, network_values, rule, policy, rng)
}

/// Head-to-head comparison of two campaigns, ignoring everyone else.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseTally {
    pub first_wins: usize,
    pub second_wins: usize,
    pub ties: usize,
    pub first_value: f64,
    pub second_value: f64,
}

pub fn pairwise_tally(
    offers: &OfferMatrix,
    values: &ValueVector,
    first: usize,
    second: usize,
) -> Result<PairwiseTally> {
    Error::check_dim(offers.customers(), values.len())?;
    if first >= offers.campaigns() || second >= offers.campaigns() {
        return Err(Error::input("campaign index out of range"));
    }
    let mut t = PairwiseTally { first_wins: 0, second_wins: 0, ties: 0, first_value: 0.0, second_value: 0.0 };
    for (n, &w) in values.as_slice().iter().enumerate() {
        let (a, b) = (offers.get(first, n), offers.get(second, n));
        if a > b {
            t.first_wins += 1;
            t.first_value += w;
        } else if b > a {
            t.second_wins += 1;
            t.second_value += w;
        } else {
            t.ties += 1;
        }
    }
    Ok(t)
}

/// How one campaign generates its offers in a Monte Carlo contest.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Draw from the equilibrium family.
    Equilibrium,
    /// Draw `m · B v_n / V` where `m` follows the given distribution.
    ///
    /// The distribution is expressed in multiples of the budget share, so a
    /// budget-respecting deviation has mean 1.
    Deviation(DeviationDistribution),
}

/// Empirical per-campaign payoffs of a Monte Carlo contest.
#[derive(Debug, Clone, PartialEq)]
pub struct ContestSummary {
    pub mean: Vec<f64>,
    /// Standard error of each mean; zero when `trials == 1`.
    pub stderr: Vec<f64>,
    pub trials: usize,
    /// Largest `|Σ_k payoff_k - V|` seen in any single trial.
    pub max_total_defect: f64,
}

impl ContestSummary {
    /// A standard error needs at least two trials.
    pub fn has_stderr(&self) -> bool {
        self.trials > 1
    }

    /// Largest `|mean_k - target| / stderr_k`; `None` with a single trial.
    pub fn max_z_score(&self, target: f64) -> Option<f64> {
        if !self.has_stderr() {
            return None;
        }
        Some(
            self.mean
                .iter()
                .zip(&self.stderr)
                .map(|(m, s)| {
                    let d = (m - target).abs();
                    if *s > 0.0 {
                        d / s
                    } else if d == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                })
                .fold(0.0, f64::max),
        )
    }
}

/// Every campaign plays the equilibrium; ties (probability zero) are averaged.
pub fn monte_carlo_contest(
    family: &EquilibriumFamily,
    values: &ValueVector,
    trials: usize,
    seed: u64,
) -> Result<ContestSummary> {
    let strategies = vec![Strategy::Equilibrium; family.campaign_count()];
    monte_carlo_contest_with(family, values, &strategies, TieBreakPolicy::AverageScores, trials, seed)
}

/// Monte Carlo contest with an explicit strategy per campaign.
///
/// Trial `t` draws everything from stream `(seed, t)`, so results do not
/// depend on how trials are scheduled across threads.
pub fn monte_carlo_contest_with(
    family: &EquilibriumFamily,
    values: &ValueVector,
    strategies: &[Strategy],
    policy: TieBreakPolicy,
    trials: usize,
    seed: u64,
) -> Result<ContestSummary> {
    let k = family.campaign_count();
    Error::check_dim(k, strategies.len())?;
    if trials == 0 {
        return Err(Error::input("trials must be at least 1"));
    }
    let v_total = values.total();
    if (v_total - family.total_value()).abs() > 1e-9 * family.total_value() {
        return Err(Error::input(format!(
            "customer values total {v_total} but the family assumes V = {}",
            family.total_value()
        )));
    }
    let rule = family.rule();
    let vs = values.as_slice();
    let n = vs.len();

    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, &[t as u64]);
            let mut offers = vec![0.0; k * n];
            for (c, strategy) in strategies.iter().enumerate() {
                let row = &mut offers[c * n..(c + 1) * n];
                match strategy {
                    Strategy::Equilibrium => {
                        row.copy_from_slice(&family.sample_offers_with(vs, &mut rng));
                    }
                    Strategy::Deviation(g) => {
                        for (o, &v) in row.iter_mut().zip(vs) {
                            *o = g.sample(&mut rng) * family.mean_offer(v);
                        }
                    }
                }
            }
            let mut payoff = vec![0.0; k];
            let mut column = vec![0.0; k];
            let mut weights = vec![0.0; k];
            for (cust, &v) in vs.iter().enumerate() {
                for (c, slot) in column.iter_mut().enumerate() {
                    *slot = offers[c * n + cust];
                }
                rank_offers_into(&column, rule, policy, &mut rng, &mut weights);
                for (p, s) in payoff.iter_mut().zip(&weights) {
                    *p += v * s;
                }
            }
            payoff
        })
        .collect();

    let count = trials as f64;
    let mut mean = vec![0.0; k];
    let mut max_total_defect: f64 = 0.0;
    for p in &per_trial {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x;
        }
        max_total_defect = max_total_defect.max((p.iter().sum::<f64>() - v_total).abs());
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let stderr = if trials > 1 {
        let mut ss = vec![0.0; k];
        for p in &per_trial {
            for ((s, x), m) in ss.iter_mut().zip(p).zip(&mean) {
                *s += (x - m) * (x - m);
            }
        }
        ss.into_iter().map(|s| (s / (count - 1.0)).sqrt() / count.sqrt()).collect()
    } else {
        vec![0.0; k]
    };
    Ok(ContestSummary { mean, stderr, trials, max_total_defect })
}

/// Who takes a customer in a head-to-head comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    Responder,
    Opponent,
    Tie,
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Winner::Responder => "responder",
            Winner::Opponent => "opponent",
            Winner::Tie => "tie",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExploitOutcome {
    pub counter: Vec<f64>,
    pub winners: Vec<Winner>,
    /// Customers conceded to the opponent, in the order they were dropped.
    pub dropped: Vec<usize>,
    /// Fraction of total value won under winner-takes-all (ties split evenly).
    pub captured_share: f64,
    /// More than the requested fraction had to be conceded to pay the margins.
    pub shortfall: bool,
}

/// Best response of a campaign that moves after seeing `opponent`'s offers.
///
/// Concedes the least valuable `drop_fraction` of the customers the opponent
/// funds (value ascending, then index), and outbids everywhere else by at
/// least `epsilon`. The freed budget pays `epsilon` per kept customer and the
/// remainder is split in proportion to the opponent's offers, so the counter
/// spends exactly `budget`. If the margins cannot be financed, further
/// customers are conceded in the same order and `shortfall` is set.
pub fn sequential_best_response(
    opponent: &[f64],
    values: &ValueVector,
    budget: f64,
    drop_fraction: f64,
    epsilon: f64,
) -> Result<ExploitOutcome> {
    Error::check_dim(values.len(), opponent.len())?;
    if !(drop_fraction > 0.0 && drop_fraction < 1.0) {
        return Err(Error::input(format!("drop fraction {drop_fraction} outside (0, 1)")));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::input("epsilon must be positive"));
    }
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::input("budget must be positive"));
    }
    if opponent.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::input("opponent offers must be finite and nonnegative"));
    }
    let spent: f64 = opponent.iter().sum();
    if spent > budget * (1.0 + 1e-9) {
        return Err(Error::input(format!("opponent spends {spent}, more than the budget {budget}")));
    }

    let vs = values.as_slice();
    let by_value = |a: &usize, b: &usize| vs[*a].total_cmp(&vs[*b]).then(a.cmp(b));
    let (mut funded, mut unfunded): (Vec<usize>, Vec<usize>) = (0..vs.len()).partition(|&n| opponent[n] > 0.0);
    funded.sort_by(by_value);
    unfunded.sort_by(by_value);
    let requested = if funded.is_empty() {
        0
    } else {
        ((drop_fraction * funded.len() as f64 - 1e-9).ceil() as usize).clamp(1, funded.len())
    };
    let concede_order: Vec<usize> = funded.into_iter().chain(unfunded).collect();

    let mut dropped_count = requested;
    let mut keep = vec![true; vs.len()];
    concede_order[..dropped_count].iter().for_each(|&n| keep[n] = false);
    let (kept_opponent, freed, kept_count) = loop {
        let kept_opponent: f64 = (0..vs.len()).filter(|&n| keep[n]).map(|n| opponent[n]).sum();
        let kept_count = keep.iter().filter(|&&k| k).count();
        let freed = budget - kept_opponent;
        if freed >= epsilon * kept_count as f64 || dropped_count == concede_order.len() {
            break (kept_opponent, freed, kept_count);
        }
        keep[concede_order[dropped_count]] = false;
        dropped_count += 1;
    };

    let extra = freed - epsilon * kept_count as f64;
    let mut counter = vec![0.0; vs.len()];
    for n in (0..vs.len()).filter(|&n| keep[n]) {
        let share = if kept_opponent > 0.0 { opponent[n] / kept_opponent } else { 1.0 / kept_count as f64 };
        counter[n] = opponent[n] + epsilon + extra * share;
    }

    let mut won = 0.0;
    let winners: Vec<Winner> = (0..vs.len())
        .map(|n| {
            if counter[n] > opponent[n] {
                won += vs[n];
                Winner::Responder
            } else if counter[n] < opponent[n] {
                Winner::Opponent
            } else {
                won += 0.5 * vs[n];
                Winner::Tie
            }
        })
        .collect();
    let total = values.total();
    Ok(ExploitOutcome {
        counter,
        winners,
        dropped: concede_order[..dropped_count].to_vec(),
        captured_share: if total > 0.0 { won / total } else { 0.0 },
        shortfall: dropped_count > requested,
    })
}
