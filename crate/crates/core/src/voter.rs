//! Synchronous voter-model dynamics over campaign rankings.
//!
//! Each round every customer copies the full ranking held by a uniformly
//! chosen neighbor (herself included) in the previous round. Tracking which
//! initial opinion each customer holds turns the dynamics into a random walk,
//! which is what [`empirical_adoption`] measures.

use rand::Rng;
use rayon::prelude::*;

use crate::contest::{ContestSummary, PayoffVector};
use crate::error::{Error, Result};
use crate::graph::{InfluenceGraph, TransitionMatrix, ValueVector};
use crate::rng;
use crate::scoring::RankScoringRule;

/// Replications handled per parallel work unit.
const REPLICATION_BLOCK: usize = 1024;

/// Every customer's ranking of the campaigns at some round.
///
/// Rankings are stored once and shared by index, so a round only copies
/// indices. Campaigns are `0..K`; a ranking lists them best first.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceState {
    opinions: Vec<Vec<usize>>,
    holder: Vec<usize>,
    time: u64,
}

impl PreferenceState {
    /// Initial state from one ranking per customer.
    pub fn new(rankings: Vec<Vec<usize>>) -> Result<Self> {
        let first = rankings.first().ok_or_else(|| Error::input("no customers"))?;
        let k = first.len();
        if k < 2 {
            return Err(Error::input("rankings need at least 2 campaigns"));
        }
        let mut opinions: Vec<Vec<usize>> = Vec::new();
        let mut holder = Vec::with_capacity(rankings.len());
        for (node, r) in rankings.into_iter().enumerate() {
            Error::check_dim(k, r.len())?;
            let mut seen = vec![false; k];
            for &c in &r {
                if c >= k || std::mem::replace(&mut seen[c], true) {
                    return Err(Error::input(format!("ranking of customer {node} is not a permutation of 0..{k}")));
                }
            }
            let id = match opinions.iter().position(|o| *o == r) {
                Some(id) => id,
                None => {
                    opinions.push(r);
                    opinions.len() - 1
                }
            };
            holder.push(id);
        }
        Ok(PreferenceState { opinions, holder, time: 0 })
    }

    /// All `n` customers share `ranking`.
    pub fn consensus(n: usize, ranking: Vec<usize>) -> Result<Self> {
        Self::new(vec![ranking; n])
    }

    /// Customer `j` ranks campaign `(j + i) mod K` in position `i`.
    pub fn rotating(n: usize, k: usize) -> Result<Self> {
        Self::new((0..n).map(|j| (0..k).map(|i| (j + i) % k).collect()).collect())
    }

    pub fn node_count(&self) -> usize {
        self.holder.len()
    }

    pub fn campaign_count(&self) -> usize {
        self.opinions[0].len()
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// Ranking held by `node`, best first.
    pub fn ranking(&self, node: usize) -> &[usize] {
        &self.opinions[self.holder[node]]
    }

    pub fn top_choice(&self, node: usize) -> usize {
        self.ranking(node)[0]
    }

    pub fn is_consensus(&self) -> bool {
        let first = self.ranking(0);
        (1..self.node_count()).all(|n| self.ranking(n) == first)
    }

    /// Rank scores each campaign receives from `node`.
    fn score_row(&self, node: usize, rule: &RankScoringRule, out: &mut [f64]) {
        for (pos, &c) in self.ranking(node).iter().enumerate() {
            out[c] = rule.scores()[pos];
        }
    }

    /// `Σ_n values_n · s_{u_n(k)}` for the current rankings.
    pub fn payoffs(&self, values: &ValueVector, rule: &RankScoringRule) -> Result<PayoffVector> {
        Error::check_dim(self.node_count(), values.len())?;
        Error::check_dim(self.campaign_count(), rule.campaign_count())?;
        let mut out = vec![0.0; rule.campaign_count()];
        let mut row = vec![0.0; rule.campaign_count()];
        for (n, &v) in values.as_slice().iter().enumerate() {
            self.score_row(n, rule, &mut row);
            for (o, s) in out.iter_mut().zip(&row) {
                *o += v * s;
            }
        }
        Ok(PayoffVector(out))
    }
}

fn step_holders<R: Rng + ?Sized>(graph: &InfluenceGraph, holders: &[usize], rng: &mut R) -> Vec<usize> {
    (0..holders.len())
        .map(|j| {
            let ns = graph.neighbors(j);
            holders[ns[rng.random_range(0..ns.len())]]
        })
        .collect()
}

/// One synchronous round: every customer copies a random neighbor's previous ranking.
pub fn voter_step<R: Rng + ?Sized>(
    state: &PreferenceState,
    graph: &InfluenceGraph,
    rng: &mut R,
) -> Result<PreferenceState> {
    Error::check_dim(graph.node_count(), state.node_count())?;
    Ok(PreferenceState {
        opinions: state.opinions.clone(),
        holder: step_holders(graph, &state.holder, rng),
        time: state.time + 1,
    })
}

/// Fraction of replications in which customer `j` holds customer `j'`'s
/// initial opinion after `tau` rounds, starting from `N` distinct opinions.
///
/// Replication `r` runs on stream `(seed, r)`.
pub fn empirical_adoption(
    graph: &InfluenceGraph,
    tau: u32,
    replications: usize,
    seed: u64,
) -> Result<TransitionMatrix> {
    if replications == 0 {
        return Err(Error::input("replications must be at least 1"));
    }
    let n = graph.node_count();
    let blocks: Vec<(usize, usize)> =
        (0..replications).step_by(REPLICATION_BLOCK).map(|s| (s, (s + REPLICATION_BLOCK).min(replications))).collect();
    let counts = blocks
        .into_par_iter()
        .map(|(start, end)| {
            let mut counts = vec![0u64; n * n];
            for r in start..end {
                let mut rng = rng::stream(seed, &[r as u64]);
                let mut origin: Vec<usize> = (0..n).collect();
                for _ in 0..tau {
                    origin = step_holders(graph, &origin, &mut rng);
                }
                for (j, &o) in origin.iter().enumerate() {
                    counts[j * n + o] += 1;
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; n * n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let reps = replications as f64;
    TransitionMatrix::from_rows(counts.chunks(n).map(|row| row.iter().map(|&c| c as f64 / reps).collect()).collect())
}

/// Expected payoff at any horizon from network values and initial rankings:
/// `π_k = Σ_{j'} v_{j'} · s_{u^0_{j'}(k)}`.
pub fn expected_network_payoff(
    network_values: &ValueVector,
    initial: &PreferenceState,
    rule: &RankScoringRule,
) -> Result<PayoffVector> {
    initial.payoffs(network_values, rule)
}

/// Runs the voter model to `tau` in each replication and averages the
/// realized payoffs `Σ_j w_j s_{u_j^tau(k)}`.
///
/// Replication `r` uses stream `(seed, r)`, the same as [`trajectory`].
pub fn simulate_expected_payoff(
    graph: &InfluenceGraph,
    intrinsic: &ValueVector,
    initial: &PreferenceState,
    rule: &RankScoringRule,
    tau: u32,
    replications: usize,
    seed: u64,
) -> Result<ContestSummary> {
    Error::check_dim(graph.node_count(), initial.node_count())?;
    Error::check_dim(graph.node_count(), intrinsic.len())?;
    Error::check_dim(initial.campaign_count(), rule.campaign_count())?;
    if replications == 0 {
        return Err(Error::input("replications must be at least 1"));
    }
    let k = rule.campaign_count();
    let per_rep: Vec<Vec<f64>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, &[r as u64]);
            let mut state = initial.clone();
            for _ in 0..tau {
                state.holder = step_holders(graph, &state.holder, &mut rng);
            }
            state.time = tau as u64;
            state.payoffs(intrinsic, rule).map(|p| p.0).unwrap_or_else(|_| vec![0.0; k])
        })
        .collect();
    let count = replications as f64;
    let w_total = intrinsic.total();
    let mut mean = vec![0.0; k];
    let mut max_total_defect: f64 = 0.0;
    for p in &per_rep {
        mean.iter_mut().zip(p).for_each(|(m, x)| *m += x);
        max_total_defect = max_total_defect.max((p.iter().sum::<f64>() - w_total).abs());
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let stderr = if replications > 1 {
        (0..k)
            .map(|c| {
                let ss: f64 = per_rep.iter().map(|p| (p[c] - mean[c]).powi(2)).sum();
                (ss / (count - 1.0)).sqrt() / count.sqrt()
            })
            .collect()
    } else {
        vec![0.0; k]
    };
    Ok(ContestSummary { mean, stderr, trials: replications, max_total_defect })
}

/// One row of a trajectory dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrajectoryRow {
    pub replication: usize,
    pub time: u32,
    pub node: usize,
    pub top_choice: usize,
}

/// Top choice of every customer at every round `0..=tau` of each replication.
pub fn trajectory(
    graph: &InfluenceGraph,
    initial: &PreferenceState,
    tau: u32,
    replications: usize,
    seed: u64,
) -> Result<Vec<TrajectoryRow>> {
    Error::check_dim(graph.node_count(), initial.node_count())?;
    let mut rows = Vec::with_capacity(replications * (tau as usize + 1) * graph.node_count());
    for r in 0..replications {
        let mut rng = rng::stream(seed, &[r as u64]);
        let mut state = initial.clone();
        for t in 0..=tau {
            if t > 0 {
                state = voter_step(&state, graph, &mut rng)?;
            }
            rows.extend((0..state.node_count()).map(|node| TrajectoryRow {
                replication: r,
                time: t,
                node,
                top_choice: state.top_choice(node),
            }));
        }
    }
    Ok(rows)
}
