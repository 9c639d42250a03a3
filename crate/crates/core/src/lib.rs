//! Competitive offer allocation over an influence network.
//!
//! Several campaigns split a common budget across customers who rank them by
//! the size of their offers and reward them through a normalized rank-scoring
//! rule. The crate covers:
//!
//! * [`graph`]: influence graphs, random-walk transition matrices and the
//!   network value of each customer under voter-model dynamics;
//! * [`scoring`]: rank-scoring rules and the expected-score polynomial `r(q)`;
//! * [`equilibrium`]: the scalable symmetric-equilibrium offer distribution,
//!   its CDF, quantile, density, sampling and deviation analysis;
//! * [`contest`]: ranking, payoffs, Monte Carlo contests and the
//!   sequential-move exploit;
//! * [`voter`]: the voter model itself, used to check the random-walk duality
//!   empirically.

pub mod contest;
pub mod equilibrium;
pub mod error;
pub mod graph;
pub mod numeric;
pub mod rng;
pub mod scoring;
pub mod voter;

pub use contest::{ContestSummary, ExploitOutcome, OfferMatrix, PairwiseTally, PayoffVector, Strategy, TieBreakPolicy};
pub use equilibrium::{DeviationDistribution, EquilibriumFamily};
pub use error::{Error, Result};
pub use graph::{InfluenceGraph, TransitionMatrix, ValueVector};
pub use scoring::RankScoringRule;
pub use voter::PreferenceState;
