use proptest::prelude::*;
use rankbid_core::contest::{
    intrinsic_payoffs, monte_carlo_contest, monte_carlo_contest_with, rank_offers, Strategy as Play,
};
use rankbid_core::rng;
use rankbid_core::{
    DeviationDistribution, EquilibriumFamily, OfferMatrix, RankScoringRule, TieBreakPolicy, ValueVector,
};

fn arb_rule(k: usize) -> impl Strategy<Value = RankScoringRule> {
    prop::collection::vec(0.0f64..5.0, k)
        .prop_filter("not all equal", |v| v.iter().any(|&x| x != v[0]))
        .prop_map(|v| RankScoringRule::normalize(&v).unwrap())
}

/// Offers drawn from a small grid so ties are common.
fn arb_case() -> impl Strategy<Value = (RankScoringRule, OfferMatrix, ValueVector)> {
    (2usize..6, 1usize..8).prop_flat_map(|(k, n)| {
        (
            arb_rule(k),
            prop::collection::vec(prop::collection::vec((0u8..4).prop_map(f64::from), n), k),
            prop::collection::vec(0.0f64..10.0, n),
        )
            .prop_map(|(rule, rows, w)| (rule, OfferMatrix::new(rows).unwrap(), ValueVector::new(w).unwrap()))
    })
}

fn policies() -> [TieBreakPolicy; 2] {
    [TieBreakPolicy::AverageScores, TieBreakPolicy::SeededRandom]
}

proptest! {
    #[test]
    fn payoffs_conserve_value((rule, x, w) in arb_case(), seed in any::<u64>()) {
        for policy in policies() {
            let p = intrinsic_payoffs(&x, &w, &rule, policy, &mut rng::stream(seed, &[])).unwrap();
            prop_assert!((p.total() - w.total()).abs() < 1e-9);
        }
    }

    #[test]
    fn ranking_respects_offer_order((rule, x, _w) in arb_case(), seed in any::<u64>()) {
        for policy in policies() {
            for n in 0..x.customers() {
                let col = x.column(n);
                let s = rank_offers(&col, &rule, policy, &mut rng::stream(seed, &[n as u64]));
                prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for a in 0..col.len() {
                    for b in 0..col.len() {
                        if col[a] > col[b] {
                            prop_assert!(s[a] >= s[b]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn raising_an_offer_never_hurts((rule, x, w) in arb_case(), who in 0usize..6, at in 0usize..8, bump in 0.5f64..3.0) {
        let who = who % x.campaigns();
        let at = at % x.customers();
        let before = intrinsic_payoffs(&x, &w, &rule, TieBreakPolicy::AverageScores, &mut rng::stream(0, &[])).unwrap();
        let mut raised = x.clone();
        raised.set(who, at, x.get(who, at) + bump).unwrap();
        let after = intrinsic_payoffs(&raised, &w, &rule, TieBreakPolicy::AverageScores, &mut rng::stream(0, &[])).unwrap();
        prop_assert!(after.0[who] >= before.0[who] - 1e-12);
    }
}

/// Every way to split `units` budget units over `n` customers, in grid steps.
fn allocations(n: usize, units: u32) -> Vec<Vec<u32>> {
    if n == 1 {
        return vec![vec![units]];
    }
    (0..=units)
        .flat_map(|first| {
            allocations(n - 1, units - first).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

#[test]
fn brute_force_two_campaign_oracle() {
    // 5 grid levels {0, .25, .5, .75, 1} of a unit budget
    let rule = RankScoringRule::winner_takes_all(2).unwrap();
    let values = [3.0, 1.5, 0.25];
    for n in 1..=3 {
        let w = ValueVector::new(values[..n].to_vec()).unwrap();
        let grid = allocations(n, 4);
        for a in &grid {
            for b in &grid {
                let to_offer = |v: &Vec<u32>| v.iter().map(|&u| u as f64 * 0.25).collect::<Vec<_>>();
                let x = OfferMatrix::new(vec![to_offer(a), to_offer(b)]).unwrap();
                let got =
                    intrinsic_payoffs(&x, &w, &rule, TieBreakPolicy::AverageScores, &mut rng::stream(0, &[])).unwrap();
                // direct: the customer's whole value to the higher offer, split on a tie
                let mut want = [0.0, 0.0];
                for i in 0..n {
                    match a[i].cmp(&b[i]) {
                        std::cmp::Ordering::Greater => want[0] += values[i],
                        std::cmp::Ordering::Less => want[1] += values[i],
                        std::cmp::Ordering::Equal => {
                            want[0] += values[i] / 2.0;
                            want[1] += values[i] / 2.0;
                        }
                    }
                }
                assert_eq!(got.0, want, "a={a:?} b={b:?}");
            }
        }
    }
}

fn hetero_values(n: usize) -> ValueVector {
    ValueVector::new((0..n).map(|i| 1.0 + (i * 7 % 11) as f64).collect()).unwrap()
}

#[test]
fn symmetric_play_is_fair() {
    let values = hetero_values(20);
    let v = values.total();
    for k in [2, 4, 6] {
        for rule in [RankScoringRule::winner_takes_all(k).unwrap(), RankScoringRule::borda(k).unwrap()] {
            let fam = EquilibriumFamily::new(rule, 1000.0, v).unwrap();
            let s = monte_carlo_contest(&fam, &values, 20_000, 31 + k as u64).unwrap();
            assert!(s.max_total_defect < 1e-9);
            let z = s.max_z_score(v / k as f64).unwrap();
            assert!(z < 3.0, "k={k} z={z} {s:?}");
        }
    }
}

#[test]
fn contest_is_deterministic_across_thread_counts() {
    let values = hetero_values(7);
    let fam = EquilibriumFamily::new(RankScoringRule::borda(3).unwrap(), 100.0, values.total()).unwrap();
    let a = monte_carlo_contest(&fam, &values, 3_000, 8).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| monte_carlo_contest(&fam, &values, 3_000, 8).unwrap());
    assert_eq!(a, b);
}

#[test]
fn mean_respecting_deviation_gains_nothing() {
    let values = hetero_values(20);
    let v = values.total();
    let k = 3;
    let fam = EquilibriumFamily::new(RankScoringRule::winner_takes_all(k).unwrap(), 1000.0, v).unwrap();
    // multiples of the budget share; the support ends at s_1 K = 3
    let deviations = [
        DeviationDistribution::point_mass(1.0).unwrap(),
        DeviationDistribution::new(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap(),
        DeviationDistribution::new(vec![0.0, 6.0], vec![5.0 / 6.0, 1.0 / 6.0]).unwrap(),
    ];
    for g in deviations {
        let mut plays = vec![Play::Equilibrium; k];
        plays[0] = Play::Deviation(g.clone());
        let s = monte_carlo_contest_with(&fam, &values, &plays, TieBreakPolicy::AverageScores, 20_000, 12).unwrap();
        let fair = v / k as f64;
        assert!(s.mean[0] <= fair + 3.0 * s.stderr[0], "{g:?}: {} vs {fair}", s.mean[0]);
    }
}
