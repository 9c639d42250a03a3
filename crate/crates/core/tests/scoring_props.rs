use proptest::prelude::*;
use proptest::strategy::ValueTree;
use rankbid_core::numeric::simpson;
use rankbid_core::scoring::{position_probability, RankScoringRule};

fn arb_rule() -> impl Strategy<Value = RankScoringRule> {
    prop::collection::vec(0.0f64..10.0, 2..12)
        .prop_filter("not all equal", |v| v.iter().any(|&x| x != v[0]))
        .prop_map(|v| RankScoringRule::normalize(&v).unwrap())
}

proptest! {
    #[test]
    fn rule_invariants(rule in arb_rule()) {
        let s = rule.scores();
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(*s.last().unwrap(), 0.0);
        prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(rule.top() > 0.0);
    }

    #[test]
    fn normalize_is_idempotent(rule in arb_rule()) {
        let again = RankScoringRule::normalize(rule.scores()).unwrap();
        for (a, b) in again.scores().iter().zip(rule.scores()) {
            prop_assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn position_probabilities_sum_to_one(k in 2usize..45) {
        for i in 0..=200 {
            let q = i as f64 / 200.0;
            let total: f64 = (1..=k).map(|j| position_probability(j, q, k).unwrap()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12, "k={} q={} total={}", k, q, total);
        }
    }

    #[test]
    fn expected_score_strictly_increasing(rule in arb_rule()) {
        let mut prev = rule.expected_score(0.0).unwrap();
        for i in 1..=1000 {
            let cur = rule.expected_score(i as f64 / 1000.0).unwrap();
            prop_assert!(cur > prev);
            prev = cur;
        }
    }

    #[test]
    fn expected_score_matches_telescoped_form(rule in arb_rule()) {
        // r(q) = Σ_{j=2..K} (s_{j-1} - s_j) Σ_{m<j} P(m, q)
        let k = rule.campaign_count();
        for i in 0..=100 {
            let q = i as f64 / 100.0;
            let alt: f64 = (2..=k)
                .map(|j| {
                    let head: f64 = (1..j).map(|m| position_probability(m, q, k).unwrap()).sum();
                    (rule.score(j - 1) - rule.score(j)) * head
                })
                .sum();
            prop_assert!((rule.expected_score(q).unwrap() - alt).abs() < 1e-12);
        }
    }
}

#[test]
fn expected_score_integrates_to_one_over_k() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..30 {
        let rule = arb_rule().new_tree(&mut runner).unwrap().current();
        let integral = simpson(|q| rule.expected_score(q).unwrap(), 0.0, 1.0, 10_000);
        let k = rule.campaign_count() as f64;
        assert!((integral - 1.0 / k).abs() < 1e-9, "{rule}: {integral}");
    }
}
