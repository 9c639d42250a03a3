use proptest::prelude::*;
use proptest::strategy::ValueTree;
use rand::Rng;
use rankbid_core::rng;
use rankbid_core::scoring::RuleShape;
use rankbid_core::{DeviationDistribution, EquilibriumFamily, RankScoringRule, ValueVector};

const BUDGET: f64 = 1000.0;

fn arb_rule() -> impl Strategy<Value = RankScoringRule> {
    prop::collection::vec(0.0f64..10.0, 2..9)
        .prop_filter("not all equal", |v| v.iter().any(|&x| x != v[0]))
        .prop_map(|v| RankScoringRule::normalize(&v).unwrap())
}

fn random_rules(count: usize) -> Vec<RankScoringRule> {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    (0..count).map(|_| arb_rule().new_tree(&mut runner).unwrap().current()).collect()
}

fn all_rules() -> Vec<RankScoringRule> {
    let mut rules: Vec<RankScoringRule> = (2..=8).map(|k| RankScoringRule::winner_takes_all(k).unwrap()).collect();
    rules.extend((2..=8).map(|k| RankScoringRule::borda(k).unwrap()));
    rules.extend(random_rules(20));
    rules
}

#[test]
fn cdf_inverts_quantile() {
    for rule in all_rules() {
        let fam = EquilibriumFamily::new(rule.clone(), BUDGET, 1.0).unwrap();
        let v = 0.05;
        let mut worst: f64 = 0.0;
        for i in 0..10_000 {
            let u = i as f64 / 9_999.0;
            let x = fam.quantile(v, u).unwrap();
            worst = worst.max((fam.cdf(v, x).unwrap() - u).abs());
        }
        assert!(worst < 1e-9, "{rule}: {worst}");
    }
}

#[test]
fn quantile_strictly_increasing_with_fixed_ends() {
    for rule in all_rules() {
        let fam = EquilibriumFamily::new(rule.clone(), BUDGET, 1.0).unwrap();
        assert_eq!(fam.quantile(0.1, 0.0).unwrap(), 0.0);
        assert!((fam.quantile(0.1, 1.0).unwrap() - fam.support_upper(0.1)).abs() < 1e-12);
        let mut prev = 0.0;
        for i in 1..=1000 {
            let x = fam.quantile(0.1, i as f64 / 1000.0).unwrap();
            assert!(x > prev, "{rule}");
            prev = x;
        }
    }
}

#[test]
fn bisection_agrees_with_closed_forms() {
    for k in 2..=8 {
        for rule in [RankScoringRule::winner_takes_all(k).unwrap(), RankScoringRule::borda(k).unwrap()] {
            assert_ne!(rule.shape(), RuleShape::General);
            let fam = EquilibriumFamily::new(rule, BUDGET, 1.0).unwrap();
            let upper = fam.support_upper(0.05);
            for i in 0..=2000 {
                let x = upper * i as f64 / 2000.0;
                let a = fam.cdf(0.05, x).unwrap();
                let b = fam.cdf_bisection(0.05, x).unwrap();
                assert!((a - b).abs() < 1e-10, "k={k} x={x}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn cdf_has_no_atoms() {
    let eps = 1e-8;
    for rule in all_rules() {
        let fam = EquilibriumFamily::new(rule.clone(), BUDGET, 1.0).unwrap();
        let upper = fam.support_upper(0.05);
        for i in 0..=1000 {
            let x = -0.01 * upper + 1.02 * upper * i as f64 / 1000.0;
            let jump = fam.cdf(0.05, x + eps).unwrap() - fam.cdf(0.05, x - eps).unwrap();
            assert!(jump.abs() < 1e-4, "{rule} x={x} jump={jump}");
        }
    }
}

#[test]
fn expected_score_is_linear_on_support() {
    for rule in all_rules() {
        let fam = EquilibriumFamily::new(rule.clone(), BUDGET, 3.0).unwrap();
        let v = 0.2;
        let upper = fam.support_upper(v);
        for i in 1..1000 {
            let x = upper * i as f64 / 1000.0;
            let q = fam.cdf(v, x).unwrap();
            let lhs = v * rule.expected_score(q).unwrap();
            assert!((lhs - fam.alpha() * x).abs() < 1e-9, "{rule} x={x}");
        }
    }
}

#[test]
fn quantile_scales_with_value() {
    for rule in all_rules() {
        let fam = EquilibriumFamily::new(rule, BUDGET, 1.0).unwrap();
        let (vn, vm) = (0.07, 0.013);
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            let lhs = fam.quantile(vn, u).unwrap();
            let rhs = vn / vm * fam.quantile(vm, u).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1.0));
        }
    }
}

#[test]
fn mean_offer_meets_budget_share() {
    for rule in all_rules() {
        let fam = EquilibriumFamily::new(rule.clone(), BUDGET, 1.0).unwrap();
        for v in [0.01, 0.05, 0.3] {
            let mean = fam.verify_mean_constraint(v).unwrap();
            let want = fam.mean_offer(v);
            assert!((mean - want).abs() <= 1e-6 * want, "{rule}: {mean} vs {want}");
        }
    }
}

/// Random distribution with mean `mean` and support in `[0, cap]`: draw
/// random points below `cap`, then mix with 0 or `cap` to hit the mean.
fn random_deviation<R: Rng>(rng: &mut R, mean: f64, cap: f64) -> DeviationDistribution {
    let m = rng.random_range(1..6);
    let pts: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..cap)).collect();
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let probs: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let base: f64 = pts.iter().zip(&probs).map(|(x, p)| x * p).sum();
    let (anchor, t) = if base > mean { (0.0, (base - mean) / base) } else { (cap, (mean - base) / (cap - base)) };
    let mut points = pts;
    let mut weights: Vec<f64> = probs.iter().map(|p| p * (1.0 - t)).collect();
    points.push(anchor);
    weights.push(t);
    let s: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= s);
    DeviationDistribution::new(points, weights).unwrap()
}

#[test]
fn no_profitable_deviation() {
    let mut rng = rng::stream(99, &[]);
    for rule in all_rules() {
        let k = rule.campaign_count() as f64;
        let fam = EquilibriumFamily::new(rule.clone(), BUDGET, 1.0).unwrap();
        let v = 0.04;
        let mean = fam.mean_offer(v);
        for trial in 0..100 {
            // half inside the support, half reaching up to three times beyond it
            let cap = if trial % 2 == 0 { fam.support_upper(v) } else { 3.0 * fam.support_upper(v) };
            let g = random_deviation(&mut rng, mean, cap);
            fam.check_deviation_mean(v, &g, 1e-9).unwrap();
            let score = fam.deviation_expected_score(v, &g);
            assert!(score <= v / k + 1e-9, "{rule}: {score} > {}", v / k);
            if trial % 2 == 0 {
                assert!((score - v / k).abs() < 1e-12);
            }
            // independent route: v_n r(F_n(x)) integrated against g
            let direct: f64 = g.iter().map(|(x, p)| p * v * rule.expected_score(fam.cdf(v, x).unwrap()).unwrap()).sum();
            assert!((direct - score).abs() < 1e-9);
        }
    }
}

#[test]
fn borda_samples_pass_ks_test() {
    let n = 100_000;
    let rule = RankScoringRule::borda(5).unwrap();
    // n independent draws for one customer with v_n / V = 1/20
    let fam = EquilibriumFamily::new(rule, BUDGET, 20.0).unwrap();
    let values = ValueVector::uniform(n, 1.0).unwrap();
    let mut draws = fam.sample_offers(&values, 17);
    let upper = 2.0 * BUDGET / 20.0;
    draws.sort_by(f64::total_cmp);
    let d = draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = x / upper;
            (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < 1.95 / (n as f64).sqrt(), "KS statistic {d}");
}

#[test]
fn sample_mean_approaches_budget_share() {
    let fam = EquilibriumFamily::new(RankScoringRule::winner_takes_all(3).unwrap(), BUDGET, 1.0).unwrap();
    let mut prev = f64::INFINITY;
    for n in [100usize, 10_000, 1_000_000] {
        let values = ValueVector::uniform(n, 1.0 / n as f64).unwrap();
        let offers = fam.sample_offers(&values, 5);
        let rel = (offers.iter().sum::<f64>() / BUDGET - 1.0).abs();
        assert!(rel < prev || rel < 1e-3, "n={n} rel={rel}");
        prev = rel;
    }
    assert!(prev < 5e-3);
}
