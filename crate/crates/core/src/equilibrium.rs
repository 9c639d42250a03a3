//! The scalable symmetric-equilibrium offer distribution.
//!
//! With `K` campaigns, common budget `B` and total customer value `V`, every
//! campaign offers customer `n` (value `v_n`) an amount drawn from `F_n`,
//! where `F_n` is supported on `[0, s_1 K B v_n / V]` and satisfies
//!
//! ```text
//! v_n · r(F_n(x)) = α · x,    α = V / (K B).
//! ```
//!
//! Inverting gives the quantile in closed form, `Q(u) = (K B v_n / V) · r(u)`,
//! so sampling never needs a root finder. The CDF itself requires solving
//! `r(q) = α x / v_n`, which is done by bisection except for the
//! winner-takes-all and Borda families where it is explicit.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::ValueVector;
use crate::numeric::{bisect_increasing, simpson};
use crate::rng;
use crate::scoring::{check_probability, RankScoringRule, RuleShape};

/// Absolute tolerance on `q` for the CDF bisection.
pub const BISECTION_TOL: f64 = 1e-12;
pub const BISECTION_MAX_ITER: usize = 200;
/// Simpson panels used for mean-offer quadrature.
pub const QUADRATURE_PANELS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumFamily {
    rule: RankScoringRule,
    budget: f64,
    total_value: f64,
    alpha: f64,
}

impl EquilibriumFamily {
    pub fn new(rule: RankScoringRule, budget: f64, total_value: f64) -> Result<Self> {
        if !(budget.is_finite() && budget > 0.0) {
            return Err(Error::input(format!("budget must be positive and finite, got {budget}")));
        }
        if !(total_value.is_finite() && total_value > 0.0) {
            return Err(Error::input(format!("total value must be positive and finite, got {total_value}")));
        }
        let alpha = total_value / (rule.campaign_count() as f64 * budget);
        Ok(EquilibriumFamily { rule, budget, total_value, alpha })
    }

    pub fn rule(&self) -> &RankScoringRule {
        &self.rule
    }

    pub fn campaign_count(&self) -> usize {
        self.rule.campaign_count()
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn total_value(&self) -> f64 {
        self.total_value
    }

    /// Value won per unit of currency offered on the support, `V / (K B)`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Right end of the support for a customer of value `v_n`.
    pub fn support_upper(&self, v_n: f64) -> f64 {
        self.rule.top() * v_n / self.alpha
    }

    /// Budget share `B v_n / V` that every offer distribution must average.
    pub fn mean_offer(&self, v_n: f64) -> f64 {
        self.budget * v_n / self.total_value
    }

    fn check_scale(v_n: f64) -> Result<()> {
        if v_n.is_finite() && v_n > 0.0 {
            Ok(())
        } else {
            Err(Error::input(format!("customer value must be positive and finite, got {v_n}")))
        }
    }

    /// `F_n(x)`: probability that a campaign offers this customer less than `x`.
    ///
    /// Uses the explicit inverse for winner-takes-all and Borda rules and
    /// bisection otherwise.
    pub fn cdf(&self, v_n: f64, x: f64) -> Result<f64> {
        match self.cdf_edge(v_n, x)? {
            Some(p) => Ok(p),
            None => {
                let ratio = x / self.support_upper(v_n);
                Ok(match self.rule.shape() {
                    RuleShape::WinnerTakesAll => ratio.powf(1.0 / (self.campaign_count() - 1) as f64),
                    RuleShape::Borda => ratio,
                    RuleShape::General => self.solve_q(v_n, x),
                })
            }
        }
    }

    /// `F_n(x)` by bisection regardless of rule shape.
    pub fn cdf_bisection(&self, v_n: f64, x: f64) -> Result<f64> {
        Ok(match self.cdf_edge(v_n, x)? {
            Some(p) => p,
            None => self.solve_q(v_n, x),
        })
    }

    fn cdf_edge(&self, v_n: f64, x: f64) -> Result<Option<f64>> {
        Self::check_scale(v_n)?;
        if x.is_nan() {
            return Err(Error::input("offer is NaN"));
        }
        Ok(if x <= 0.0 {
            Some(0.0)
        } else if x >= self.support_upper(v_n) {
            Some(1.0)
        } else {
            None
        })
    }

    fn solve_q(&self, v_n: f64, x: f64) -> f64 {
        let target = self.alpha * x / v_n;
        let b = bisect_increasing(
            |q| self.rule.expected_score_unchecked(q),
            target,
            0.0,
            1.0,
            BISECTION_TOL,
            BISECTION_MAX_ITER,
        );
        b.root
    }

    /// `Q_n(u) = (K B v_n / V) · r(u)`.
    pub fn quantile(&self, v_n: f64, u: f64) -> Result<f64> {
        Self::check_scale(v_n)?;
        check_probability(u)?;
        Ok(self.quantile_unchecked(v_n, u))
    }

    fn quantile_unchecked(&self, v_n: f64, u: f64) -> f64 {
        v_n / self.alpha * self.rule.expected_score_unchecked(u)
    }

    /// Density `f_n(x) = α / (v_n · r'(F_n(x)))` on the open support, zero
    /// outside. Infinite where `r'` vanishes (e.g. at `x = 0` for
    /// winner-takes-all with `K > 2`).
    pub fn density(&self, v_n: f64, x: f64) -> Result<f64> {
        let q = self.cdf(v_n, x)?;
        if x < 0.0 || x > self.support_upper(v_n) {
            return Ok(0.0);
        }
        let slope = self.rule.expected_score_derivative(q)?;
        Ok(if slope > 0.0 { self.alpha / (v_n * slope) } else { f64::INFINITY })
    }

    /// One draw per customer by inverse transform. Customers of zero value
    /// are offered nothing.
    pub fn sample_offers_with<R: Rng + ?Sized>(&self, values: &[f64], rng: &mut R) -> Vec<f64> {
        values.iter().map(|&v| if v > 0.0 { self.quantile_unchecked(v, rng.random::<f64>()) } else { 0.0 }).collect()
    }

    /// [`Self::sample_offers_with`] on the stream derived from `seed`.
    pub fn sample_offers(&self, values: &ValueVector, seed: u64) -> Vec<f64> {
        self.sample_offers_with(values.as_slice(), &mut rng::stream(seed, &[]))
    }

    /// Expected score, in value units, of a campaign that draws its offer to
    /// customer `n` from `g` while every rival plays `F_n`.
    ///
    /// On the support `v_n r(F_n(x)) = α x`; above it the score saturates at
    /// `s_1 v_n`.
    pub fn deviation_expected_score(&self, v_n: f64, g: &DeviationDistribution) -> f64 {
        let cap = self.rule.top() * v_n;
        g.iter().map(|(x, p)| p * (self.alpha * x).min(cap)).sum()
    }

    /// Checks that `g` averages the budget share `B v_n / V` within `rel_tol`.
    pub fn check_deviation_mean(&self, v_n: f64, g: &DeviationDistribution, rel_tol: f64) -> Result<()> {
        let want = self.mean_offer(v_n);
        if (g.mean() - want).abs() <= rel_tol * want {
            Ok(())
        } else {
            Err(Error::input(format!("deviation mean {} differs from budget share {want}", g.mean())))
        }
    }

    /// Mean offer `∫₀¹ Q_n(u) du` by composite Simpson quadrature.
    pub fn verify_mean_constraint(&self, v_n: f64) -> Result<f64> {
        Self::check_scale(v_n)?;
        Ok(simpson(|u| self.quantile_unchecked(v_n, u), 0.0, 1.0, QUADRATURE_PANELS))
    }

    /// `points` evenly spaced `(x, F_n(x))` pairs over the support, both ends included.
    pub fn cdf_curve(&self, v_n: f64, points: usize) -> Result<Vec<(f64, f64)>> {
        let upper = self.support_upper(v_n);
        grid(points)?
            .map(|t| {
                let x = if t == 1.0 { upper } else { upper * t };
                self.cdf(v_n, x).map(|p| (x, p))
            })
            .collect()
    }

    /// `points` evenly spaced `(u, Q_n(u))` pairs over `[0, 1]`.
    pub fn quantile_curve(&self, v_n: f64, points: usize) -> Result<Vec<(f64, f64)>> {
        grid(points)?.map(|u| self.quantile(v_n, u).map(|x| (u, x))).collect()
    }
}

fn grid(points: usize) -> Result<impl Iterator<Item = f64>> {
    if points < 2 {
        return Err(Error::input("a curve needs at least 2 points"));
    }
    let last = (points - 1) as f64;
    Ok((0..points).map(move |i| i as f64 / last))
}

/// A finite offer distribution used to probe deviations from equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationDistribution {
    points: Vec<f64>,
    probabilities: Vec<f64>,
    mean: f64,
}

impl DeviationDistribution {
    /// Builds from `(offer, weight)` pairs; sorted by offer on construction.
    pub fn new(points: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        Error::check_dim(points.len(), probabilities.len())?;
        if points.is_empty() {
            return Err(Error::input("deviation distribution has no support points"));
        }
        if points.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::input("support points must be finite and nonnegative"));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::input("weights must be finite and nonnegative"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!("weights sum to {total}, not 1")));
        }
        let mut pairs: Vec<(f64, f64)> = points.into_iter().zip(probabilities).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (points, probabilities): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let mean = points.iter().zip(&probabilities).map(|(x, p)| x * p).sum();
        Ok(DeviationDistribution { points, probabilities, mean })
    }

    pub fn point_mass(x: f64) -> Result<Self> {
        Self::new(vec![x], vec![1.0])
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `(offer, probability)` pairs in ascending offer order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.probabilities.iter().copied())
    }

    /// Same shape with every support point multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.points.iter().map(|x| x * factor).collect(), self.probabilities.clone())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (x, p) in self.iter() {
            acc += p;
            if u < acc {
                return x;
            }
        }
        self.points[self.points.len() - 1]
    }
}
