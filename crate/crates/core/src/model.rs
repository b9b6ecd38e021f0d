//! Closed-form category probabilities for the three ordinal families.
//!
//! All three families share the parameterization `eta_r = theta - delta_r` and
//! a symmetric response function `F`:
//!
//! * **cumulative**: `P(Y >= r) = F(eta_r)`, so `P(Y = r) = F(eta_r) - F(eta_{r+1})`
//!   with `F(eta_0) = 1`, `F(eta_{k+1}) = 0`. Thresholds must be nondecreasing.
//! * **sequential**: `P(Y >= r | Y >= r-1) = F(eta_r)`, a chain of transitions
//!   that stops at the first failure.
//! * **partial credit (PCM)**: `P(Y = r | Y in {r-1, r}) = F(eta_r)`. Under the
//!   logistic function this is `P(Y = r) ∝ exp(sum_{j<=r} eta_j)`.
//!
//! Every path is evaluated in log space and exponentiated once at the end.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::response::{log_diff_exp, log_sum_exp, ResponseFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Cumulative,
    Sequential,
    #[serde(rename = "pcm")]
    AdjacentPcm,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Cumulative, Family::Sequential, Family::AdjacentPcm];

    pub fn name(self) -> &'static str {
        match self {
            Family::Cumulative => "cumulative",
            Family::Sequential => "sequential",
            Family::AdjacentPcm => "pcm",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "cumulative" => Ok(Family::Cumulative),
            "sequential" => Ok(Family::Sequential),
            "pcm" => Ok(Family::AdjacentPcm),
            other => Err(Error::invalid(format!(
                "unknown family '{other}' (expected cumulative, sequential or pcm)"
            ))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Thresholds `delta_1..delta_k` of a single item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemThresholds {
    pub item_id: String,
    pub deltas: Vec<f64>,
}

impl ItemThresholds {
    pub fn new(item_id: impl Into<String>, deltas: Vec<f64>) -> Result<Self> {
        let item_id = item_id.into();
        if deltas.is_empty() {
            return Err(Error::invalid(format!("item '{item_id}' has no thresholds")));
        }
        if let Some(d) = deltas.iter().find(|d| !d.is_finite()) {
            return Err(Error::invalid(format!("item '{item_id}' has non-finite threshold {d}")));
        }
        Ok(Self { item_id, deltas })
    }

    /// Number of thresholds; the item has `k + 1` categories.
    pub fn k(&self) -> usize {
        self.deltas.len()
    }

    /// First adjacent pair `(r, r+1)` (1-based) with `delta_r > delta_{r+1}`.
    pub fn first_disorder(&self) -> Option<(usize, usize)> {
        self.deltas
            .windows(2)
            .position(|w| w[0] > w[1])
            .map(|i| (i + 1, i + 2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonAbility {
    pub person_id: String,
    pub theta: f64,
}

impl PersonAbility {
    pub fn new(person_id: impl Into<String>, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(Self { person_id: person_id.into(), theta })
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("ability {theta} is not finite")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinalModel {
    family: Family,
    response: ResponseFunction,
    thresholds: ItemThresholds,
}

impl OrdinalModel {
    /// Validates the thresholds; the cumulative family rejects any decreasing pair.
    pub fn new(family: Family, response: ResponseFunction, thresholds: ItemThresholds) -> Result<Self> {
        let thresholds = ItemThresholds::new(thresholds.item_id, thresholds.deltas)?;
        if family == Family::Cumulative {
            if let Some((first, second)) = thresholds.first_disorder() {
                return Err(Error::OrderingViolation {
                    first,
                    second,
                    detail: format!(
                        "cumulative item '{}' needs delta_{first} <= delta_{second}, got {} > {}",
                        thresholds.item_id,
                        thresholds.deltas[first - 1],
                        thresholds.deltas[second - 1]
                    ),
                });
            }
        }
        Ok(Self { family, response, thresholds })
    }

    /// Logistic model with an anonymous item id.
    pub fn logistic(family: Family, deltas: &[f64]) -> Result<Self> {
        Self::new(family, ResponseFunction::Logistic, ItemThresholds::new("item", deltas.to_vec())?)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn response(&self) -> &ResponseFunction {
        &self.response
    }

    pub fn thresholds(&self) -> &ItemThresholds {
        &self.thresholds
    }

    pub fn deltas(&self) -> &[f64] {
        &self.thresholds.deltas
    }

    pub fn k(&self) -> usize {
        self.thresholds.k()
    }

    /// Same family and response function with new thresholds.
    pub fn with_deltas(&self, deltas: Vec<f64>) -> Result<Self> {
        Self::new(
            self.family,
            self.response,
            ItemThresholds { item_id: self.thresholds.item_id.clone(), deltas },
        )
    }

    /// `ln P(Y = r)` for `r = 0..=k`.
    pub fn log_category_probs(&self, theta: f64) -> Result<Vec<f64>> {
        check_theta(theta)?;
        let f = &self.response;
        let eta: Vec<f64> = self.deltas().iter().map(|d| theta - d).collect();
        let k = eta.len();
        let logp = match self.family {
            Family::Cumulative => (0..=k)
                .map(|r| {
                    if r == 0 {
                        f.log_survival(eta[0])
                    } else if r == k {
                        f.log_eval(eta[k - 1])
                    } else if eta[r] >= 0.0 {
                        // Both exceedances near one: difference of survivals.
                        log_diff_exp(f.log_survival(eta[r]), f.log_survival(eta[r - 1]))
                    } else {
                        log_diff_exp(f.log_eval(eta[r - 1]), f.log_eval(eta[r]))
                    }
                })
                .collect(),
            Family::Sequential => {
                let mut out = Vec::with_capacity(k + 1);
                let mut reached = 0.0;
                for r in 0..=k {
                    if r > 0 {
                        reached += f.log_eval(eta[r - 1]);
                    }
                    let stop = if r < k { f.log_survival(eta[r]) } else { 0.0 };
                    out.push(reached + stop);
                }
                out
            }
            Family::AdjacentPcm => {
                let mut partial = Vec::with_capacity(k + 1);
                partial.push(0.0);
                let mut acc = 0.0;
                for &e in &eta {
                    acc += f.log_odds(e);
                    partial.push(acc);
                }
                let norm = log_sum_exp(&partial);
                partial.iter().map(|s| s - norm).collect()
            }
        };
        Ok(logp)
    }

    pub fn category_probs(&self, theta: f64) -> Result<OrdinalDistribution> {
        let logp = self.log_category_probs(theta)?;
        Ok(OrdinalDistribution { probs: logp.into_iter().map(f64::exp).collect() })
    }

    /// `P(Y >= r)`. For the cumulative family this is `F(theta - delta_r)` itself.
    pub fn exceedance_prob(&self, theta: f64, r: usize) -> Result<f64> {
        check_theta(theta)?;
        let k = self.k();
        if r > k {
            return Err(Error::IndexOutOfRange { index: r, max: k });
        }
        if r == 0 {
            return Ok(1.0);
        }
        if self.family == Family::Cumulative {
            return Ok(self.response.eval(theta - self.deltas()[r - 1]));
        }
        Ok(self.category_probs(theta)?.tail(r))
    }

    /// `ln(P(Y=r) / P(Y=r-1)) = theta - delta_r`; PCM with logistic `F` only.
    pub fn adjacent_log_odds(&self, theta: f64, r: usize) -> Result<f64> {
        check_theta(theta)?;
        if self.family != Family::AdjacentPcm || !self.response.is_logistic() {
            return Err(Error::Unsupported(format!(
                "adjacent log-odds need a logistic pcm, got {} / {}",
                self.family,
                self.response.name()
            )));
        }
        self.check_step(r)?;
        Ok(theta - self.deltas()[r - 1])
    }

    /// The local binary model of step `r`, read off the distribution:
    /// `P(Y=r | Y in {r-1,r})` for PCM, `P(Y>=r | Y>=r-1)` for sequential.
    pub fn local_conditional_prob(&self, theta: f64, r: usize) -> Result<f64> {
        self.check_step(r)?;
        let logp = self.log_category_probs(theta)?;
        match self.family {
            Family::AdjacentPcm => {
                let denom = log_sum_exp(&[logp[r - 1], logp[r]]);
                Ok((logp[r] - denom).exp())
            }
            Family::Sequential => {
                let upper = log_sum_exp(&logp[r..]);
                let lower = log_sum_exp(&logp[r - 1..]);
                Ok((upper - lower).exp())
            }
            Family::Cumulative => Err(Error::Unsupported(
                "the cumulative family has marginal, not conditional, binary models".into(),
            )),
        }
    }

    /// Applies the reverse permutation `r -> k - r`: `theta' = -theta`,
    /// `delta'_r = -delta_{k+1-r}`. Only the PCM is invariant under it.
    pub fn reverse_pcm(&self, theta: f64) -> Result<(OrdinalModel, f64)> {
        if self.family != Family::AdjacentPcm {
            return Err(Error::Unsupported(format!(
                "reverse_pcm on a {} model; use mirror() for the raw transform",
                self.family
            )));
        }
        self.mirror(theta)
    }

    /// The reversal parameter transform applied to any family.
    pub fn mirror(&self, theta: f64) -> Result<(OrdinalModel, f64)> {
        check_theta(theta)?;
        let deltas = self.deltas().iter().rev().map(|d| -d).collect();
        Ok((self.with_deltas(deltas)?, -theta))
    }

    /// `(theta, P(Y = r))` over a strictly increasing grid.
    pub fn icc_curve(&self, r: usize, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
        check_grid(grid)?;
        if r > self.k() {
            return Err(Error::IndexOutOfRange { index: r, max: self.k() });
        }
        grid.iter()
            .map(|&t| Ok((t, self.log_category_probs(t)?[r].exp())))
            .collect()
    }

    /// `(theta, P(Y >= r))` over a strictly increasing grid.
    pub fn exceedance_curve(&self, r: usize, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
        check_grid(grid)?;
        grid.iter().map(|&t| Ok((t, self.exceedance_prob(t, r)?))).collect()
    }

    /// Grid argmax of every category curve, smallest grid point on ties.
    pub fn curve_modes(&self, grid: &[f64]) -> Result<Vec<f64>> {
        check_grid(grid)?;
        let k = self.k();
        let mut best = vec![(f64::NEG_INFINITY, grid[0]); k + 1];
        for &t in grid {
            let logp = self.log_category_probs(t)?;
            for (slot, &lp) in best.iter_mut().zip(&logp) {
                if lp > slot.0 {
                    *slot = (lp, t);
                }
            }
        }
        Ok(best.into_iter().map(|(_, t)| t).collect())
    }

    fn check_step(&self, r: usize) -> Result<()> {
        if r == 0 || r > self.k() {
            return Err(Error::IndexOutOfRange { index: r, max: self.k() });
        }
        Ok(())
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("empty theta grid"));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("theta grid has non-finite values"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("theta grid must be strictly increasing"));
    }
    Ok(())
}

/// `lo, lo + step, ...` up to `hi` inclusive (with a small tolerance for
/// accumulated rounding). `lo == hi` gives a single point.
pub fn theta_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo {
        return Err(Error::invalid(format!("malformed grid {lo}:{hi}:{step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + step * i as f64).collect())
}

/// Probabilities over categories `0..=k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrdinalDistribution {
    probs: Vec<f64>,
}

pub const NORMALIZATION_TOL: f64 = 1e-12;

impl OrdinalDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::invalid("a distribution needs at least two categories"));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0 && **p <= 1.0)) {
            return Err(Error::invalid(format!("probability {p} outside [0,1]")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs })
    }

    /// Normalizes log-masses with log-sum-exp.
    pub fn from_log_masses(log_masses: &[f64]) -> Result<Self> {
        let norm = log_sum_exp(log_masses);
        if !norm.is_finite() {
            return Err(Error::invalid("log masses do not normalize"));
        }
        Self::new(log_masses.iter().map(|m| (m - norm).exp()).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn k(&self) -> usize {
        self.probs.len() - 1
    }

    /// `P(Y >= r)`, summed from the top category down.
    pub fn tail(&self, r: usize) -> f64 {
        self.probs[r..].iter().rev().sum()
    }

    pub fn reversed(&self) -> Self {
        Self { probs: self.probs.iter().rev().copied().collect() }
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(r, p)| r as f64 * p).sum()
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        sup_distance(&self.probs, &other.probs)
    }
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn pcm_symmetric_point() {
        let m = OrdinalModel::logistic(Family::AdjacentPcm, &[0.0, 0.0]).unwrap();
        close(m.category_probs(0.0).unwrap().probs(), &[1.0 / 3.0; 3], 1e-15);
    }

    #[test]
    fn sequential_symmetric_point() {
        let m = OrdinalModel::logistic(Family::Sequential, &[0.0, 0.0]).unwrap();
        close(m.category_probs(0.0).unwrap().probs(), &[0.5, 0.25, 0.25], 1e-15);
        assert!((m.exceedance_prob(0.0, 2).unwrap() - 0.25).abs() < 1e-15);
        assert!((m.local_conditional_prob(0.0, 2).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cumulative_against_direct_cdf_differences() {
        let m = OrdinalModel::logistic(Family::Cumulative, &[-1.0, 1.0]).unwrap();
        let expected = [1.0 - logistic(1.0), logistic(1.0) - logistic(-1.0), logistic(-1.0)];
        close(m.category_probs(0.0).unwrap().probs(), &expected, 1e-15);
        assert_eq!(m.exceedance_prob(0.0, 0).unwrap(), 1.0);
        let single = OrdinalModel::logistic(Family::Cumulative, &[0.0]).unwrap();
        assert_eq!(single.exceedance_prob(0.0, 1).unwrap(), 0.5);
    }

    #[test]
    fn pcm_end_categories_balance() {
        let m = OrdinalModel::logistic(Family::AdjacentPcm, &[0.5, 1.5]).unwrap();
        let p = m.category_probs(1.0).unwrap();
        assert!((p.probs()[0] - p.probs()[2]).abs() < 1e-15);
    }

    #[test]
    fn adjacent_log_odds_examples() {
        let m = OrdinalModel::logistic(Family::AdjacentPcm, &[0.5, 1.5]).unwrap();
        assert_eq!(m.adjacent_log_odds(1.0, 1).unwrap(), 0.5);
        let z = OrdinalModel::logistic(Family::AdjacentPcm, &[0.0, 0.0]).unwrap();
        assert_eq!(z.adjacent_log_odds(0.0, 2).unwrap(), 0.0);
        let one = OrdinalModel::logistic(Family::AdjacentPcm, &[1.0]).unwrap();
        assert_eq!(one.adjacent_log_odds(-2.0, 1).unwrap(), -3.0);
        let p = one.category_probs(-2.0).unwrap();
        assert!(((p.probs()[1] / p.probs()[0]).ln() + 3.0).abs() < 1e-12);
    }

    #[test]
    fn adjacent_log_odds_rejects_other_models() {
        let seq = OrdinalModel::logistic(Family::Sequential, &[0.0]).unwrap();
        assert!(matches!(seq.adjacent_log_odds(0.0, 1), Err(Error::Unsupported(_))));
        let probit = OrdinalModel::new(
            Family::AdjacentPcm,
            ResponseFunction::Normal,
            ItemThresholds::new("i", vec![0.0]).unwrap(),
        )
        .unwrap();
        assert!(matches!(probit.adjacent_log_odds(0.0, 1), Err(Error::Unsupported(_))));
        let pcm = OrdinalModel::logistic(Family::AdjacentPcm, &[0.0]).unwrap();
        assert!(matches!(pcm.adjacent_log_odds(0.0, 0), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn local_conditional_examples() {
        let m = OrdinalModel::logistic(Family::AdjacentPcm, &[-0.2, 0.5]).unwrap();
        let p = m.category_probs(0.3).unwrap();
        let v = m.local_conditional_prob(0.3, 1).unwrap();
        assert!((v - logistic(0.5)).abs() < 1e-12);
        assert!((v - p.probs()[1] / (p.probs()[0] + p.probs()[1])).abs() < 1e-12);
        for r in 1..=2 {
            let d = m.deltas()[r - 1];
            assert!((m.local_conditional_prob(d, r).unwrap() - 0.5).abs() < 1e-12);
        }
        let cum = OrdinalModel::logistic(Family::Cumulative, &[0.0]).unwrap();
        assert!(matches!(cum.local_conditional_prob(0.0, 1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn reversal_examples() {
        let m = OrdinalModel::logistic(Family::AdjacentPcm, &[-0.5, 2.0]).unwrap();
        let (rev, t) = m.reverse_pcm(1.0).unwrap();
        assert_eq!(t, -1.0);
        assert_eq!(rev.deltas(), &[-2.0, 0.5]);
        let z = OrdinalModel::logistic(Family::AdjacentPcm, &[0.0, 0.0]).unwrap();
        let (zr, zt) = z.reverse_pcm(0.0).unwrap();
        assert_eq!(zr.deltas(), &[0.0, 0.0]);
        assert_eq!(zt, 0.0);
        let p = z.category_probs(0.0).unwrap();
        assert_eq!(p, p.reversed());
        let seq = OrdinalModel::logistic(Family::Sequential, &[0.0]).unwrap();
        assert!(seq.reverse_pcm(0.0).is_err());
    }

    #[test]
    fn cumulative_construction_rejects_disorder() {
        let err = OrdinalModel::logistic(Family::Cumulative, &[1.0, -1.0]).unwrap_err();
        assert!(matches!(err, Error::OrderingViolation { first: 1, second: 2, .. }));
        assert!(err.to_string().contains("threshold order violated"));
        assert!(OrdinalModel::logistic(Family::Sequential, &[1.0, -1.0]).is_ok());
        assert!(OrdinalModel::logistic(Family::AdjacentPcm, &[1.0, -1.0]).is_ok());
    }

    #[test]
    fn bad_inputs() {
        let m = OrdinalModel::logistic(Family::AdjacentPcm, &[0.0]).unwrap();
        assert!(m.category_probs(f64::NAN).is_err());
        assert!(matches!(m.exceedance_prob(0.0, 2), Err(Error::IndexOutOfRange { .. })));
        assert!(m.icc_curve(0, &[]).is_err());
        assert!(m.icc_curve(0, &[1.0, 0.0]).is_err());
        assert!(OrdinalModel::logistic(Family::AdjacentPcm, &[]).is_err());
        assert!(OrdinalModel::logistic(Family::AdjacentPcm, &[f64::INFINITY]).is_err());
    }

    #[test]
    fn icc_single_point() {
        let m = OrdinalModel::logistic(Family::AdjacentPcm, &[0.0, 0.0]).unwrap();
        let c = m.icc_curve(1, &[0.0]).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0].1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn modes_are_ordered_for_pcm() {
        let m = OrdinalModel::logistic(Family::AdjacentPcm, &[-1.0, 1.0]).unwrap();
        let grid = theta_grid(-5.0, 5.0, 0.01).unwrap();
        let modes = m.curve_modes(&grid).unwrap();
        assert!(modes.windows(2).all(|w| w[0] <= w[1]), "{modes:?}");
    }

    #[test]
    fn cumulative_exceedance_curve_is_monotone() {
        let m = OrdinalModel::logistic(Family::Cumulative, &[-1.0, 0.5, 2.0]).unwrap();
        let grid = theta_grid(-6.0, 6.0, 0.05).unwrap();
        for r in 1..=3 {
            let c = m.exceedance_curve(r, &grid).unwrap();
            assert!(c.windows(2).all(|w| w[1].1 >= w[0].1));
        }
    }

    #[test]
    fn extreme_arguments_stay_normalized() {
        for fam in Family::ALL {
            let m = OrdinalModel::logistic(fam, &[-1.0, 0.0, 1.0]).unwrap();
            for theta in [-900.0, -40.0, 40.0, 900.0] {
                let p = m.category_probs(theta).unwrap();
                let s: f64 = p.probs().iter().sum();
                assert!((s - 1.0).abs() < 1e-12, "{fam} {theta} {p:?}");
            }
        }
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(theta_grid(0.0, 0.0, 1.0).unwrap(), vec![0.0]);
        assert_eq!(theta_grid(-8.0, 8.0, 0.01).unwrap().len(), 1601);
        assert!(theta_grid(1.0, 0.0, 0.1).is_err());
        assert!(theta_grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(OrdinalDistribution::new(vec![0.5, 0.4]).is_err());
        assert!(OrdinalDistribution::new(vec![1.0]).is_err());
        assert!(OrdinalDistribution::new(vec![-0.1, 1.1]).is_err());
        let d = OrdinalDistribution::new(vec![0.3, 0.5, 0.2]).unwrap();
        assert!((d.tail(1) - 0.7).abs() < 1e-15);
        assert!((d.mean() - 0.9).abs() < 1e-15);
    }
}
