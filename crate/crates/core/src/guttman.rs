//! The Guttman space experiment.
//!
//! Draw `k` independent Bernoulli variables with success probabilities
//! `pi_1..pi_k` and discard every outcome that is not of the form
//! `(1,..,1,0,..,0)`. What survives is a distribution on `k + 1` Guttman
//! vectors, i.e. on scores `0..=k`, with cell masses
//!
//! ```text
//! P(score = r) = pi_1 ... pi_r (1 - pi_{r+1}) ... (1 - pi_k) / s
//! ```
//!
//! where `s` is the total independent-model mass on the Guttman cells. With
//! `pi_r = F(theta - delta_r)` and logistic `F` the score follows the partial
//! credit model, and every step is locally a Rasch model:
//! `P(Y^(r) = 1 | Y^(r-1) = 1, Y^(r+1) = 0) = pi_r`.
//!
//! The `2^k` joint is never built here; [`crate::oracle`] does that for checks.

use serde::{Deserialize, Serialize};

use crate::binary::DEGENERATE_EVENT;
use crate::error::{Error, Result};
use crate::model::OrdinalDistribution;
use crate::response::{log_sum_exp, ResponseFunction};

/// Success probabilities of the independent Bernoullis, each in (0,1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMarginals {
    pis: Vec<f64>,
    #[serde(skip)]
    log_p: Vec<f64>,
    #[serde(skip)]
    log_q: Vec<f64>,
}

impl BinaryMarginals {
    pub fn new(pis: Vec<f64>) -> Result<Self> {
        if pis.is_empty() {
            return Err(Error::invalid("need at least one marginal"));
        }
        if let Some(p) = pis.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::invalid(format!("marginal {p} outside the open interval (0,1)")));
        }
        let log_p = pis.iter().map(|p| p.ln()).collect();
        let log_q = pis.iter().map(|p| (-p).ln_1p()).collect();
        Ok(Self { pis, log_p, log_q })
    }

    /// `pi_r = F(theta - delta_r)`, keeping full log-space precision in the tails.
    pub fn from_model(response: &ResponseFunction, theta: f64, deltas: &[f64]) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::invalid("need at least one threshold"));
        }
        if !theta.is_finite() || deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::invalid("non-finite ability or threshold"));
        }
        let eta: Vec<f64> = deltas.iter().map(|d| theta - d).collect();
        Ok(Self {
            pis: eta.iter().map(|&e| response.eval(e)).collect(),
            log_p: eta.iter().map(|&e| response.log_eval(e)).collect(),
            log_q: eta.iter().map(|&e| response.log_survival(e)).collect(),
        })
    }

    pub fn pis(&self) -> &[f64] {
        &self.pis
    }

    pub fn k(&self) -> usize {
        self.pis.len()
    }

    /// Unnormalized log mass of the Guttman cell with `r` leading ones.
    fn log_cells(&self) -> Vec<f64> {
        let k = self.k();
        // suffix[r] = sum_{j >= r} ln(1 - pi_j)
        let mut suffix = vec![0.0; k + 1];
        for j in (0..k).rev() {
            suffix[j] = suffix[j + 1] + self.log_q[j];
        }
        let mut prefix = 0.0;
        (0..=k)
            .map(|r| {
                if r > 0 {
                    prefix += self.log_p[r - 1];
                }
                prefix + suffix[r]
            })
            .collect()
    }
}

/// The independent joint restricted to the Guttman space and renormalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionedJoint {
    guttman_probs: Vec<f64>,
    #[serde(skip)]
    log_probs: Vec<f64>,
    log_normalizer: f64,
}

impl ConditionedJoint {
    /// Probability of the Guttman vector with `r` leading ones, `r = 0..=k`.
    pub fn guttman_probs(&self) -> &[f64] {
        &self.guttman_probs
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    /// `s`: mass the independent model puts on the Guttman space.
    pub fn normalizer(&self) -> f64 {
        self.log_normalizer.exp()
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn k(&self) -> usize {
        self.guttman_probs.len() - 1
    }

    pub fn to_distribution(&self) -> OrdinalDistribution {
        OrdinalDistribution::new(self.guttman_probs.clone())
            .expect("conditioned cells are normalized by construction")
    }
}

pub fn condition_on_guttman(m: &BinaryMarginals) -> ConditionedJoint {
    let cells = m.log_cells();
    let log_normalizer = log_sum_exp(&cells);
    let log_probs: Vec<f64> = cells.iter().map(|c| c - log_normalizer).collect();
    ConditionedJoint {
        guttman_probs: log_probs.iter().map(|l| l.exp()).collect(),
        log_probs,
        log_normalizer,
    }
}

/// Score distribution of the Guttman space experiment.
pub fn pcm_from_marginals(m: &BinaryMarginals) -> OrdinalDistribution {
    condition_on_guttman(m).to_distribution()
}

/// `P(Y^(r) = 1 | Y^(r-1) = 1, Y^(r+1) = 0)` in the conditioned joint. At the
/// boundaries only one neighbour exists: `r = 1` conditions on `Y^(2) = 0`,
/// `r = k` on `Y^(k-1) = 1`. Either way the event is `score in {r-1, r}`.
pub fn conditioned_local_rasch(j: &ConditionedJoint, m: &BinaryMarginals, r: usize) -> Result<f64> {
    if j.k() != m.k() {
        return Err(Error::invalid(format!("joint has k={}, marginals k={}", j.k(), m.k())));
    }
    if r == 0 || r > j.k() {
        return Err(Error::IndexOutOfRange { index: r, max: j.k() });
    }
    let event = log_sum_exp(&[j.log_probs[r - 1], j.log_probs[r]]);
    if event < DEGENERATE_EVENT.ln() {
        return Err(Error::DegenerateCondition(event.exp()));
    }
    Ok((j.log_probs[r] - event).exp())
}

/// Odds `P(Y^(r)=1) / P(Y^(r)=0)` of a Guttman variable after conditioning.
///
/// For `k = 2` these are the closed forms
/// `odds(Y^(1)) = pi_1/(1-pi_1) * 1/(1-pi_2)` and `odds(Y^(2)) = pi_1 * pi_2/(1-pi_2)`,
/// i.e. Rasch odds distorted by the other variable. For larger `k` the
/// Guttman cells are summed.
pub fn conditioned_marginal_odds(m: &BinaryMarginals, r: usize) -> Result<f64> {
    let k = m.k();
    if r == 0 || r > k {
        return Err(Error::IndexOutOfRange { index: r, max: k });
    }
    if k == 2 {
        let (p1, p2) = (m.pis[0], m.pis[1]);
        return Ok(if r == 1 {
            p1 / (1.0 - p1) / (1.0 - p2)
        } else {
            p1 * p2 / (1.0 - p2)
        });
    }
    let j = condition_on_guttman(m);
    Ok((log_sum_exp(&j.log_probs[r..]) - log_sum_exp(&j.log_probs[..r])).exp())
}

/// The two conditionals of the three-category case:
/// `(P(Y^(2)=1 | Y^(1)=1), P(Y^(1)=1 | Y^(2)=0))`, which recover `(pi_2, pi_1)`.
pub fn prop_try_conditionals(m: &BinaryMarginals) -> Result<(f64, f64)> {
    if m.k() != 2 {
        return Err(Error::invalid(format!("three-category conditionals need k = 2, got {}", m.k())));
    }
    let j = condition_on_guttman(m);
    let [p00, p10, p11] = [j.guttman_probs[0], j.guttman_probs[1], j.guttman_probs[2]];
    Ok((p11 / (p11 + p10), p10 / (p10 + p00)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn m(p: &[f64]) -> BinaryMarginals {
        BinaryMarginals::new(p.to_vec()).unwrap()
    }

    #[test]
    fn symmetric_two_step() {
        let j = condition_on_guttman(&m(&[0.5, 0.5]));
        for p in j.guttman_probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((j.normalizer() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn single_step_rejects_nothing() {
        let j = condition_on_guttman(&m(&[0.3]));
        assert!((j.guttman_probs()[0] - 0.7).abs() < 1e-15);
        assert!((j.guttman_probs()[1] - 0.3).abs() < 1e-15);
        assert!((j.normalizer() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_enumeration() {
        let marg = m(&[0.7, 0.4, 0.2]);
        let j = condition_on_guttman(&marg);
        let (probs, s) = oracle::enumerate_conditioned(marg.pis()).unwrap();
        for (a, b) in j.guttman_probs().iter().zip(&probs) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((j.normalizer() - s).abs() < 1e-15);
    }

    #[test]
    fn local_rasch_examples() {
        let half = m(&[0.5, 0.5]);
        let j = condition_on_guttman(&half);
        assert!((conditioned_local_rasch(&j, &half, 1).unwrap() - 0.5).abs() < 1e-15);

        let marg = m(&[0.7, 0.4, 0.2]);
        let j = condition_on_guttman(&marg);
        assert!((conditioned_local_rasch(&j, &marg, 2).unwrap() - 0.4).abs() < 1e-12);
        let brute = oracle::enumerated_local_conditional(marg.pis(), 2).unwrap();
        assert!((brute - 0.4).abs() < 1e-12);
        // boundary r = k conditions on the previous variable only
        let top = oracle::enumerated_local_conditional(marg.pis(), 3).unwrap();
        assert!((conditioned_local_rasch(&j, &marg, 3).unwrap() - top).abs() < 1e-12);
        assert!(conditioned_local_rasch(&j, &marg, 4).is_err());
        assert!(conditioned_local_rasch(&j, &half, 1).is_err());
    }

    #[test]
    fn marginal_odds_examples() {
        let half = m(&[0.5, 0.5]);
        assert!((conditioned_marginal_odds(&half, 1).unwrap() - 2.0).abs() < 1e-15);
        assert!((conditioned_marginal_odds(&half, 2).unwrap() - 0.5).abs() < 1e-15);
        let marg = m(&[0.7, 0.4]);
        for r in 1..=2 {
            let brute = oracle::enumerated_marginal_odds(marg.pis(), r).unwrap();
            assert!((conditioned_marginal_odds(&marg, r).unwrap() - brute).abs() < 1e-12);
        }
        let wide = m(&[0.7, 0.4, 0.9, 0.2]);
        for r in 1..=4 {
            let brute = oracle::enumerated_marginal_odds(wide.pis(), r).unwrap();
            let v = conditioned_marginal_odds(&wide, r).unwrap();
            assert!((v - brute).abs() / brute < 1e-12);
        }
    }

    #[test]
    fn three_category_conditionals() {
        let (a, b) = prop_try_conditionals(&m(&[0.5, 0.5])).unwrap();
        assert!((a - 0.5).abs() < 1e-15 && (b - 0.5).abs() < 1e-15);
        let (a, b) = prop_try_conditionals(&m(&[0.9, 0.1])).unwrap();
        assert!((a - 0.1).abs() < 1e-12 && (b - 0.9).abs() < 1e-12);
        assert!(prop_try_conditionals(&m(&[0.5])).is_err());
    }

    #[test]
    fn conditioned_variables_are_dependent_and_not_rasch() {
        // pinned: pi = (0.7, 0.4)
        let marg = m(&[0.7, 0.4]);
        let j = condition_on_guttman(&marg);
        let p11 = j.guttman_probs()[2];
        let first = j.guttman_probs()[1] + p11;
        let second = p11;
        assert!((p11 - first * second).abs() > 0.01);
        assert!((first - 0.7).abs() > 0.01);
    }

    #[test]
    fn marginals_validation() {
        assert!(BinaryMarginals::new(vec![]).is_err());
        assert!(BinaryMarginals::new(vec![0.0, 0.5]).is_err());
        assert!(BinaryMarginals::new(vec![0.5, 1.0]).is_err());
        assert!(BinaryMarginals::from_model(&ResponseFunction::Logistic, f64::NAN, &[0.0]).is_err());
    }

    #[test]
    fn extreme_marginals_stay_finite() {
        let marg = BinaryMarginals::from_model(&ResponseFunction::Logistic, 0.0, &[-60.0, 60.0, -60.0]).unwrap();
        let j = condition_on_guttman(&marg);
        assert!(j.log_normalizer().is_finite());
        let total: f64 = j.guttman_probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
