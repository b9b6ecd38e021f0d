//! Binary views of an ordinal response: the three dichotomizations and the
//! Guttman coding `Y = r  <=>  (1,..,1,0,..,0)` with `r` leading ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Family, OrdinalDistribution};
use crate::response::log_sum_exp;

/// Conditioning events below this probability are treated as empty.
pub const DEGENERATE_EVENT: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DichotomizationKind {
    /// `P(Y >= r)`: split into groups `{0..r-1}` and `{r..k}`.
    CumulativeSplit,
    /// `P(Y >= r | Y >= r-1)`.
    SequentialConditional,
    /// `P(Y = r | Y in {r-1, r})`.
    AdjacentConditional,
}

impl DichotomizationKind {
    /// The split under which `family` reduces to `F(theta - delta_r)`.
    pub fn matching(family: Family) -> Self {
        match family {
            Family::Cumulative => DichotomizationKind::CumulativeSplit,
            Family::Sequential => DichotomizationKind::SequentialConditional,
            Family::AdjacentPcm => DichotomizationKind::AdjacentConditional,
        }
    }
}

fn check_step(r: usize, k: usize) -> Result<()> {
    if r == 0 || r > k {
        return Err(Error::IndexOutOfRange { index: r, max: k });
    }
    Ok(())
}

/// Success probability of the binary variable obtained by splitting at `r`.
pub fn dichotomize(dist: &OrdinalDistribution, kind: DichotomizationKind, r: usize) -> Result<f64> {
    let p = dist.probs();
    check_step(r, dist.k())?;
    let (success, event) = match kind {
        DichotomizationKind::CumulativeSplit => return Ok(dist.tail(r)),
        DichotomizationKind::SequentialConditional => (dist.tail(r), dist.tail(r - 1)),
        DichotomizationKind::AdjacentConditional => (p[r], p[r - 1] + p[r]),
    };
    if event < DEGENERATE_EVENT {
        return Err(Error::DegenerateCondition(event));
    }
    Ok(success / event)
}

/// Log-odds of the same binary variable, computed from log category
/// probabilities so that saturated tails keep their precision.
pub fn dichotomize_log_odds(log_probs: &[f64], kind: DichotomizationKind, r: usize) -> Result<f64> {
    if log_probs.len() < 2 {
        return Err(Error::invalid("need at least two categories"));
    }
    check_step(r, log_probs.len() - 1)?;
    let (success, failure) = match kind {
        DichotomizationKind::CumulativeSplit => {
            (log_sum_exp(&log_probs[r..]), log_sum_exp(&log_probs[..r]))
        }
        DichotomizationKind::SequentialConditional => (log_sum_exp(&log_probs[r..]), log_probs[r - 1]),
        DichotomizationKind::AdjacentConditional => (log_probs[r], log_probs[r - 1]),
    };
    let event = log_sum_exp(&[success, failure]);
    if event < DEGENERATE_EVENT.ln() {
        return Err(Error::DegenerateCondition(event.exp()));
    }
    Ok(success - failure)
}

/// A binary vector of the form `(1,..,1,0,..,0)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct GuttmanVector {
    bits: Vec<u8>,
}

impl GuttmanVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if !is_guttman(&bits)? {
            return Err(Error::InvariantViolation(format!("{bits:?} is not of the form (1,..,1,0,..,0)")));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn score(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn k(&self) -> usize {
        self.bits.len()
    }
}

impl TryFrom<Vec<u8>> for GuttmanVector {
    type Error = Error;

    fn try_from(bits: Vec<u8>) -> Result<Self> {
        Self::new(bits)
    }
}

impl From<GuttmanVector> for Vec<u8> {
    fn from(v: GuttmanVector) -> Self {
        v.bits
    }
}

pub fn score_to_guttman(r: usize, k: usize) -> Result<GuttmanVector> {
    if r > k {
        return Err(Error::IndexOutOfRange { index: r, max: k });
    }
    let bits = (0..k).map(|j| u8::from(j < r)).collect();
    Ok(GuttmanVector { bits })
}

pub fn guttman_to_score(bits: &[u8]) -> Result<usize> {
    Ok(GuttmanVector::new(bits.to_vec())?.score())
}

/// The acceptance predicate of the Guttman space experiment: true iff the
/// vector never goes from 0 back to 1.
pub fn is_guttman(bits: &[u8]) -> Result<bool> {
    if let Some(b) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::invalid(format!("non-binary entry {b}")));
    }
    Ok(bits.windows(2).all(|w| w[0] >= w[1]))
}
