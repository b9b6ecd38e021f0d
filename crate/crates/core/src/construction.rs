//! Building ordinal distributions out of binary building blocks.
//!
//! * Marginal Rasch blocks `pi_r = P(Y^(r) = 1)` on Guttman vectors give the
//!   cumulative model, provided `pi_1 >= pi_2 >= ... >= pi_k`.
//! * Conditional transitions `c_r = P(Y^(r) = 1 | Y^(r-1) = 1)` give the
//!   sequential model, with no ordering requirement.
//! * Local adjacent conditionals `m_r = P(Y^(r) = 1 | Y^(r-1) = 1, Y^(r+1) = 0)`
//!   give the partial credit model, again with no ordering requirement.

use serde::{Deserialize, Serialize};

use crate::binary::{dichotomize, DichotomizationKind};
use crate::error::{Error, Result};
use crate::model::{Family, OrdinalDistribution};
use crate::response::ResponseFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockKind {
    MarginalRasch,
    ConditionalTransition,
    LocalAdjacent,
}

impl BlockKind {
    pub fn for_family(family: Family) -> Self {
        match family {
            Family::Cumulative => BlockKind::MarginalRasch,
            Family::Sequential => BlockKind::ConditionalTransition,
            Family::AdjacentPcm => BlockKind::LocalAdjacent,
        }
    }

    pub fn family(self) -> Family {
        match self {
            BlockKind::MarginalRasch => Family::Cumulative,
            BlockKind::ConditionalTransition => Family::Sequential,
            BlockKind::LocalAdjacent => Family::AdjacentPcm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBlocks", into = "RawBlocks")]
pub struct BinaryBlockSpec {
    kind: BlockKind,
    probs: Vec<f64>,
    log_p: Vec<f64>,
    log_q: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawBlocks {
    kind: BlockKind,
    probs: Vec<f64>,
}

impl TryFrom<RawBlocks> for BinaryBlockSpec {
    type Error = Error;

    fn try_from(raw: RawBlocks) -> Result<Self> {
        Self::new(raw.kind, raw.probs)
    }
}

impl From<BinaryBlockSpec> for RawBlocks {
    fn from(spec: BinaryBlockSpec) -> Self {
        RawBlocks { kind: spec.kind, probs: spec.probs }
    }
}

impl BinaryBlockSpec {
    pub fn new(kind: BlockKind, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("need at least one block"));
        }
        if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::invalid(format!("block probability {p} outside (0,1)")));
        }
        let log_p = probs.iter().map(|p| p.ln()).collect();
        let log_q = probs.iter().map(|p| (-p).ln_1p()).collect();
        Ok(Self { kind, probs, log_p, log_q })
    }

    /// The blocks implied by `F(theta - delta_r)`. The logs of `F` and `1 - F`
    /// are kept at full precision even where the probabilities saturate.
    pub fn from_thresholds(kind: BlockKind, response: &ResponseFunction, theta: f64, deltas: &[f64]) -> Result<Self> {
        if !theta.is_finite() || deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::invalid("non-finite ability or threshold"));
        }
        let mut spec = Self::new(kind, deltas.iter().map(|d| response.eval(theta - d)).collect())?;
        spec.log_p = deltas.iter().map(|d| response.log_eval(theta - d)).collect();
        spec.log_q = deltas.iter().map(|d| response.log_survival(theta - d)).collect();
        Ok(spec)
    }

    /// Blocks given by their log-odds `ln(p / (1 - p))`.
    pub fn from_log_odds(kind: BlockKind, log_odds: &[f64]) -> Result<Self> {
        Self::from_thresholds(kind, &ResponseFunction::Logistic, 0.0, &log_odds.iter().map(|x| -x).collect::<Vec<_>>())
    }

    /// Dichotomizes `dist` at every `r` with the split matching `kind`.
    pub fn from_distribution(kind: BlockKind, dist: &OrdinalDistribution) -> Result<Self> {
        let split = DichotomizationKind::matching(kind.family());
        let probs = (1..=dist.k())
            .map(|r| dichotomize(dist, split, r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(kind, probs)
    }

    pub fn kind(&self) -> BlockKind {
        self.kind
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    fn expect(&self, kind: BlockKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::invalid(format!("expected {kind:?} blocks, got {:?}", self.kind)));
        }
        Ok(())
    }
}

/// `P(Y = r) = pi_r - pi_{r+1}` with `pi_0 = 1`, `pi_{k+1} = 0`.
pub fn build_cumulative(spec: &BinaryBlockSpec) -> Result<OrdinalDistribution> {
    spec.expect(BlockKind::MarginalRasch)?;
    let pi = &spec.probs;
    if let Some(i) = pi.windows(2).position(|w| w[0] < w[1]) {
        return Err(Error::OrderingViolation {
            first: i + 1,
            second: i + 2,
            detail: format!(
                "marginals must be nonincreasing, got pi_{} = {} < pi_{} = {}",
                i + 1,
                pi[i],
                i + 2,
                pi[i + 1]
            ),
        });
    }
    let k = pi.len();
    let exceed = |r: usize| match r {
        0 => 1.0,
        r if r > k => 0.0,
        r => pi[r - 1],
    };
    OrdinalDistribution::new((0..=k).map(|r| exceed(r) - exceed(r + 1)).collect())
}

/// `P(Y = r) = (1 - c_{r+1}) prod_{j<=r} c_j`, the last category has no stop term.
pub fn build_sequential(spec: &BinaryBlockSpec) -> Result<OrdinalDistribution> {
    spec.expect(BlockKind::ConditionalTransition)?;
    let k = spec.k();
    let mut log_masses = Vec::with_capacity(k + 1);
    let mut reached = 0.0;
    for r in 0..=k {
        if r > 0 {
            reached += spec.log_p[r - 1];
        }
        let stop = if r < k { spec.log_q[r] } else { 0.0 };
        log_masses.push(reached + stop);
    }
    OrdinalDistribution::from_log_masses(&log_masses)
}

/// `P(Y = r) ∝ prod_{j<=r} m_j / (1 - m_j)`.
pub fn build_pcm(spec: &BinaryBlockSpec) -> Result<OrdinalDistribution> {
    spec.expect(BlockKind::LocalAdjacent)?;
    let mut log_masses = vec![0.0];
    let mut acc = 0.0;
    for (lp, lq) in spec.log_p.iter().zip(&spec.log_q) {
        acc += lp - lq;
        log_masses.push(acc);
    }
    OrdinalDistribution::from_log_masses(&log_masses)
}

pub fn build(spec: &BinaryBlockSpec) -> Result<OrdinalDistribution> {
    match spec.kind {
        BlockKind::MarginalRasch => build_cumulative(spec),
        BlockKind::ConditionalTransition => build_sequential(spec),
        BlockKind::LocalAdjacent => build_pcm(spec),
    }
}

/// `delta_r = theta - F^{-1}(p_r)`: the thresholds the blocks correspond to.
pub fn implied_thresholds(spec: &BinaryBlockSpec, response: &ResponseFunction, theta: f64) -> Result<Vec<f64>> {
    spec.probs.iter().map(|&p| Ok(theta - response.quantile(p)?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OrdinalModel;
    use crate::oracle;

    fn spec(kind: BlockKind, p: &[f64]) -> BinaryBlockSpec {
        BinaryBlockSpec::new(kind, p.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn cumulative_examples() {
        let d = build_cumulative(&spec(BlockKind::MarginalRasch, &[0.7, 0.2])).unwrap();
        close(d.probs(), &[0.3, 0.5, 0.2], 1e-15);
        let err = build_cumulative(&spec(BlockKind::MarginalRasch, &[0.2, 0.7])).unwrap_err();
        assert!(matches!(err, Error::OrderingViolation { first: 1, second: 2, .. }));
    }

    #[test]
    fn cumulative_matches_closed_form() {
        let deltas = [-1.2, 0.1, 0.9];
        let s = BinaryBlockSpec::from_thresholds(BlockKind::MarginalRasch, &ResponseFunction::Logistic, 0.4, &deltas).unwrap();
        let d = build_cumulative(&s).unwrap();
        close(d.probs(), &oracle::cumulative_direct(0.4, &deltas), 1e-15);
    }

    #[test]
    fn sequential_examples() {
        let d = build_sequential(&spec(BlockKind::ConditionalTransition, &[0.5, 0.5])).unwrap();
        close(d.probs(), &[0.5, 0.25, 0.25], 1e-15);
        let d = build_sequential(&spec(BlockKind::ConditionalTransition, &[0.35])).unwrap();
        close(d.probs(), &[0.65, 0.35], 1e-15);
        let c = [0.8, 0.3, 0.9];
        let d = build_sequential(&spec(BlockKind::ConditionalTransition, &c)).unwrap();
        close(d.probs(), &oracle::markov_path_probs(&c).unwrap(), 1e-15);
    }

    #[test]
    fn pcm_examples() {
        let d = build_pcm(&spec(BlockKind::LocalAdjacent, &[0.5, 0.5])).unwrap();
        close(d.probs(), &[1.0 / 3.0; 3], 1e-15);
        let d = build_pcm(&spec(BlockKind::LocalAdjacent, &[2.0 / 3.0, 0.5])).unwrap();
        close(d.probs(), &[0.2, 0.4, 0.4], 1e-15);
        let p = d.probs();
        assert!((p[1] / (p[0] + p[1]) - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[2] / (p[1] + p[2]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pcm_matches_closed_form_with_reversed_thresholds() {
        let deltas = [1.5, -0.5, 0.2];
        let s = BinaryBlockSpec::from_thresholds(BlockKind::LocalAdjacent, &ResponseFunction::Logistic, -0.3, &deltas).unwrap();
        let d = build_pcm(&s).unwrap();
        close(d.probs(), &oracle::pcm_direct(-0.3, &deltas), 1e-14);
        let back = implied_thresholds(&s, &ResponseFunction::Logistic, -0.3).unwrap();
        close(&back, &deltas, 1e-12);
    }

    #[test]
    fn round_trip_through_dichotomization() {
        for fam in Family::ALL {
            let m = OrdinalModel::logistic(fam, &[-0.8, 0.3, 1.1]).unwrap();
            let d = m.category_probs(0.2).unwrap();
            let s = BinaryBlockSpec::from_distribution(BlockKind::for_family(fam), &d).unwrap();
            close(build(&s).unwrap().probs(), d.probs(), 1e-12);
        }
    }

    #[test]
    fn serde_revalidates() {
        let s = spec(BlockKind::LocalAdjacent, &[0.25, 0.5]);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"kind":"LocalAdjacent","probs":[0.25,0.5]}"#);
        assert_eq!(serde_json::from_str::<BinaryBlockSpec>(&json).unwrap(), s);
        assert!(serde_json::from_str::<BinaryBlockSpec>(r#"{"kind":"LocalAdjacent","probs":[1.5]}"#).is_err());
    }

    #[test]
    fn saturated_blocks_keep_their_log_odds() {
        let deltas = [20.4, 29.0, -27.8];
        let s = BinaryBlockSpec::from_thresholds(BlockKind::LocalAdjacent, &ResponseFunction::Logistic, 8.8, &deltas).unwrap();
        close(build_pcm(&s).unwrap().probs(), &oracle::pcm_direct(8.8, &deltas), 1e-14);
    }

    #[test]
    fn kind_mismatch_and_bad_probs() {
        assert!(build_pcm(&spec(BlockKind::MarginalRasch, &[0.5])).is_err());
        assert!(BinaryBlockSpec::new(BlockKind::LocalAdjacent, vec![]).is_err());
        assert!(BinaryBlockSpec::new(BlockKind::LocalAdjacent, vec![1.0]).is_err());
    }
}
