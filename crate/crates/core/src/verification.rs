//! Randomized numerical checks of the construction results.
//!
//! Every proposition is run over random instances `theta ~ U[-a, a]`,
//! `delta_r ~ U[-a, a]` iid (unordered except for the cumulative family) and
//! compared against an independent route: the `2^k` enumeration and plain
//! formulas in [`crate::oracle`], or a second library path. The report keeps
//! the largest absolute deviation and the instance that produced it.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binary::{dichotomize, dichotomize_log_odds, DichotomizationKind};
use crate::construction::{build, build_cumulative, build_pcm, build_sequential, BinaryBlockSpec, BlockKind};
use crate::error::{Error, Result};
use crate::guttman::{
    condition_on_guttman, conditioned_local_rasch, conditioned_marginal_odds, pcm_from_marginals,
    prop_try_conditionals, BinaryMarginals,
};
use crate::model::{sup_distance, theta_grid, Family, OrdinalModel};
use crate::oracle;
use crate::response::ResponseFunction;
use crate::simulation::markov_trajectory;

/// Tolerance for identities between closed forms.
pub const CLOSED_FORM_TOL: f64 = 1e-12;
/// Tolerance for identities that pass through `F^{-1}`.
pub const INVERSE_TOL: f64 = 1e-10;
/// Smallest deviation that counts as a counterexample.
pub const COUNTEREXAMPLE_MIN: f64 = 0.01;
/// Largest `k` a verification run accepts.
pub const MAX_VERIFY_K: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropositionId {
    CumulativeConstruction,
    SequentialConstruction,
    #[serde(rename = "bergut")]
    BerGut,
    TryConditionals,
    GenConditionals,
    #[serde(rename = "genobsgut")]
    GenObsGut,
    #[serde(rename = "gen3")]
    Gen3,
    AndrichProduct,
    PcmReversal,
    SequentialNonReversal,
    ModeOrdering,
    DichotomizeRoundtrip,
}

impl PropositionId {
    pub const ALL: [PropositionId; 12] = [
        PropositionId::CumulativeConstruction,
        PropositionId::SequentialConstruction,
        PropositionId::BerGut,
        PropositionId::TryConditionals,
        PropositionId::GenConditionals,
        PropositionId::GenObsGut,
        PropositionId::Gen3,
        PropositionId::AndrichProduct,
        PropositionId::PcmReversal,
        PropositionId::SequentialNonReversal,
        PropositionId::ModeOrdering,
        PropositionId::DichotomizeRoundtrip,
    ];

    pub fn id(self) -> &'static str {
        match self {
            PropositionId::CumulativeConstruction => "cumulative-construction",
            PropositionId::SequentialConstruction => "sequential-construction",
            PropositionId::BerGut => "bergut",
            PropositionId::TryConditionals => "try-conditionals",
            PropositionId::GenConditionals => "gen-conditionals",
            PropositionId::GenObsGut => "genobsgut",
            PropositionId::Gen3 => "gen3",
            PropositionId::AndrichProduct => "andrich-product",
            PropositionId::PcmReversal => "pcm-reversal",
            PropositionId::SequentialNonReversal => "sequential-non-reversal",
            PropositionId::ModeOrdering => "mode-ordering",
            PropositionId::DichotomizeRoundtrip => "dichotomize-roundtrip",
        }
    }

    /// Counterexample searches pass when a large deviation is found.
    pub fn is_counterexample(self) -> bool {
        self == PropositionId::SequentialNonReversal
    }

    pub fn tolerance(self) -> f64 {
        match self {
            PropositionId::DichotomizeRoundtrip => INVERSE_TOL,
            PropositionId::SequentialNonReversal => COUNTEREXAMPLE_MIN,
            _ => CLOSED_FORM_TOL,
        }
    }
}

impl fmt::Display for PropositionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for PropositionId {
    type Err = Error;

    /// Accepts the kebab-case id, ignoring case, dashes and underscores.
    fn from_str(s: &str) -> Result<Self> {
        let norm = |x: &str| x.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        let want = norm(s);
        PropositionId::ALL
            .into_iter()
            .find(|p| norm(p.id()) == want)
            .ok_or_else(|| Error::invalid(format!("unknown proposition '{s}'")))
    }
}

/// The parameters of one random trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub family: Family,
    pub theta: f64,
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub proposition: PropositionId,
    pub trials: usize,
    pub max_abs_deviation: f64,
    pub tolerance: f64,
    pub worst_instance: Instance,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub trials: usize,
    pub seed: u64,
    pub k_min: usize,
    pub k_max: usize,
    /// Half-width `a` of the uniform ability and threshold distribution.
    pub param_range: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { trials: 1000, seed: 42, k_min: 2, k_max: 8, param_range: 3.0 }
    }
}

impl VerifyConfig {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.k_min == 0 || self.k_min > self.k_max || self.k_max > MAX_VERIFY_K {
            return Err(Error::invalid(format!(
                "k range {}..={} must lie within 1..={MAX_VERIFY_K}",
                self.k_min, self.k_max
            )));
        }
        if !(self.param_range.is_finite() && self.param_range > 0.0) {
            return Err(Error::invalid(format!("parameter range {} must be positive", self.param_range)));
        }
        Ok(())
    }
}

/// splitmix64, to give each trial its own stream.
fn trial_seed(seed: u64, trial: usize) -> u64 {
    let mut z = seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn family_for(prop: PropositionId, rng: &mut ChaCha8Rng) -> Family {
    match prop {
        PropositionId::CumulativeConstruction => Family::Cumulative,
        PropositionId::SequentialConstruction | PropositionId::SequentialNonReversal => Family::Sequential,
        PropositionId::DichotomizeRoundtrip => Family::ALL[rng.random_range(0..3)],
        _ => Family::AdjacentPcm,
    }
}

fn draw_instance(prop: PropositionId, cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Instance {
    let family = family_for(prop, rng);
    let k = if prop == PropositionId::TryConditionals { 2 } else { rng.random_range(cfg.k_min..=cfg.k_max) };
    let a = cfg.param_range;
    let theta = rng.random_range(-a..=a);
    let mut deltas: Vec<f64> = (0..k).map(|_| rng.random_range(-a..=a)).collect();
    if family == Family::Cumulative {
        deltas.sort_by(f64::total_cmp);
    }
    Instance { family, theta, deltas }
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    sup_distance(a, b)
}

/// Marginals rounded to `f64` and rebuilt from those values, so that the
/// enumeration oracle and the log-space path see identical inputs.
fn rounded_marginals(inst: &Instance) -> Result<BinaryMarginals> {
    let f = ResponseFunction::Logistic;
    BinaryMarginals::new(inst.deltas.iter().map(|d| f.eval(inst.theta - d)).collect())
}

fn check(prop: PropositionId, inst: &Instance, rng: &mut ChaCha8Rng) -> Result<f64> {
    let f = ResponseFunction::Logistic;
    let (theta, deltas) = (inst.theta, inst.deltas.as_slice());
    let k = deltas.len();
    let model = OrdinalModel::logistic(inst.family, deltas)?;
    let exact = model.category_probs(theta)?;
    let pis: Vec<f64> = deltas.iter().map(|d| f.eval(theta - d)).collect();
    let dev = match prop {
        PropositionId::CumulativeConstruction => {
            let spec = BinaryBlockSpec::new(BlockKind::MarginalRasch, pis.clone())?;
            let built = build_cumulative(&spec)?;
            let mut dev = max_abs(built.probs(), exact.probs())
                .max(max_abs(exact.probs(), &oracle::cumulative_direct(theta, deltas)));
            // Any strictly increasing neighbour pair must be refused.
            let mut shuffled = pis;
            shuffled.reverse();
            let increasing = shuffled.windows(2).any(|w| w[0] < w[1]);
            let spec = BinaryBlockSpec::new(BlockKind::MarginalRasch, shuffled)?;
            if build_cumulative(&spec).is_ok() == increasing {
                dev = f64::INFINITY;
            }
            dev
        }
        PropositionId::SequentialConstruction => {
            let spec = BinaryBlockSpec::from_thresholds(BlockKind::ConditionalTransition, &f, theta, deltas)?;
            let built = build_sequential(&spec)?;
            let mut dev = max_abs(built.probs(), exact.probs())
                .max(max_abs(exact.probs(), &oracle::markov_path_probs(&pis)?))
                .max(max_abs(exact.probs(), &oracle::sequential_direct(theta, deltas)));
            for _ in 0..8 {
                let path = markov_trajectory(&f, theta, deltas, rng);
                if path.windows(2).any(|w| w[0] == 0 && w[1] == 1) {
                    dev = f64::INFINITY;
                }
            }
            dev
        }
        PropositionId::BerGut => {
            let m = BinaryMarginals::from_model(&f, theta, deltas)?;
            let guttman = pcm_from_marginals(&m);
            let rounded = rounded_marginals(inst)?;
            let (enumerated, s) = oracle::enumerate_conditioned(rounded.pis())?;
            let j = condition_on_guttman(&rounded);
            max_abs(guttman.probs(), &oracle::pcm_direct(theta, deltas))
                .max(max_abs(guttman.probs(), exact.probs()))
                .max(max_abs(j.guttman_probs(), &enumerated))
                .max(((j.normalizer() - s) / s).abs())
        }
        PropositionId::TryConditionals => {
            let m = rounded_marginals(inst)?;
            let (up, down) = prop_try_conditionals(&m)?;
            let p = m.pis();
            let e_up = oracle::enumerated_conditional(p, |b| b[0] == 1, |b| b[1] == 1)?;
            let e_down = oracle::enumerated_conditional(p, |b| b[1] == 0, |b| b[0] == 1)?;
            let mut dev = (up - p[1]).abs().max((down - p[0]).abs());
            dev = dev.max((up - e_up).abs()).max((down - e_down).abs());
            // The conditioned marginals are not Rasch: compare the closed-form
            // odds with enumeration on the log scale.
            for r in 1..=2 {
                let closed = conditioned_marginal_odds(&m, r)?;
                let enumerated = oracle::enumerated_marginal_odds(p, r)?;
                dev = dev.max((closed.ln() - enumerated.ln()).abs());
            }
            dev
        }
        PropositionId::GenConditionals => {
            let m = rounded_marginals(inst)?;
            let j = condition_on_guttman(&m);
            let mut dev: f64 = 0.0;
            for r in 1..=k {
                let local = conditioned_local_rasch(&j, &m, r)?;
                dev = dev
                    .max((local - m.pis()[r - 1]).abs())
                    .max((local - oracle::enumerated_local_conditional(m.pis(), r)?).abs());
            }
            dev
        }
        PropositionId::GenObsGut => {
            let p = exact.probs();
            let direct = oracle::pcm_direct(theta, deltas);
            let mut dev: f64 = 0.0;
            for r in 1..=k {
                let ratio = direct[r] / (direct[r - 1] + direct[r]);
                let split = dichotomize(&exact, DichotomizationKind::AdjacentConditional, r)?;
                let guttman = oracle::conditional_from_scores(p, oracle::neighbours_event(r, k), |b| b[r - 1] == 1)?;
                dev = dev
                    .max((ratio - pis[r - 1]).abs())
                    .max((split - pis[r - 1]).abs())
                    .max((guttman - pis[r - 1]).abs());
            }
            dev
        }
        PropositionId::Gen3 => {
            let spec = BinaryBlockSpec::from_thresholds(BlockKind::LocalAdjacent, &f, theta, deltas)?;
            let built = build_pcm(&spec)?;
            max_abs(built.probs(), &oracle::pcm_direct(theta, deltas)).max(max_abs(built.probs(), exact.probs()))
        }
        PropositionId::AndrichProduct => {
            let qs: Vec<f64> = deltas.iter().map(|d| f.eval(d - theta)).collect();
            max_abs(exact.probs(), &oracle::guttman_products(&pis, &qs))
        }
        PropositionId::PcmReversal => {
            let (rev, rev_theta) = model.reverse_pcm(theta)?;
            max_abs(exact.reversed().probs(), rev.category_probs(rev_theta)?.probs())
        }
        PropositionId::SequentialNonReversal => {
            let (rev, rev_theta) = model.mirror(theta)?;
            max_abs(exact.reversed().probs(), rev.category_probs(rev_theta)?.probs())
        }
        PropositionId::ModeOrdering => {
            let grid = theta_grid(-8.0, 8.0, 0.01)?;
            let modes = model.curve_modes(&grid)?;
            modes.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max)
        }
        PropositionId::DichotomizeRoundtrip => {
            let logp = model.log_category_probs(theta)?;
            let split = DichotomizationKind::matching(inst.family);
            let log_odds = (1..=k)
                .map(|r| dichotomize_log_odds(&logp, split, r))
                .collect::<Result<Vec<_>>>()?;
            let implied: Vec<f64> = log_odds.iter().map(|lo| theta - lo).collect();
            let spec = BinaryBlockSpec::from_log_odds(BlockKind::for_family(inst.family), &log_odds)?;
            max_abs(build(&spec)?.probs(), exact.probs()).max(max_abs(&implied, deltas))
        }
    };
    Ok(if dev.is_nan() { f64::INFINITY } else { dev })
}

pub fn verify(prop: PropositionId, config: &VerifyConfig) -> Result<VerificationReport> {
    config.validate()?;
    let mut results: Vec<(f64, Instance)> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(config.seed, t));
            let inst = draw_instance(prop, config, &mut rng);
            // A failed computation is a failed trial, not an aborted run.
            let dev = check(prop, &inst, &mut rng).unwrap_or(f64::INFINITY);
            (dev, inst)
        })
        .collect();
    let mut worst = 0;
    for (i, (dev, _)) in results.iter().enumerate() {
        if *dev > results[worst].0 {
            worst = i;
        }
    }
    let max_abs_deviation = results[worst].0;
    let tolerance = prop.tolerance();
    let passed = if prop.is_counterexample() {
        max_abs_deviation > tolerance
    } else {
        max_abs_deviation < tolerance
    };
    Ok(VerificationReport {
        proposition: prop,
        trials: config.trials,
        max_abs_deviation,
        tolerance,
        worst_instance: results.swap_remove(worst).1,
        passed,
    })
}

pub fn verify_all(config: &VerifyConfig) -> Result<Vec<VerificationReport>> {
    PropositionId::ALL.iter().map(|&p| verify(p, config)).collect()
}
