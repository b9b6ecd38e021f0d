//! Samplers for each family's generating story.
//!
//! | method | family | story |
//! |---|---|---|
//! | `LatentVariable` | cumulative | threshold `theta + eps`, `eps ~ F` drawn by inverse CDF |
//! | `MarkovSteps` | sequential | take steps while Bernoulli transitions succeed |
//! | `GuttmanRejection` | PCM | draw `k` independent Bernoullis, reject non-Guttman vectors |
//! | `DirectCategorical` | any | inverse CDF on the category probabilities |
//!
//! Every stream is a `ChaCha8Rng` seeded from a `u64`, so a config always
//! yields the same samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::binary::is_guttman;
use crate::error::{Error, Result};
use crate::model::{Family, OrdinalDistribution, OrdinalModel};

/// Raw Bernoulli vectors the rejection sampler may draw before giving up.
pub const MAX_REJECTION_DRAWS: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SimulationMethod {
    LatentVariable,
    MarkovSteps,
    DirectCategorical,
    GuttmanRejection,
}

impl SimulationMethod {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "latent" => Ok(SimulationMethod::LatentVariable),
            "markov" => Ok(SimulationMethod::MarkovSteps),
            "direct" => Ok(SimulationMethod::DirectCategorical),
            "rejection" => Ok(SimulationMethod::GuttmanRejection),
            other => Err(Error::invalid(format!(
                "unknown method '{other}' (expected latent, markov, direct or rejection)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SimulationMethod::LatentVariable => "latent",
            SimulationMethod::MarkovSteps => "markov",
            SimulationMethod::DirectCategorical => "direct",
            SimulationMethod::GuttmanRejection => "rejection",
        }
    }

    /// The family whose story this method tells; `None` for the direct draw.
    pub fn native_family(self) -> Option<Family> {
        match self {
            SimulationMethod::LatentVariable => Some(Family::Cumulative),
            SimulationMethod::MarkovSteps => Some(Family::Sequential),
            SimulationMethod::GuttmanRejection => Some(Family::AdjacentPcm),
            SimulationMethod::DirectCategorical => None,
        }
    }

    pub fn check_compatible(self, family: Family) -> Result<()> {
        match self.native_family() {
            Some(f) if f != family => Err(Error::invalid(format!(
                "method '{}' simulates the {f} family, not {family}",
                self.name()
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub model: OrdinalModel,
    pub theta: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub method: SimulationMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AcceptanceStats {
    pub raw_draws: u64,
    pub accepted: u64,
}

impl AcceptanceStats {
    /// Empirical acceptance rate, an estimate of the Guttman mass `s`.
    pub fn rate(&self) -> f64 {
        if self.raw_draws == 0 {
            0.0
        } else {
            self.accepted as f64 / self.raw_draws as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutput {
    pub scores: Vec<usize>,
    /// Present only for `GuttmanRejection`.
    pub acceptance: Option<AcceptanceStats>,
}

/// Draws single scores from one model with one method.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    model: &'a OrdinalModel,
    method: SimulationMethod,
    stats: AcceptanceStats,
}

fn open_uniform<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

impl<'a> Sampler<'a> {
    pub fn new(model: &'a OrdinalModel, method: SimulationMethod) -> Result<Self> {
        method.check_compatible(model.family())?;
        Ok(Self { model, method, stats: AcceptanceStats::default() })
    }

    pub fn stats(&self) -> AcceptanceStats {
        self.stats
    }

    pub fn draw<R: Rng>(&mut self, theta: f64, rng: &mut R) -> Result<usize> {
        if !theta.is_finite() {
            return Err(Error::invalid(format!("ability {theta} is not finite")));
        }
        let f = self.model.response();
        let deltas = self.model.deltas();
        match self.method {
            SimulationMethod::LatentVariable => {
                let eps = f.quantile(open_uniform(rng))?;
                let latent = theta + eps;
                Ok(deltas.iter().take_while(|&&d| d <= latent).count())
            }
            SimulationMethod::MarkovSteps => Ok(markov_trajectory(f, theta, deltas, rng)
                .iter()
                .take_while(|&&b| b == 1)
                .count()),
            SimulationMethod::DirectCategorical => {
                let probs = self.model.category_probs(theta)?;
                Ok(categorical(probs.probs(), rng.random()))
            }
            SimulationMethod::GuttmanRejection => {
                let pis: Vec<f64> = deltas.iter().map(|d| f.eval(theta - d)).collect();
                let mut bits = vec![0u8; pis.len()];
                loop {
                    if self.stats.raw_draws >= MAX_REJECTION_DRAWS {
                        return Err(Error::invalid(format!(
                            "rejection sampler hit {MAX_REJECTION_DRAWS} raw draws with acceptance rate {:e}",
                            self.stats.rate()
                        )));
                    }
                    for (b, p) in bits.iter_mut().zip(&pis) {
                        *b = u8::from(rng.random::<f64>() < *p);
                    }
                    self.stats.raw_draws += 1;
                    if is_guttman(&bits)? {
                        self.stats.accepted += 1;
                        return Ok(bits.iter().filter(|&&b| b == 1).count());
                    }
                }
            }
        }
    }
}

fn categorical(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (r, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return r;
        }
    }
    probs.len() - 1
}

/// One full path of the stopping chain over all `k` transitions. A failure is
/// absorbing: every later transition has success probability zero.
pub fn markov_trajectory<R: Rng>(
    f: &crate::response::ResponseFunction,
    theta: f64,
    deltas: &[f64],
    rng: &mut R,
) -> Vec<u8> {
    let mut alive = true;
    deltas
        .iter()
        .map(|d| {
            let p = if alive { f.eval(theta - d) } else { 0.0 };
            alive = rng.random::<f64>() < p;
            u8::from(alive)
        })
        .collect()
}

pub fn sample(config: &SimulationConfig) -> Result<SampleOutput> {
    if config.n_samples == 0 {
        return Err(Error::invalid("n_samples must be at least 1"));
    }
    let mut sampler = Sampler::new(&config.model, config.method)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let scores = (0..config.n_samples)
        .map(|_| sampler.draw(config.theta, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let acceptance = (config.method == SimulationMethod::GuttmanRejection).then(|| sampler.stats());
    Ok(SampleOutput { scores, acceptance })
}

/// A response matrix for `thetas` (rows) by `models` (columns), one stream
/// for the whole matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedResponses {
    pub responses: Vec<Vec<usize>>,
    /// Per item; `None` unless the method is `GuttmanRejection`.
    pub acceptance: Vec<Option<AcceptanceStats>>,
}

pub fn simulate_responses(
    models: &[OrdinalModel],
    thetas: &[f64],
    method: SimulationMethod,
    seed: u64,
) -> Result<SimulatedResponses> {
    let mut samplers = models
        .iter()
        .map(|m| Sampler::new(m, method))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut responses = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let row = samplers
            .iter_mut()
            .map(|s| s.draw(theta, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        responses.push(row);
    }
    let acceptance = samplers
        .iter()
        .map(|s| (method == SimulationMethod::GuttmanRejection).then(|| s.stats()))
        .collect();
    Ok(SimulatedResponses { responses, acceptance })
}

/// `n` abilities drawn iid from `N(mean, sd^2)`.
pub fn normal_abilities(mean: f64, sd: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(mean.is_finite() && sd.is_finite() && sd >= 0.0) {
        return Err(Error::invalid(format!("ability distribution N({mean}, {sd}^2) needs finite mean and sd >= 0")));
    }
    let dist = Normal::new(mean, sd).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}

/// Category frequencies of `samples` over `0..=k`.
pub fn frequencies(samples: &[usize], k: usize) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    let mut counts = vec![0usize; k + 1];
    for &s in samples {
        if s > k {
            return Err(Error::invalid(format!("score {s} outside 0..={k}")));
        }
        counts[s] += 1;
    }
    let n = samples.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Total variation distance `0.5 * sum_r |freq_r - exact_r|`.
pub fn empirical_tv(samples: &[usize], exact: &OrdinalDistribution) -> Result<f64> {
    let freq = frequencies(samples, exact.k())?;
    Ok(0.5 * freq.iter().zip(exact.probs()).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(family: Family, deltas: &[f64], theta: f64, n: usize, method: SimulationMethod) -> SimulationConfig {
        SimulationConfig {
            model: OrdinalModel::logistic(family, deltas).unwrap(),
            theta,
            n_samples: n,
            seed: 11,
            method,
        }
    }

    #[test]
    fn tv_examples() {
        let exact = OrdinalDistribution::new(vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(empirical_tv(&[0, 1, 1, 2], &exact).unwrap(), 0.0);
        let uniform = OrdinalDistribution::new(vec![1.0 / 3.0; 3]).unwrap();
        assert!((empirical_tv(&[0, 0, 0], &uniform).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(empirical_tv(&[3], &uniform).is_err());
        assert!(empirical_tv(&[], &uniform).is_err());
    }

    #[test]
    fn markov_single_draw() {
        let out = sample(&cfg(Family::Sequential, &[0.0, 0.0], 0.0, 1, SimulationMethod::MarkovSteps)).unwrap();
        assert_eq!(out.scores.len(), 1);
        assert!(out.scores[0] <= 2);
        assert!(out.acceptance.is_none());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let t = markov_trajectory(&crate::response::ResponseFunction::Logistic, 0.0, &[0.0, 0.0, 0.0], &mut rng);
            assert!(is_guttman(&t).unwrap());
        }
    }

    #[test]
    fn incompatible_methods() {
        for (fam, method) in [
            (Family::AdjacentPcm, SimulationMethod::MarkovSteps),
            (Family::Sequential, SimulationMethod::LatentVariable),
            (Family::Cumulative, SimulationMethod::GuttmanRejection),
        ] {
            assert!(sample(&cfg(fam, &[0.0], 0.0, 10, method)).is_err());
        }
        assert!(sample(&cfg(Family::AdjacentPcm, &[0.0], 0.0, 0, SimulationMethod::DirectCategorical)).is_err());
    }

    #[test]
    fn rejection_acceptance_rate() {
        let out = sample(&cfg(Family::AdjacentPcm, &[0.0, 0.0], 0.0, 50_000, SimulationMethod::GuttmanRejection)).unwrap();
        let stats = out.acceptance.unwrap();
        assert_eq!(stats.accepted, 50_000);
        assert!((stats.rate() - 0.75).abs() < 0.01);
    }

    #[test]
    fn deterministic_streams() {
        for method in [SimulationMethod::DirectCategorical, SimulationMethod::GuttmanRejection] {
            let c = cfg(Family::AdjacentPcm, &[-1.0, 0.5], 0.2, 500, method);
            assert_eq!(sample(&c).unwrap(), sample(&c).unwrap());
        }
    }

    #[test]
    fn latent_variable_hits_thresholds() {
        let c = cfg(Family::Cumulative, &[-1.0, 1.0], 0.0, 40_000, SimulationMethod::LatentVariable);
        let out = sample(&c).unwrap();
        let exact = c.model.category_probs(0.0).unwrap();
        assert!(empirical_tv(&out.scores, &exact).unwrap() < 0.015);
    }

    #[test]
    fn categorical_edges() {
        assert_eq!(categorical(&[0.5, 0.5], 0.0), 0);
        assert_eq!(categorical(&[0.5, 0.5], 0.999_999), 1);
        assert_eq!(categorical(&[0.0, 1.0], 0.0), 1);
    }
}
