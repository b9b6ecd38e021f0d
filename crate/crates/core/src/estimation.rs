//! Maximum-likelihood fitting of item thresholds, optionally jointly with
//! person abilities.
//!
//! Given abilities, the log-likelihood separates over items, so each item's
//! thresholds get their own damped Newton step. Joint mode alternates an item
//! sweep with a person sweep and re-centers the abilities to mean zero after
//! every sweep (the likelihood only depends on `theta - delta`). Missing
//! cells are skipped.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Family, ItemThresholds, OrdinalModel};
use crate::response::ResponseFunction;

/// An item's identifier and number of thresholds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemSpec {
    pub id: String,
    pub k: usize,
}

/// Person-by-item response matrix; `None` marks a missing response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    person_ids: Vec<String>,
    items: Vec<ItemSpec>,
    responses: Vec<Vec<Option<usize>>>,
}

impl Dataset {
    pub fn new(person_ids: Vec<String>, items: Vec<ItemSpec>, responses: Vec<Vec<Option<usize>>>) -> Result<Self> {
        if person_ids.len() != responses.len() {
            return Err(Error::invalid(format!(
                "{} person ids for {} response rows",
                person_ids.len(),
                responses.len()
            )));
        }
        for (p, row) in responses.iter().enumerate() {
            if row.len() != items.len() {
                return Err(Error::invalid(format!(
                    "row for person '{}' has {} cells, expected {}",
                    person_ids[p],
                    row.len(),
                    items.len()
                )));
            }
            for (cell, item) in row.iter().zip(&items) {
                if let Some(y) = cell {
                    if *y > item.k {
                        return Err(Error::invalid(format!(
                            "person '{}', item '{}': response {y} outside 0..={}",
                            person_ids[p], item.id, item.k
                        )));
                    }
                }
            }
        }
        Ok(Self { person_ids, items, responses })
    }

    pub fn person_ids(&self) -> &[String] {
        &self.person_ids
    }

    pub fn items(&self) -> &[ItemSpec] {
        &self.items
    }

    pub fn responses(&self) -> &[Vec<Option<usize>>] {
        &self.responses
    }

    pub fn n_persons(&self) -> usize {
        self.person_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    /// Recodes every response `y` as `k - y`.
    pub fn reversed(&self) -> Self {
        let responses = self
            .responses
            .iter()
            .map(|row| row.iter().zip(&self.items).map(|(c, it)| c.map(|y| it.k - y)).collect())
            .collect();
        Self { person_ids: self.person_ids.clone(), items: self.items.clone(), responses }
    }

    /// Observation counts per category for item `i`, restricted to `persons`.
    fn category_counts(&self, i: usize, persons: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.items[i].k + 1];
        for &p in persons {
            if let Some(y) = self.responses[p][i] {
                counts[y] += 1;
            }
        }
        counts
    }
}

/// Derivatives of `ln P(Y = y)` with respect to `eta_j = theta - delta_j`.
fn cell_slopes(family: Family, f: &ResponseFunction, deltas: &[f64], theta: f64, y: usize) -> Result<Vec<f64>> {
    let k = deltas.len();
    let eta: Vec<f64> = deltas.iter().map(|d| theta - d).collect();
    let model_logp = log_probs_unchecked(family, f, deltas, theta);
    let log_prob = model_logp[y];
    let mut d_eta = vec![0.0; k];
    match family {
        Family::Cumulative => {
            // P(y) = F(eta_y) - F(eta_{y+1})
            if y >= 1 {
                d_eta[y - 1] = (f.log_density(eta[y - 1])? - log_prob).exp();
            }
            if y < k {
                d_eta[y] = -(f.log_density(eta[y])? - log_prob).exp();
            }
        }
        Family::Sequential => {
            for j in 0..y {
                d_eta[j] = (f.log_density(eta[j])? - f.log_eval(eta[j])).exp();
            }
            if y < k {
                d_eta[y] = -(f.log_density(eta[y])? - f.log_survival(eta[y])).exp();
            }
        }
        Family::AdjacentPcm => {
            // d ln P(y) / d eta_j = l'(eta_j) (1[j <= y] - P(Y >= j)), l = ln F - ln(1 - F)
            let mut tail = 0.0;
            for j in (0..k).rev() {
                tail += model_logp[j + 1].exp();
                let slope = if f.is_logistic() {
                    1.0
                } else {
                    (f.log_density(eta[j])? - f.log_eval(eta[j]) - f.log_survival(eta[j])).exp()
                };
                let indicator = if j < y { 1.0 } else { 0.0 };
                d_eta[j] = slope * (indicator - tail);
            }
        }
    }
    Ok(d_eta)
}

/// Log category probabilities without ordering validation; a cumulative model
/// with crossing thresholds yields NaN or -inf entries.
fn log_probs_unchecked(family: Family, f: &ResponseFunction, deltas: &[f64], theta: f64) -> Vec<f64> {
    if family == Family::Cumulative && deltas.windows(2).any(|w| w[0] > w[1]) {
        return vec![f64::NEG_INFINITY; deltas.len() + 1];
    }
    let thresholds = ItemThresholds { item_id: String::new(), deltas: deltas.to_vec() };
    match OrdinalModel::new(family, *f, thresholds).and_then(|m| m.log_category_probs(theta)) {
        Ok(lp) => lp,
        Err(_) => vec![f64::NAN; deltas.len() + 1],
    }
}

fn check_dims(data: &Dataset, params: &[Vec<f64>], abilities: &[f64]) -> Result<()> {
    if params.len() != data.n_items() {
        return Err(Error::invalid(format!(
            "{} threshold vectors for {} items",
            params.len(),
            data.n_items()
        )));
    }
    for (p, it) in params.iter().zip(data.items()) {
        if p.len() != it.k {
            return Err(Error::invalid(format!(
                "item '{}' declares k={} but got {} thresholds",
                it.id,
                it.k,
                p.len()
            )));
        }
    }
    if abilities.len() != data.n_persons() {
        return Err(Error::invalid(format!(
            "{} abilities for {} persons",
            abilities.len(),
            data.n_persons()
        )));
    }
    if abilities.iter().chain(params.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite parameter"));
    }
    Ok(())
}

fn check_family_params(family: Family, data: &Dataset, params: &[Vec<f64>]) -> Result<()> {
    if family == Family::Cumulative {
        for (p, it) in params.iter().zip(data.items()) {
            OrdinalModel::new(family, ResponseFunction::Logistic, ItemThresholds::new(it.id.clone(), p.clone())?)?;
        }
    }
    Ok(())
}

/// Sum of `ln P(Y_pi = y_pi)` over the observed cells.
pub fn log_likelihood(
    data: &Dataset,
    family: Family,
    response: &ResponseFunction,
    params: &[Vec<f64>],
    abilities: &[f64],
) -> Result<f64> {
    check_dims(data, params, abilities)?;
    check_family_params(family, data, params)?;
    let all: Vec<usize> = (0..data.n_persons()).collect();
    Ok((0..data.n_items())
        .map(|i| item_log_likelihood(data, family, response, i, &params[i], abilities, &all))
        .sum())
}

fn item_log_likelihood(
    data: &Dataset,
    family: Family,
    f: &ResponseFunction,
    i: usize,
    deltas: &[f64],
    abilities: &[f64],
    persons: &[usize],
) -> f64 {
    let mut total = 0.0;
    for &p in persons {
        if let Some(y) = data.responses[p][i] {
            total += log_probs_unchecked(family, f, deltas, abilities[p])[y];
        }
    }
    if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    }
}

fn item_gradient(
    data: &Dataset,
    family: Family,
    f: &ResponseFunction,
    i: usize,
    deltas: &[f64],
    abilities: &[f64],
    persons: &[usize],
) -> Result<Vec<f64>> {
    let mut g = vec![0.0; deltas.len()];
    for &p in persons {
        if let Some(y) = data.responses[p][i] {
            let slopes = cell_slopes(family, f, deltas, abilities[p], y)?;
            for (gj, d) in g.iter_mut().zip(&slopes) {
                *gj -= d;
            }
        }
    }
    Ok(g)
}

fn person_log_likelihood(data: &Dataset, family: Family, f: &ResponseFunction, p: usize, theta: f64, params: &[Vec<f64>]) -> f64 {
    let total: f64 = data.responses[p]
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|y| log_probs_unchecked(family, f, &params[i], theta)[y]))
        .sum();
    if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    }
}

fn person_gradient(data: &Dataset, family: Family, f: &ResponseFunction, p: usize, theta: f64, params: &[Vec<f64>]) -> Result<f64> {
    let mut g = 0.0;
    for (i, c) in data.responses[p].iter().enumerate() {
        if let Some(y) = c {
            g += cell_slopes(family, f, &params[i], theta, *y)?.iter().sum::<f64>();
        }
    }
    Ok(g)
}

/// Gradient of the log-likelihood: one block per item, plus abilities when free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradient {
    pub thresholds: Vec<Vec<f64>>,
    pub abilities: Option<Vec<f64>>,
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        self.thresholds
            .iter()
            .flatten()
            .chain(self.abilities.iter().flatten())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.thresholds.iter().flatten().chain(self.abilities.iter().flatten()).copied().collect()
    }
}

/// Analytic gradient. Needs a response function with a known density
/// (logistic or normal); custom functions give `Unsupported`.
pub fn gradient(
    data: &Dataset,
    family: Family,
    response: &ResponseFunction,
    params: &[Vec<f64>],
    abilities: &[f64],
    free_abilities: bool,
) -> Result<Gradient> {
    check_dims(data, params, abilities)?;
    check_family_params(family, data, params)?;
    response.log_density(0.0)?;
    let all: Vec<usize> = (0..data.n_persons()).collect();
    let thresholds = (0..data.n_items())
        .map(|i| item_gradient(data, family, response, i, &params[i], abilities, &all))
        .collect::<Result<Vec<_>>>()?;
    let abilities = if free_abilities {
        Some(
            (0..data.n_persons())
                .map(|p| person_gradient(data, family, response, p, abilities[p], params))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(Gradient { thresholds, abilities })
}

/// Central-difference gradient; used when no density is available.
pub fn numeric_gradient(
    data: &Dataset,
    family: Family,
    response: &ResponseFunction,
    params: &[Vec<f64>],
    abilities: &[f64],
    free_abilities: bool,
    step: f64,
) -> Result<Gradient> {
    check_dims(data, params, abilities)?;
    let mut p = params.to_vec();
    let mut thresholds = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let mut block = Vec::with_capacity(params[i].len());
        for j in 0..params[i].len() {
            let orig = p[i][j];
            p[i][j] = orig + step;
            let up = log_likelihood(data, family, response, &p, abilities)?;
            p[i][j] = orig - step;
            let down = log_likelihood(data, family, response, &p, abilities)?;
            p[i][j] = orig;
            block.push((up - down) / (2.0 * step));
        }
        thresholds.push(block);
    }
    let abilities_grad = if free_abilities {
        let mut a = abilities.to_vec();
        let mut out = Vec::with_capacity(a.len());
        for q in 0..a.len() {
            let orig = a[q];
            a[q] = orig + step;
            let up = log_likelihood(data, family, response, params, &a)?;
            a[q] = orig - step;
            let down = log_likelihood(data, family, response, params, &a)?;
            a[q] = orig;
            out.push((up - down) / (2.0 * step));
        }
        Some(out)
    } else {
        None
    };
    Ok(Gradient { thresholds, abilities: abilities_grad })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMode {
    /// Abilities are known; only thresholds are estimated.
    FixedTheta,
    /// Thresholds and abilities are estimated by alternating blocks.
    Joint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub mode: FitMode,
    pub max_iter: usize,
    /// Convergence tolerance on the Euclidean norm of the free-parameter gradient.
    pub tol: f64,
    /// Re-center abilities to mean zero (required in joint mode).
    pub anchor_mean_ability: bool,
    /// Starting thresholds; data-driven starts when absent.
    pub start: Option<Vec<Vec<f64>>>,
    pub response: ResponseFunction,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            mode: FitMode::FixedTheta,
            max_iter: 500,
            tol: 1e-6,
            anchor_mean_ability: true,
            start: None,
            response: ResponseFunction::Logistic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    pub thresholds: Vec<ItemThresholds>,
    /// Joint mode only. `None` entries are persons with extreme or empty
    /// response patterns, whose abilities have no finite estimate.
    pub abilities: Option<Vec<Option<f64>>>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub numeric_gradient: bool,
    pub anchor_applied: bool,
    pub excluded_persons: Vec<String>,
    /// Log-likelihood at the start and after every iteration.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

struct Problem<'a> {
    data: &'a Dataset,
    family: Family,
    f: ResponseFunction,
    numeric: bool,
    persons: Vec<usize>,
}

const FD_STEP: f64 = 1e-5;

impl Problem<'_> {
    fn item_ll(&self, i: usize, deltas: &[f64], abilities: &[f64]) -> f64 {
        item_log_likelihood(self.data, self.family, &self.f, i, deltas, abilities, &self.persons)
    }

    fn item_grad(&self, i: usize, deltas: &[f64], abilities: &[f64]) -> Vec<f64> {
        let analytic = (!self.numeric)
            .then(|| item_gradient(self.data, self.family, &self.f, i, deltas, abilities, &self.persons).ok())
            .flatten();
        analytic.unwrap_or_else(|| {
            fd_gradient(deltas, |x| self.item_ll(i, x, abilities))
        })
    }

    fn person_ll(&self, p: usize, theta: f64, params: &[Vec<f64>]) -> f64 {
        person_log_likelihood(self.data, self.family, &self.f, p, theta, params)
    }

    fn person_grad(&self, p: usize, theta: f64, params: &[Vec<f64>]) -> f64 {
        if !self.numeric {
            if let Ok(g) = person_gradient(self.data, self.family, &self.f, p, theta, params) {
                return g;
            }
        }
        fd_gradient(&[theta], |x| self.person_ll(p, x[0], params))[0]
    }

    fn gradient_norm(&self, params: &[Vec<f64>], abilities: &[f64], joint: bool) -> f64 {
        let items: f64 = (0..params.len())
            .into_par_iter()
            .map(|i| self.item_grad(i, &params[i], abilities).iter().map(|g| g * g).sum::<f64>())
            .sum();
        let persons: f64 = if joint {
            self.persons
                .par_iter()
                .map(|&p| self.person_grad(p, abilities[p], params).powi(2))
                .sum()
        } else {
            0.0
        };
        (items + persons).sqrt()
    }

    fn total_ll(&self, params: &[Vec<f64>], abilities: &[f64]) -> f64 {
        (0..params.len()).map(|i| self.item_ll(i, &params[i], abilities)).sum()
    }
}

fn fd_gradient(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|j| {
            y[j] = x[j] + FD_STEP;
            let up = f(&y);
            y[j] = x[j] - FD_STEP;
            let down = f(&y);
            y[j] = x[j];
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

/// One damped Newton step maximizing `ll`. The Hessian is the central
/// difference of `grad`; when it is not negative definite the step falls back
/// to the gradient direction. Returns `None` when no step increases `ll`.
/// Steps whose predicted gain is within rounding noise skip the line search,
/// so `ll` may dip by a few ulps there.
fn newton_step(x: &[f64], ll: impl Fn(&[f64]) -> f64, grad: impl Fn(&[f64]) -> Vec<f64>) -> Option<Vec<f64>> {
    let m = x.len();
    let g = grad(x);
    let mut hess = DMatrix::<f64>::zeros(m, m);
    let mut y = x.to_vec();
    for j in 0..m {
        y[j] = x[j] + FD_STEP;
        let up = grad(&y);
        y[j] = x[j] - FD_STEP;
        let down = grad(&y);
        y[j] = x[j];
        for i in 0..m {
            hess[(i, j)] = (up[i] - down[i]) / (2.0 * FD_STEP);
        }
    }
    let neg_hess = -(&hess + hess.transpose()) * 0.5;
    let gv = DVector::from_column_slice(&g);
    let (direction, newton) = match neg_hess.cholesky() {
        Some(ch) => (ch.solve(&gv), true),
        None => (gv.clone(), false),
    };
    let slope = gv.dot(&direction);
    let base = ll(x);
    // Near the optimum the predicted gain drops below the rounding noise of
    // `ll` and the line search can no longer see it; take the full step.
    if newton && 0.5 * slope < 64.0 * f64::EPSILON * base.abs().max(1.0) {
        let cand: Vec<f64> = x.iter().zip(direction.iter()).map(|(a, d)| a + d).collect();
        return ll(&cand).is_finite().then_some(cand);
    }
    let mut t = 1.0;
    for _ in 0..60 {
        let cand: Vec<f64> = x.iter().zip(direction.iter()).map(|(a, d)| a + t * d).collect();
        let value = ll(&cand);
        if value.is_finite() && value >= base && value >= base + 1e-4 * t * slope {
            return Some(cand);
        }
        t *= 0.5;
    }
    None
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Data-driven starting thresholds; all categories are observed here.
fn start_values(family: Family, counts: &[usize], mean_theta: f64) -> Vec<f64> {
    let k = counts.len() - 1;
    let n: usize = counts.iter().sum();
    let tail = |r: usize| counts[r..].iter().sum::<usize>() as f64;
    (1..=k)
        .map(|r| match family {
            Family::Cumulative => mean_theta - logit(tail(r) / n as f64),
            Family::Sequential => mean_theta - logit(tail(r) / tail(r - 1)),
            Family::AdjacentPcm => mean_theta + (counts[r - 1] as f64 / counts[r] as f64).ln(),
        })
        .collect()
}

/// Fits thresholds (and in joint mode abilities). `abilities` are the known
/// abilities in fixed-theta mode and starting values in joint mode.
pub fn fit(data: &Dataset, family: Family, abilities: &[f64], options: &FitOptions) -> Result<FitResult> {
    if abilities.len() != data.n_persons() || abilities.iter().any(|a| !a.is_finite()) {
        return Err(Error::invalid(format!(
            "need {} finite abilities, got {}",
            data.n_persons(),
            abilities.len()
        )));
    }
    if options.mode == FitMode::Joint && !options.anchor_mean_ability {
        return Err(Error::invalid("joint fitting needs the mean-ability anchor"));
    }
    if options.tol.is_nan() || options.tol <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let joint = options.mode == FitMode::Joint;
    let f = options.response;
    let numeric = f.log_density(0.0).is_err();

    // Joint mode drops persons whose pattern puts the ability MLE at infinity.
    let persons: Vec<usize> = (0..data.n_persons())
        .filter(|&p| {
            let observed: Vec<(usize, usize)> = data.responses[p]
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.map(|y| (i, y)))
                .collect();
            if !joint {
                return !observed.is_empty();
            }
            let all_min = observed.iter().all(|&(_, y)| y == 0);
            let all_max = observed.iter().all(|&(i, y)| y == data.items[i].k);
            !observed.is_empty() && !all_min && !all_max
        })
        .collect();
    let excluded_persons: Vec<String> = if joint {
        (0..data.n_persons())
            .filter(|p| persons.binary_search(p).is_err())
            .map(|p| data.person_ids[p].clone())
            .collect()
    } else {
        Vec::new()
    };

    for (i, item) in data.items.iter().enumerate() {
        let counts = data.category_counts(i, &persons);
        let empty: Vec<usize> = (0..counts.len()).filter(|&r| counts[r] == 0).collect();
        if item.k == 0 || !empty.is_empty() {
            return Err(Error::DegenerateItem {
                item: item.id.clone(),
                categories: if item.k == 0 { vec![1] } else { empty },
            });
        }
    }

    let problem = Problem { data, family, f, numeric, persons };
    let mut theta = abilities.to_vec();
    let anchor = |theta: &mut [f64], params: &mut [Vec<f64>]| {
        let n = problem.persons.len() as f64;
        let shift = problem.persons.iter().map(|&p| theta[p]).sum::<f64>() / n;
        for &p in &problem.persons {
            theta[p] -= shift;
        }
        for d in params.iter_mut().flatten() {
            *d -= shift;
        }
    };

    let mut params: Vec<Vec<f64>> = match &options.start {
        Some(start) => {
            check_dims(data, start, abilities)?;
            start.clone()
        }
        None => {
            let mean = problem.persons.iter().map(|&p| theta[p]).sum::<f64>() / problem.persons.len() as f64;
            (0..data.n_items())
                .map(|i| start_values(family, &data.category_counts(i, &problem.persons), mean))
                .collect()
        }
    };
    if joint {
        anchor(&mut theta, &mut params);
    }

    let mut iterations = 0;
    let mut trace = vec![problem.total_ll(&params, &theta)];
    let mut grad_norm = problem.gradient_norm(&params, &theta, joint);
    while grad_norm >= options.tol && iterations < options.max_iter {
        let steps: Vec<Option<Vec<f64>>> = (0..params.len())
            .into_par_iter()
            .map(|i| {
                newton_step(
                    &params[i],
                    |x| problem.item_ll(i, x, &theta),
                    |x| problem.item_grad(i, x, &theta),
                )
            })
            .collect();
        let mut moved = false;
        for (i, s) in steps.into_iter().enumerate() {
            if let Some(s) = s {
                params[i] = s;
                moved = true;
            }
        }
        if joint {
            let updates: Vec<(usize, Option<f64>)> = problem
                .persons
                .par_iter()
                .map(|&p| {
                    let step = newton_step(
                        &[theta[p]],
                        |x| problem.person_ll(p, x[0], &params),
                        |x| vec![problem.person_grad(p, x[0], &params)],
                    );
                    (p, step.map(|v| v[0]))
                })
                .collect();
            for (p, u) in updates {
                if let Some(u) = u {
                    theta[p] = u;
                    moved = true;
                }
            }
            anchor(&mut theta, &mut params);
        }
        iterations += 1;
        trace.push(problem.total_ll(&params, &theta));
        grad_norm = problem.gradient_norm(&params, &theta, joint);
        if !moved {
            break;
        }
    }

    let thresholds = data
        .items
        .iter()
        .zip(&params)
        .map(|(it, d)| {
            let t = ItemThresholds::new(it.id.clone(), d.clone())?;
            // cumulative fits must come out ordered
            OrdinalModel::new(family, f, t.clone())?;
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;

    let abilities_out = joint.then(|| {
        (0..data.n_persons())
            .map(|p| problem.persons.binary_search(&p).is_ok().then(|| theta[p]))
            .collect()
    });

    Ok(FitResult {
        family,
        thresholds,
        abilities: abilities_out,
        log_likelihood: *trace.last().expect("trace starts non-empty"),
        iterations,
        converged: grad_norm < options.tol,
        gradient_norm: grad_norm,
        numeric_gradient: numeric,
        anchor_applied: joint && options.anchor_mean_ability,
        excluded_persons,
        trace,
    })
}

/// Root mean squared difference between fitted and reference thresholds.
pub fn threshold_rmse(fitted: &[ItemThresholds], truth: &[Vec<f64>]) -> Result<f64> {
    if fitted.len() != truth.len() {
        return Err(Error::invalid("item count mismatch"));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (a, b) in fitted.iter().zip(truth) {
        if a.deltas.len() != b.len() {
            return Err(Error::invalid(format!("threshold count mismatch for item '{}'", a.item_id)));
        }
        for (x, y) in a.deltas.iter().zip(b) {
            sum += (x - y).powi(2);
            n += 1;
        }
    }
    Ok((sum / n as f64).sqrt())
}
