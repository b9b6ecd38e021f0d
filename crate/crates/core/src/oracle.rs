//! Brute-force reference computations.
//!
//! Each function here takes the slow, literal route: it materializes the full
//! `2^k` joint of binary variables, walks every stopping path, or evaluates the
//! textbook formula in plain linear arithmetic. Nothing in this module calls
//! into the log-space fast paths it is used to check.

use crate::binary::is_guttman;
use crate::error::{Error, Result};

/// Largest `k` for which the `2^k` joint is materialized.
pub const MAX_ENUM_K: usize = 16;

fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_ENUM_K {
        return Err(Error::invalid(format!("enumeration needs 1 <= k <= {MAX_ENUM_K}, got {k}")));
    }
    Ok(())
}

fn bits_of(mask: usize, k: usize) -> Vec<u8> {
    (0..k).map(|j| ((mask >> j) & 1) as u8).collect()
}

/// Every binary vector with its probability under independence.
pub fn enumerate_joint(pis: &[f64]) -> Result<Vec<(Vec<u8>, f64)>> {
    check_k(pis.len())?;
    let k = pis.len();
    Ok((0..1usize << k)
        .map(|mask| {
            let bits = bits_of(mask, k);
            let p = bits
                .iter()
                .zip(pis)
                .map(|(&b, &p)| if b == 1 { p } else { 1.0 - p })
                .product();
            (bits, p)
        })
        .collect())
}

/// The Guttman space experiment by enumeration: drop non-Guttman cells and
/// renormalize. Returns the score distribution and the retained mass `s`.
pub fn enumerate_conditioned(pis: &[f64]) -> Result<(Vec<f64>, f64)> {
    let k = pis.len();
    let mut scores = vec![0.0; k + 1];
    for (bits, p) in enumerate_joint(pis)? {
        if is_guttman(&bits)? {
            scores[bits.iter().filter(|&&b| b == 1).count()] += p;
        }
    }
    let s: f64 = scores.iter().sum();
    scores.iter_mut().for_each(|p| *p /= s);
    Ok((scores, s))
}

/// `P(success | event)` over the conditioned joint.
pub fn enumerated_conditional(
    pis: &[f64],
    event: impl Fn(&[u8]) -> bool,
    success: impl Fn(&[u8]) -> bool,
) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (bits, p) in enumerate_joint(pis)? {
        if is_guttman(&bits)? && event(&bits) {
            den += p;
            if success(&bits) {
                num += p;
            }
        }
    }
    if den == 0.0 {
        return Err(Error::DegenerateCondition(0.0));
    }
    Ok(num / den)
}

/// Event `Y^(r-1) = 1` (if `r > 1`) and `Y^(r+1) = 0` (if `r < k`), 1-based `r`.
pub fn neighbours_event(r: usize, k: usize) -> impl Fn(&[u8]) -> bool {
    move |b: &[u8]| (r == 1 || b[r - 2] == 1) && (r == k || b[r] == 0)
}

/// `P(Y^(r)=1 | Y^(r-1)=1, Y^(r+1)=0)` in the conditioned joint.
pub fn enumerated_local_conditional(pis: &[f64], r: usize) -> Result<f64> {
    let k = pis.len();
    if r == 0 || r > k {
        return Err(Error::IndexOutOfRange { index: r, max: k });
    }
    enumerated_conditional(pis, neighbours_event(r, k), |b| b[r - 1] == 1)
}

/// `P(Y^(r)=1) / P(Y^(r)=0)` in the conditioned joint.
pub fn enumerated_marginal_odds(pis: &[f64], r: usize) -> Result<f64> {
    let k = pis.len();
    if r == 0 || r > k {
        return Err(Error::IndexOutOfRange { index: r, max: k });
    }
    let (mut yes, mut no) = (0.0, 0.0);
    for (bits, p) in enumerate_joint(pis)? {
        if is_guttman(&bits)? {
            if bits[r - 1] == 1 {
                yes += p;
            } else {
                no += p;
            }
        }
    }
    Ok(yes / no)
}

/// Conditional probability over Guttman vectors whose law is given by score
/// probabilities (each score `r` carries the vector with `r` leading ones).
pub fn conditional_from_scores(
    probs: &[f64],
    event: impl Fn(&[u8]) -> bool,
    success: impl Fn(&[u8]) -> bool,
) -> Result<f64> {
    let k = probs.len() - 1;
    let mut num = 0.0;
    let mut den = 0.0;
    for (r, &p) in probs.iter().enumerate() {
        let bits: Vec<u8> = (0..k).map(|j| u8::from(j < r)).collect();
        if event(&bits) {
            den += p;
            if success(&bits) {
                num += p;
            }
        }
    }
    if den == 0.0 {
        return Err(Error::DegenerateCondition(0.0));
    }
    Ok(num / den)
}

/// Score distribution of the stopping chain with transition probabilities `c`:
/// every binary vector is walked, and a 1 after a 0 has probability zero.
pub fn markov_path_probs(c: &[f64]) -> Result<Vec<f64>> {
    check_k(c.len())?;
    let k = c.len();
    let mut scores = vec![0.0; k + 1];
    for mask in 0..1usize << k {
        let bits = bits_of(mask, k);
        let mut p = 1.0;
        let mut alive = true;
        for (j, &b) in bits.iter().enumerate() {
            let up = if alive { c[j] } else { 0.0 };
            p *= if b == 1 { up } else { 1.0 - up };
            alive = b == 1;
        }
        if p > 0.0 {
            scores[bits.iter().filter(|&&b| b == 1).count()] += p;
        }
    }
    Ok(scores)
}

/// `pi_1..pi_r (1-pi_{r+1})..(1-pi_k) / s` in plain products.
pub fn guttman_product_formula(pis: &[f64]) -> Vec<f64> {
    let qs: Vec<f64> = pis.iter().map(|p| 1.0 - p).collect();
    guttman_products(pis, &qs)
}

/// Same products with the complements `q_j = 1 - pi_j` supplied, so that
/// a `pi_j` rounded to within an ulp of one does not lose its complement.
pub fn guttman_products(pis: &[f64], qs: &[f64]) -> Vec<f64> {
    let k = pis.len();
    let cells: Vec<f64> = (0..=k)
        .map(|r| pis[..r].iter().product::<f64>() * qs[r..].iter().product::<f64>())
        .collect();
    let s: f64 = cells.iter().sum();
    cells.into_iter().map(|c| c / s).collect()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Logistic PCM: `exp(sum_{j<=r} (theta - delta_j))`, normalized.
pub fn pcm_direct(theta: f64, deltas: &[f64]) -> Vec<f64> {
    let mut partial = vec![0.0];
    for d in deltas {
        partial.push(partial.last().unwrap() + theta - d);
    }
    let top = partial.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = partial.iter().map(|s| (s - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Logistic cumulative model: `F(theta - delta_r) - F(theta - delta_{r+1})`.
pub fn cumulative_direct(theta: f64, deltas: &[f64]) -> Vec<f64> {
    let k = deltas.len();
    let exceed = |r: usize| match r {
        0 => 1.0,
        r if r > k => 0.0,
        r => logistic(theta - deltas[r - 1]),
    };
    (0..=k).map(|r| exceed(r) - exceed(r + 1)).collect()
}

/// Logistic sequential model: `(1 - F(eta_{r+1})) prod_{j<=r} F(eta_j)`.
pub fn sequential_direct(theta: f64, deltas: &[f64]) -> Vec<f64> {
    let k = deltas.len();
    (0..=k)
        .map(|r| {
            let reach: f64 = deltas[..r].iter().map(|d| logistic(theta - d)).product();
            let stop = if r < k { 1.0 - logistic(theta - deltas[r]) } else { 1.0 };
            reach * stop
        })
        .collect()
}
