//! Hyperplane selection by margin-based importance learning.
//!
//! Every learning vector is encoded against the full pool of `B̃` hyperplanes.
//! Each hyperplane carries an importance weight `ω_i` (initially 1) and the
//! distance between two codes is the weighted Hamming norm
//! `sqrt(Σ ω_i² [a_i ≠ b_i])`. For a sampled row `x` with nearest same-label
//! row `hit` and nearest different-label row `miss`, the weights move by
//!
//! ```text
//! δω_i = ½ ( [x_i ≠ miss_i] / d(x, miss) − [x_i ≠ hit_i] / d(x, hit) ) · ω_i
//! ```
//!
//! which grows hyperplanes that separate `x` from its miss and shrinks those
//! that separate it from its hit. After the configured number of updates the
//! `B` hyperplanes with largest `|ω_i|` are kept.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bits::BitCode;
use crate::dataset::Label;
use crate::error::{Error, Result};

/// Consecutive ineligible draws tolerated before training gives up.
pub const MAX_CONSECUTIVE_RESAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceWeights(Vec<f64>);

impl ImportanceWeights {
    pub fn ones(len: usize) -> Self {
        Self(vec![1.0; len])
    }

    pub fn from_vec(omega: Vec<f64>) -> Self {
        Self(omega)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn apply(&mut self, delta: &[f64]) {
        self.0.iter_mut().zip(delta).for_each(|(w, d)| *w += d);
    }

    fn squared(&self) -> Vec<f64> {
        self.0.iter().map(|w| w * w).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainConfig {
    /// Candidate pool size `B̃`.
    pub pool_size: usize,
    /// Bits kept after selection, `B`.
    pub target_bits: usize,
    /// Number of applied weight updates.
    pub iterations: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            pool_size: 10_000,
            target_bits: 1024,
            iterations: 10_000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_bits == 0 || self.target_bits > self.pool_size {
            return Err(Error::Validation(format!(
                "target bits {} must be in 1..={}",
                self.target_bits, self.pool_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    /// Pool indices by non-increasing `|ω|`, ties by ascending index.
    pub selected: Vec<usize>,
    pub omega: ImportanceWeights,
    pub iterations: usize,
    pub seed: u64,
}

fn check_lengths(a: &BitCode, b: &BitCode, omega_len: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::shape(a.len(), b.len()));
    }
    if omega_len != a.len() {
        return Err(Error::shape(a.len(), omega_len));
    }
    Ok(())
}

fn weighted_sq(a: &BitCode, b: &BitCode, omega_sq: &[f64]) -> f64 {
    let mut acc = 0.0;
    a.for_each_diff(b, |i| acc += omega_sq[i]);
    acc
}

/// `sqrt(Σ ω_i²)` over the positions where `a` and `b` differ.
pub fn weighted_hamming(a: &BitCode, b: &BitCode, omega: &ImportanceWeights) -> Result<f64> {
    check_lengths(a, b, omega.len())?;
    let mut acc = 0.0;
    a.for_each_diff(b, |i| acc += omega.0[i] * omega.0[i]);
    Ok(acc.sqrt())
}

/// Nearest same-label and nearest different-label rows of `x`, by weighted
/// distance. Returns `(row, squared distance)`; ties go to the lower row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbors {
    pub hit: Option<(usize, f64)>,
    pub miss: Option<(usize, f64)>,
}

fn closer(a: Option<(usize, f64)>, b: Option<(usize, f64)>) -> Option<(usize, f64)> {
    match (a, b) {
        (Some(x), Some(y)) => {
            if y.1 < x.1 || (y.1 == x.1 && y.0 < x.0) {
                Some(y)
            } else {
                Some(x)
            }
        }
        (x, None) => x,
        (None, y) => y,
    }
}

fn neighbors_sq(x: usize, codes: &[BitCode], labels: &[Label], omega_sq: &[f64]) -> Neighbors {
    let lx = labels[x];
    let identity = || Neighbors {
        hit: None,
        miss: None,
    };
    codes
        .par_iter()
        .enumerate()
        .filter(|&(j, _)| j != x)
        .fold(identity, |acc, (j, c)| {
            let cand = Some((j, weighted_sq(&codes[x], c, omega_sq)));
            if labels[j] == lx {
                Neighbors {
                    hit: closer(acc.hit, cand),
                    ..acc
                }
            } else {
                Neighbors {
                    miss: closer(acc.miss, cand),
                    ..acc
                }
            }
        })
        .reduce(identity, |a, b| Neighbors {
            hit: closer(a.hit, b.hit),
            miss: closer(a.miss, b.miss),
        })
}

fn check_set(x_index: usize, codes: &[BitCode], labels: &[Label], omega: &ImportanceWeights) -> Result<()> {
    if labels.len() != codes.len() {
        return Err(Error::shape(codes.len(), labels.len()));
    }
    if x_index >= codes.len() {
        return Err(Error::Validation(format!(
            "row {x_index} out of range for {} codes",
            codes.len()
        )));
    }
    if let Some(c) = codes.iter().find(|c| c.len() != omega.len()) {
        return Err(Error::shape(omega.len(), c.len()));
    }
    Ok(())
}

pub fn neighbors(
    x_index: usize,
    codes: &[BitCode],
    labels: &[Label],
    omega: &ImportanceWeights,
) -> Result<Neighbors> {
    check_set(x_index, codes, labels, omega)?;
    Ok(neighbors_sq(x_index, codes, labels, &omega.squared()))
}

/// Closest other row with the same label, or `None` if `x` is alone in its label.
pub fn nearhit(
    x_index: usize,
    codes: &[BitCode],
    labels: &[Label],
    omega: &ImportanceWeights,
) -> Result<Option<usize>> {
    Ok(neighbors(x_index, codes, labels, omega)?.hit.map(|h| h.0))
}

/// Closest row with a different label, or `None` if every row shares `x`'s label.
pub fn nearmiss(
    x_index: usize,
    codes: &[BitCode],
    labels: &[Label],
    omega: &ImportanceWeights,
) -> Result<Option<usize>> {
    Ok(neighbors(x_index, codes, labels, omega)?.miss.map(|m| m.0))
}

/// Half the gap between the miss distance and the hit distance.
pub fn margin_term(x: &BitCode, hit: &BitCode, miss: &BitCode, omega: &ImportanceWeights) -> Result<f64> {
    Ok(0.5 * (weighted_hamming(x, miss, omega)? - weighted_hamming(x, hit, omega)?))
}

/// Sum of margins over every row that has both a hit and a miss.
pub fn objective(codes: &[BitCode], labels: &[Label], omega: &ImportanceWeights) -> Result<f64> {
    if codes.is_empty() {
        return Err(Error::Degenerate("no rows".into()));
    }
    check_set(0, codes, labels, omega)?;
    let omega_sq = omega.squared();
    let margins: Vec<Option<f64>> = (0..codes.len())
        .map(|x| {
            let n = neighbors_sq(x, codes, labels, &omega_sq);
            match (n.hit, n.miss) {
                (Some(h), Some(m)) => Some(0.5 * (m.1.sqrt() - h.1.sqrt())),
                _ => None,
            }
        })
        .collect();
    if margins.iter().all(Option::is_none) {
        return Err(Error::Degenerate(
            "no row has both a same-label and a different-label neighbor".into(),
        ));
    }
    Ok(margins.into_iter().flatten().sum())
}

/// Per-hyperplane weight change for one sample. A zero hit or miss distance
/// drops that term.
pub fn importance_update(
    x: &BitCode,
    hit: &BitCode,
    miss: &BitCode,
    omega: &ImportanceWeights,
) -> Result<Vec<f64>> {
    check_lengths(x, hit, omega.len())?;
    check_lengths(x, miss, omega.len())?;
    let mut delta = vec![0.0; omega.len()];
    let d_miss = weighted_hamming(x, miss, omega)?;
    let d_hit = weighted_hamming(x, hit, omega)?;
    if d_miss > 0.0 {
        x.for_each_diff(miss, |i| delta[i] += 0.5 * omega.0[i] / d_miss);
    }
    if d_hit > 0.0 {
        x.for_each_diff(hit, |i| delta[i] -= 0.5 * omega.0[i] / d_hit);
    }
    Ok(delta)
}

/// Indices of the `b` largest `|ω|`, descending, ties by ascending index.
pub fn select_top(omega: &ImportanceWeights, b: usize) -> Result<Vec<usize>> {
    if b > omega.len() {
        return Err(Error::Validation(format!(
            "cannot select {b} of {} hyperplanes",
            omega.len()
        )));
    }
    let mut order: Vec<usize> = (0..omega.len()).collect();
    order.sort_by(|&i, &j| omega.0[j].abs().total_cmp(&omega.0[i].abs()));
    order.truncate(b);
    Ok(order)
}

/// Rows that have at least one same-label and one different-label partner.
fn eligible_rows(labels: &[Label]) -> Vec<bool> {
    let mut counts = std::collections::HashMap::new();
    for l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    labels
        .iter()
        .map(|l| counts[l] >= 2 && counts[l] < labels.len())
        .collect()
}

/// Stochastic importance learning over pre-encoded codes.
pub fn train(codes: &[BitCode], labels: &[Label], config: &TrainConfig) -> Result<TrainedModel> {
    config.validate()?;
    if codes.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            actual: codes.len(),
        });
    }
    if labels.len() != codes.len() {
        return Err(Error::shape(codes.len(), labels.len()));
    }
    if let Some(c) = codes.iter().find(|c| c.len() != config.pool_size) {
        return Err(Error::shape(config.pool_size, c.len()));
    }
    let eligible = eligible_rows(labels);
    if !eligible.iter().any(|&e| e) {
        return Err(Error::Degenerate(
            "no row has both a same-label and a different-label neighbor".into(),
        ));
    }

    let mut omega = ImportanceWeights::ones(config.pool_size);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut applied = 0;
    let mut misses = 0;
    while applied < config.iterations {
        let x = rng.random_range(0..codes.len());
        if !eligible[x] {
            misses += 1;
            if misses >= MAX_CONSECUTIVE_RESAMPLES {
                return Err(Error::Degenerate(format!(
                    "{MAX_CONSECUTIVE_RESAMPLES} consecutive samples without both neighbor kinds"
                )));
            }
            continue;
        }
        misses = 0;
        let n = neighbors_sq(x, codes, labels, &omega.squared());
        let (Some((hit, _)), Some((miss, _))) = (n.hit, n.miss) else {
            unreachable!("eligible row lacks a neighbor");
        };
        let delta = importance_update(&codes[x], &codes[hit], &codes[miss], &omega)?;
        omega.apply(&delta);
        applied += 1;
    }

    Ok(TrainedModel {
        selected: select_top(&omega, config.target_bits)?,
        omega,
        iterations: config.iterations,
        seed: config.seed,
    })
}
