//! Brute-force reference implementations shared by the integration tests.
//! These deliberately avoid the library's packed-word paths.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slsh_core::dataset::Label;
use slsh_core::BitCode;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_bits(rng: &mut ChaCha8Rng, n: usize, bits: usize) -> Vec<Vec<bool>> {
    (0..n).map(|_| (0..bits).map(|_| rng.random_bool(0.5)).collect()).collect()
}

pub fn pack(rows: &[Vec<bool>]) -> Vec<BitCode> {
    rows.iter().map(|r| BitCode::from_bools(r.iter().copied())).collect()
}

pub fn weighted_distance(a: &[bool], b: &[bool], omega: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        if a[i] != b[i] {
            acc += omega[i] * omega[i];
        }
    }
    acc.sqrt()
}

/// Exhaustive scan: closest row other than `x` whose label equality with
/// `x` matches `same`; earliest index on ties.
pub fn nearest(x: usize, rows: &[Vec<bool>], labels: &[Label], omega: &[f64], same: bool) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for j in 0..rows.len() {
        if j == x || (labels[j] == labels[x]) != same {
            continue;
        }
        let d = weighted_distance(&rows[x], &rows[j], omega);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, j));
        }
    }
    best.map(|b| b.1)
}

pub fn hamming(a: &[bool], b: &[bool]) -> u32 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u32
}

/// Full ranking by (distance, index), truncated to `k`.
pub fn ranking(q: &[bool], db: &[Vec<bool>], k: usize) -> Vec<(usize, u32)> {
    let mut all: Vec<(usize, u32)> = db.iter().enumerate().map(|(i, r)| (i, hamming(q, r))).collect();
    all.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Counts queries with no same-label row among their `k` nearest.
pub fn error_count(queries: &[Vec<bool>], q_labels: &[Label], db: &[Vec<bool>], db_labels: &[Label], k: usize) -> usize {
    queries
        .iter()
        .zip(q_labels)
        .filter(|(q, l)| !ranking(q, db, k).iter().any(|(i, _)| db_labels[*i] == **l))
        .count()
}
