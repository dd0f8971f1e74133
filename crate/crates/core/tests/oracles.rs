//! Library operations checked against exhaustive reference computations.

mod common;

use common::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use slsh_core::dataset::{gen_synthetic, split, Label, LabeledDataset};
use slsh_core::eval::{curve, error_rate, evaluate_model, precision_recall, retrieve_count_for, search};
use slsh_core::hashing::HyperplanePool;
use slsh_core::model::{fit, PipelineConfig, Scheme};
use slsh_core::BitCode;
use slsh_core::trainer::{nearhit, nearmiss, objective, train, ImportanceWeights, TrainConfig};

#[test]
fn nearhit_nearmiss_match_exhaustive_scan() {
    let mut r = rng(50);
    for trial in 0..10 {
        let n = if trial == 0 { 50 } else { r.random_range(2..=200) };
        let bits = r.random_range(1..150);
        let rows = random_bits(&mut r, n, bits);
        let labels: Vec<Label> = (0..n).map(|_| r.random_range(0..5)).collect();
        // coarse weights so ties actually happen
        let omega: Vec<f64> = (0..bits).map(|_| r.random_range(-2..=2) as f64).collect();
        let codes = pack(&rows);
        let w = ImportanceWeights::from_vec(omega.clone());
        for x in 0..n {
            assert_eq!(nearhit(x, &codes, &labels, &w).unwrap(), nearest(x, &rows, &labels, &omega, true));
            assert_eq!(nearmiss(x, &codes, &labels, &w).unwrap(), nearest(x, &rows, &labels, &omega, false));
        }
    }
}

#[test]
fn search_matches_sort_oracle() {
    let mut r = rng(51);
    for bits in [7, 64, 100, 300] {
        let db = random_bits(&mut r, 100, bits);
        let q = random_bits(&mut r, 1, bits).remove(0);
        let codes = pack(&db);
        let qc = pack(std::slice::from_ref(&q)).remove(0);
        for k in [1, 10, 100] {
            let got = search(&qc, &codes, k).unwrap();
            let want = ranking(&q, &db, k);
            assert_eq!(got.ranked_indices, want.iter().map(|w| w.0).collect::<Vec<_>>());
            assert_eq!(got.distances, want.iter().map(|w| w.1).collect::<Vec<_>>());
        }
    }
}

#[test]
fn search_exact_on_ten_thousand_codes() {
    let mut r = rng(52);
    let db = random_bits(&mut r, 10_000, 40);
    let q = random_bits(&mut r, 1, 40).remove(0);
    let got = search(&pack(std::slice::from_ref(&q)).remove(0), &pack(&db), 250).unwrap();
    let want = ranking(&q, &db, 250);
    assert_eq!(got.ranked_indices, want.iter().map(|w| w.0).collect::<Vec<_>>());
}

#[test]
fn error_rate_matches_membership_oracle() {
    let mut r = rng(53);
    let db = random_bits(&mut r, 300, 24);
    let queries = random_bits(&mut r, 200, 24);
    let db_labels: Vec<Label> = (0..300).map(|_| r.random_range(0..40)).collect();
    let q_labels: Vec<Label> = (0..200).map(|_| r.random_range(0..45)).collect();
    for acq in [0.003, 0.01, 0.05] {
        let k = retrieve_count_for(acq, 300).unwrap();
        let got = error_rate(&pack(&queries), &q_labels, &pack(&db), &db_labels, acq).unwrap();
        let want = error_count(&queries, &q_labels, &db, &db_labels, k);
        assert_eq!(got.errors, want);
        assert_eq!(got.rate, want as f64 / 200.0);
        let absent = q_labels.iter().filter(|l| !db_labels.contains(l)).count();
        assert_eq!(got.absent_label, absent);
    }
}

#[test]
fn error_implies_no_recall() {
    let mut r = rng(54);
    let db = pack(&random_bits(&mut r, 80, 16));
    let queries = pack(&random_bits(&mut r, 40, 16));
    let db_labels: Vec<Label> = (0..80).map(|_| r.random_range(0..8)).collect();
    let q_labels: Vec<Label> = (0..40).map(|_| r.random_range(0..8)).collect();
    let k = retrieve_count_for(0.05, 80).unwrap();
    let mut errors = 0;
    for (q, &l) in queries.iter().zip(&q_labels) {
        let pr = precision_recall(&search(q, &db, k).unwrap(), l, &db_labels);
        if pr.recall == 0.0 {
            errors += 1;
        }
    }
    let e = error_rate(&queries, &q_labels, &db, &db_labels, 0.05).unwrap();
    assert_eq!(e.errors, errors);
}

#[test]
fn full_retrieval_precision_is_label_prevalence() {
    let data = gen_synthetic(5, 30, 6, 0.4, 3).unwrap();
    let s = split(&data, [0.4, 0.3, 0.3], 3).unwrap();
    let (m, _) = fit(&s.learning, &PipelineConfig { scheme: Scheme::Lsh, bits: 64, seed: 1, ..Default::default() }).unwrap();
    let report = evaluate_model(&m, 64, &s.test, &s.query, 1.0).unwrap();
    let db = s.test.labels();
    let want: f64 = s
        .query
        .labels()
        .iter()
        .map(|l| db.iter().filter(|d| *d == l).count() as f64 / db.len() as f64)
        .sum::<f64>()
        / s.query.n_rows() as f64;
    assert!((report.precision - want).abs() < 1e-12);
}

#[test]
fn curve_cell_matches_standalone_evaluation() {
    let data = gen_synthetic(6, 40, 12, 0.3, 8).unwrap();
    let s = split(&data, [0.5, 0.25, 0.25], 8).unwrap();
    let cfg = PipelineConfig { pool_size: 256, bits: 128, iterations: 300, seed: 4, ..Default::default() };
    let (slsh, _) = fit(&s.learning, &cfg).unwrap();
    let (lsh, _) = fit(&s.learning, &PipelineConfig { scheme: Scheme::Lsh, ..cfg }).unwrap();
    let widths = [32, 64, 128, 256];
    let cells = curve(&[("slsh".into(), &slsh), ("lsh".into(), &lsh)], &widths, &s, 0.1).unwrap();
    assert_eq!(cells.len(), 8);
    for c in &cells {
        let model = if c.scheme == "slsh" { &slsh } else { &lsh };
        if c.bits > 128 {
            assert!(matches!(c.result, Err(slsh_core::Error::Capability(_))));
            continue;
        }
        let alone = evaluate_model(model, c.bits, &s.test, &s.query, 0.1).unwrap();
        assert_eq!(c.result.as_ref().unwrap(), &alone);
    }
    let single = curve(&[("slsh".into(), &slsh)], &[64], &s, 0.1).unwrap();
    assert_eq!(single.len(), 1);
}

/// Two clusters in 5-D and a pool of random hyperplanes through the origin.
fn two_cluster_setup(seed: u64) -> (LabeledDataset, HyperplanePool) {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, 0.7).unwrap();
    let centers = [[2.5, 0.0, 0.0, 0.0, 0.0], [0.0, 2.5, 0.0, 0.0, 0.0]];
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (l, c) in centers.iter().enumerate() {
        for _ in 0..60 {
            values.extend(c.iter().map(|v| v + noise.sample(&mut r)));
            labels.push(l as Label);
        }
    }
    let data = LabeledDataset::new(values, 5, labels).unwrap();
    (data, HyperplanePool::generate(5, 64, seed ^ 0xabc).unwrap())
}

#[test]
fn separating_hyperplanes_gain_importance() {
    let (data, pool) = two_cluster_setup(21);
    let codes = pool.encode_batch(&data).unwrap();
    let cfg = TrainConfig { pool_size: 64, target_bits: 16, iterations: 1000, seed: 2 };
    let model = train(&codes, data.labels(), &cfg).unwrap();

    // classify each hyperplane by counting cluster members on its positive side
    let (mut sep, mut split_inside) = (Vec::new(), Vec::new());
    for h in 0..64 {
        let frac = |label: Label| {
            let members: Vec<&BitCode> = codes.iter().zip(data.labels()).filter(|(_, l)| **l == label).map(|(c, _)| c).collect();
            members.iter().filter(|c| c.get(h)).count() as f64 / members.len() as f64
        };
        let (a, b) = (frac(0), frac(1));
        let w = model.omega.as_slice()[h].abs();
        if (a > 0.95 && b < 0.05) || (a < 0.05 && b > 0.95) {
            sep.push(w);
        } else if (0.2..=0.8).contains(&a) || (0.2..=0.8).contains(&b) {
            split_inside.push(w);
        }
    }
    assert!(!sep.is_empty() && !split_inside.is_empty(), "{} {}", sep.len(), split_inside.len());
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&sep) > mean(&split_inside), "{} vs {}", mean(&sep), mean(&split_inside));
}

#[test]
fn objective_rises_on_two_clusters() {
    let mut rises = 0;
    for seed in 0..10 {
        let (data, pool) = two_cluster_setup(100 + seed);
        let codes = pool.encode_batch(&data).unwrap();
        let cfg = TrainConfig { pool_size: 64, target_bits: 16, iterations: 1000, seed };
        let model = train(&codes, data.labels(), &cfg).unwrap();
        let before = objective(&codes, data.labels(), &ImportanceWeights::ones(64)).unwrap();
        let after = objective(&codes, data.labels(), &model.omega).unwrap();
        rises += usize::from(after >= before);
    }
    assert!(rises >= 8, "{rises}/10");
}

#[test]
fn objective_positive_for_separated_codes() {
    // cluster codes agree internally and differ across clusters in many bits
    let mut r = rng(60);
    let base = random_bits(&mut r, 2, 64);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (l, b) in base.iter().enumerate() {
        for _ in 0..5 {
            let mut row = b.clone();
            let flip = r.random_range(0..64);
            row[flip] = !row[flip];
            rows.push(row);
            labels.push(l as Label);
        }
    }
    let e = objective(&pack(&rows), &labels, &ImportanceWeights::ones(64)).unwrap();
    let brute: f64 = (0..rows.len())
        .map(|x| {
            let h = nearest(x, &rows, &labels, &[1.0; 64], true).unwrap();
            let m = nearest(x, &rows, &labels, &[1.0; 64], false).unwrap();
            0.5 * (weighted_distance(&rows[x], &rows[m], &[1.0; 64]) - weighted_distance(&rows[x], &rows[h], &[1.0; 64]))
        })
        .sum();
    assert!((e - brute).abs() < 1e-9);
    assert!(e > 0.0);
}

#[test]
fn train_is_deterministic() {
    let (data, pool) = two_cluster_setup(5);
    let codes = pool.encode_batch(&data).unwrap();
    let cfg = TrainConfig { pool_size: 64, target_bits: 10, iterations: 200, seed: 77 };
    assert_eq!(train(&codes, data.labels(), &cfg).unwrap(), train(&codes, data.labels(), &cfg).unwrap());
}
