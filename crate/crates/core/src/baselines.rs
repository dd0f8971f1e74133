//! Unlearned comparison schemes: plain random hyperplanes and PCA hashing.

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::hashing::HyperplanePool;
use crate::model::{HashModel, Scheme};
use crate::preprocess::principal_directions;
use crate::trainer::ImportanceWeights;

/// `bits` random hyperplanes, all selected in pool order with unit importance.
pub fn lsh_model(n_dims: usize, bits: usize, seed: u64) -> Result<HashModel> {
    let pool = HyperplanePool::generate(n_dims, bits, seed)?;
    Ok(HashModel {
        scheme: Scheme::Lsh,
        preprocess: None,
        omega: ImportanceWeights::ones(bits),
        selected: (0..bits).collect(),
        iterations: 0,
        train_seed: seed,
        pool,
    })
}

/// Hyperplane normals are the leading `bits` principal directions of `data`.
/// Thresholds stay at zero, so `data` is expected to be centered.
pub fn pcah_model(data: &LabeledDataset, bits: usize) -> Result<HashModel> {
    if bits == 0 {
        return Err(Error::Validation("bits must be at least 1".into()));
    }
    if bits > data.n_dims() {
        return Err(Error::Capability(format!(
            "PCA hashing cannot produce {bits} bits from {}-dimensional data: \
             at most one bit per dimension",
            data.n_dims()
        )));
    }
    let (_, basis) = principal_directions(data)?;
    let normals: Vec<f64> = basis.into_iter().take(bits).flatten().collect();
    let pool = HyperplanePool::from_normals(normals, data.n_dims(), 0)?;
    Ok(HashModel {
        scheme: Scheme::Pcah,
        preprocess: None,
        omega: ImportanceWeights::ones(bits),
        selected: (0..bits).collect(),
        iterations: 0,
        train_seed: 0,
        pool,
    })
}
