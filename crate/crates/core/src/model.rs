//! A deployable hash function: stored preprocessing, hyperplane pool and
//! ranked selection, plus the end-to-end fitting pipelines.

use std::fmt;
use std::str::FromStr;

use crate::baselines::{lsh_model, pcah_model};
use crate::bits::BitCode;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::hashing::HyperplanePool;
use crate::preprocess::Preprocessor;
use crate::trainer::{objective, train, ImportanceWeights, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Slsh,
    Lsh,
    Pcah,
}

impl Scheme {
    pub fn tag(self) -> &'static str {
        match self {
            Scheme::Slsh => "slsh",
            Scheme::Lsh => "lsh",
            Scheme::Pcah => "pcah",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Scheme::Slsh => 0,
            Scheme::Lsh => 1,
            Scheme::Pcah => 2,
        }
    }

    pub(crate) fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Scheme::Slsh),
            1 => Ok(Scheme::Lsh),
            2 => Ok(Scheme::Pcah),
            other => Err(Error::Format(format!("unknown scheme code {other}"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slsh" => Ok(Scheme::Slsh),
            "lsh" => Ok(Scheme::Lsh),
            "pcah" => Ok(Scheme::Pcah),
            other => Err(Error::Validation(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HashModel {
    pub scheme: Scheme,
    /// Replayed on every input before encoding. `None` means raw vectors.
    pub preprocess: Option<Preprocessor>,
    pub pool: HyperplanePool,
    pub omega: ImportanceWeights,
    /// Pool indices in rank order; a `b`-bit code uses the first `b`.
    pub selected: Vec<usize>,
    pub iterations: usize,
    pub train_seed: u64,
}

impl HashModel {
    /// Largest code width this model can produce.
    pub fn capacity(&self) -> usize {
        self.selected.len()
    }

    pub fn input_dims(&self) -> usize {
        self.preprocess
            .as_ref()
            .map_or(self.pool.n_dims(), Preprocessor::input_dims)
    }

    /// Pool of the top `bits` selected hyperplanes (all of them for `None`).
    pub fn encoder(&self, bits: Option<usize>) -> Result<HyperplanePool> {
        let bits = bits.unwrap_or(self.capacity());
        if bits == 0 || bits > self.capacity() {
            return Err(Error::Capability(format!(
                "{} model provides 1..={} bits, requested {bits}",
                self.scheme,
                self.capacity()
            )));
        }
        self.pool.restrict(&self.selected[..bits])
    }

    pub fn transform(&self, data: &LabeledDataset) -> Result<LabeledDataset> {
        match &self.preprocess {
            Some(p) => p.apply(data),
            None => Ok(data.clone()),
        }
    }

    pub fn encode(&self, data: &LabeledDataset, bits: Option<usize>) -> Result<Vec<BitCode>> {
        let encoder = self.encoder(bits)?;
        encoder.encode_batch(&self.transform(data)?)
    }

    pub fn encode_vector(&self, x: &[f64], bits: Option<usize>) -> Result<BitCode> {
        let row = LabeledDataset::new(x.to_vec(), x.len(), vec![0])?;
        Ok(self.encode(&row, bits)?.remove(0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub scheme: Scheme,
    pub pca_ratio: f64,
    pub pool_size: usize,
    pub bits: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            scheme: Scheme::Slsh,
            pca_ratio: 0.8,
            pool_size: t.pool_size,
            bits: t.target_bits,
            iterations: t.iterations,
            seed: t.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSummary {
    pub input_dims: usize,
    pub pca_dims: usize,
    pub contribution_ratio: f64,
    /// Margin objective over the full pool before and after training.
    pub objective: Option<(f64, f64)>,
}

/// Standardize, project, then build the configured scheme on the learning data.
pub fn fit(learning: &LabeledDataset, cfg: &PipelineConfig) -> Result<(HashModel, FitSummary)> {
    let pre = Preprocessor::fit(learning, cfg.pca_ratio)?;
    let projected = pre.apply(learning)?;
    let mut objective_pair = None;
    let mut model = match cfg.scheme {
        Scheme::Lsh => lsh_model(projected.n_dims(), cfg.bits, cfg.seed)?,
        Scheme::Pcah => pcah_model(&projected, cfg.bits)?,
        Scheme::Slsh => {
            let train_cfg = TrainConfig {
                pool_size: cfg.pool_size,
                target_bits: cfg.bits,
                iterations: cfg.iterations,
                seed: cfg.seed,
            };
            train_cfg.validate()?;
            let pool = HyperplanePool::generate(projected.n_dims(), cfg.pool_size, cfg.seed)?;
            let codes = pool.encode_batch(&projected)?;
            let trained = train(&codes, projected.labels(), &train_cfg)?;
            let before = objective(&codes, projected.labels(), &ImportanceWeights::ones(cfg.pool_size))?;
            let after = objective(&codes, projected.labels(), &trained.omega)?;
            objective_pair = Some((before, after));
            HashModel {
                scheme: Scheme::Slsh,
                preprocess: None,
                pool,
                omega: trained.omega,
                selected: trained.selected,
                iterations: trained.iterations,
                train_seed: trained.seed,
            }
        }
    };
    let summary = FitSummary {
        input_dims: pre.input_dims(),
        pca_dims: pre.output_dims(),
        contribution_ratio: pre.pca.contribution_ratio,
        objective: objective_pair,
    };
    model.preprocess = Some(pre);
    Ok((model, summary))
}
