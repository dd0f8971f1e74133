//! Learned binary hash codes for high-dimensional vectors.
//!
//! A large pool of random hyperplanes is generated, every training vector is
//! encoded against the whole pool, and a per-hyperplane importance weight is
//! learned by stochastic ascent on a nearest-hit / nearest-miss margin. The
//! hyperplanes with the largest absolute importance form the final code.
//!
//! The crate also carries the surrounding pipeline: standardization and PCA
//! preprocessing, random-projection and PCA hashing baselines, popcount
//! Hamming search, retrieval metrics, and a self-describing model file.

pub mod baselines;
pub mod bits;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod hashing;
pub mod model;
pub mod persist;
pub mod preprocess;
pub mod trainer;

pub use bits::BitCode;
pub use dataset::{DataSplit, LabeledDataset};
pub use error::{Error, Result};
pub use eval::{MetricReport, SearchResult};
pub use hashing::HyperplanePool;
pub use model::{HashModel, Scheme};
pub use preprocess::{PcaProjection, Preprocessor, Standardizer};
pub use trainer::{ImportanceWeights, TrainConfig, TrainedModel};
