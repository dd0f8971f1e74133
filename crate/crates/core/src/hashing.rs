//! Random hyperplane pools and sign-of-projection encoding.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::bits::{words_for, BitCode};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Hyperplanes through the origin, stored as a row-major matrix of normals.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperplanePool {
    normals: Vec<f64>,
    n_dims: usize,
    /// Generator seed, kept for provenance. Not meaningful for pools built
    /// from explicit normals.
    pub seed: u64,
}

impl HyperplanePool {
    /// i.i.d. standard Gaussian normals from a seeded ChaCha8 stream.
    pub fn generate(n_dims: usize, pool_size: usize, seed: u64) -> Result<Self> {
        if n_dims == 0 || pool_size == 0 {
            return Err(Error::Validation("pool dimensions must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normals: Vec<f64> = Vec::with_capacity(pool_size * n_dims);
        while normals.len() < pool_size * n_dims {
            let row: Vec<f64> = (0..n_dims).map(|_| StandardNormal.sample(&mut rng)).collect();
            // an all-zero row has probability zero; redraw rather than keep it
            if row.iter().any(|&v| v != 0.0) {
                normals.extend(row);
            }
        }
        Ok(Self {
            normals,
            n_dims,
            seed,
        })
    }

    pub fn from_normals(normals: Vec<f64>, n_dims: usize, seed: u64) -> Result<Self> {
        if n_dims == 0 || normals.is_empty() || !normals.len().is_multiple_of(n_dims) {
            return Err(Error::Validation(format!(
                "{} normal entries do not form rows of {n_dims}",
                normals.len()
            )));
        }
        if normals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite hyperplane normal".into()));
        }
        if let Some(r) = normals.chunks_exact(n_dims).position(|r| r.iter().all(|&v| v == 0.0)) {
            return Err(Error::Validation(format!("hyperplane {r} has a zero normal")));
        }
        Ok(Self {
            normals,
            n_dims,
            seed,
        })
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn pool_size(&self) -> usize {
        self.normals.len() / self.n_dims
    }

    pub fn normal(&self, i: usize) -> &[f64] {
        &self.normals[i * self.n_dims..(i + 1) * self.n_dims]
    }

    pub fn normals(&self) -> &[f64] {
        &self.normals
    }

    /// Bit `i` is 1 iff `normal_i · x > 0`; a zero product gives 0.
    pub fn encode(&self, x: &[f64]) -> Result<BitCode> {
        if x.len() != self.n_dims {
            return Err(Error::shape(self.n_dims, x.len()));
        }
        let len = self.pool_size();
        let mut words = vec![0u64; words_for(len)];
        for (i, w) in self.normals.chunks_exact(self.n_dims).enumerate() {
            let dot: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
            if dot > 0.0 {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        BitCode::from_words(words, len)
    }

    /// Encodes rows in order. Rows are independent and are processed in parallel.
    pub fn encode_rows<'a, I>(&self, rows: I) -> Result<Vec<BitCode>>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        rows.par_iter().map(|r| self.encode(r)).collect()
    }

    pub fn encode_batch(&self, data: &LabeledDataset) -> Result<Vec<BitCode>> {
        self.encode_rows(data.rows())
    }

    /// Pool made of the rows at `indices`, in that order.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.pool_size()];
        let mut normals = Vec::with_capacity(indices.len() * self.n_dims);
        for &i in indices {
            if i >= self.pool_size() {
                return Err(Error::Validation(format!(
                    "hyperplane index {i} out of range for pool of {}",
                    self.pool_size()
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Validation(format!("duplicate hyperplane index {i}")));
            }
            normals.extend_from_slice(self.normal(i));
        }
        Self::from_normals(normals, self.n_dims, self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn generate_is_deterministic_and_sized() {
        let a = HyperplanePool::generate(20, 10_000, 7).unwrap();
        assert_eq!((a.pool_size(), a.n_dims()), (10_000, 20));
        assert_eq!(a, HyperplanePool::generate(20, 10_000, 7).unwrap());
        assert_ne!(a, HyperplanePool::generate(20, 10_000, 8).unwrap());
        assert!(HyperplanePool::generate(0, 3, 1).is_err());
    }

    #[test]
    fn first_component_sign_is_balanced() {
        let p = HyperplanePool::generate(2, 100_000, 7).unwrap();
        let pos = (0..p.pool_size()).filter(|&i| p.normal(i)[0] > 0.0).count();
        let frac = pos as f64 / p.pool_size() as f64;
        assert!((frac - 0.5).abs() <= 0.01, "{frac}");
    }

    #[test]
    fn identity_pool_encodes_signs() {
        let p = HyperplanePool::from_normals(vec![1.0, 0.0, 0.0, 1.0], 2, 0).unwrap();
        assert_eq!(p.encode(&[3.0, -1.0]).unwrap().to_string(), "10");
        assert_eq!(p.encode(&[0.0, 0.0]).unwrap().to_string(), "00");
        assert!(matches!(p.encode(&[1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn zero_normal_rejected() {
        assert!(HyperplanePool::from_normals(vec![1.0, 0.0, 0.0, 0.0], 2, 0).is_err());
    }

    #[test]
    fn batch_matches_single_and_handles_empty() {
        let p = HyperplanePool::generate(5, 10_000, 3).unwrap();
        let d = crate::dataset::gen_synthetic(4, 250, 5, 0.5, 2).unwrap();
        let codes = p.encode_batch(&d).unwrap();
        assert_eq!(codes.len(), 1000);
        assert!(codes.iter().all(|c| c.len() == 10_000));
        for i in [0, 17, 999] {
            assert_eq!(codes[i], p.encode(d.row(i)).unwrap());
        }
        assert!(p.encode_rows(std::iter::empty()).unwrap().is_empty());
    }

    #[test]
    fn restrict_orders_and_validates() {
        let p = HyperplanePool::generate(4, 3, 1).unwrap();
        assert_eq!(p.restrict(&[0, 1, 2]).unwrap(), p);
        let r = p.restrict(&[2, 0]).unwrap();
        assert_eq!(r.normal(0), p.normal(2));
        assert_eq!(r.normal(1), p.normal(0));
        assert!(p.restrict(&[3]).is_err());
        assert!(p.restrict(&[1, 1]).is_err());
    }

    #[test]
    fn angle_tracks_normalized_hamming() {
        let p = HyperplanePool::generate(20, 1024, 99).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut unit = || {
            let v: Vec<f64> = (0..20).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect::<Vec<_>>()
        };
        let mut err = 0.0;
        for _ in 0..100 {
            let (u, v) = (unit(), unit());
            let cos: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            let angle = cos.clamp(-1.0, 1.0).acos();
            let h = p.encode(&u).unwrap().hamming(&p.encode(&v).unwrap()).unwrap();
            err += (h as f64 / 1024.0 - angle / std::f64::consts::PI).abs();
        }
        assert!(err / 100.0 < 0.05);
    }

    proptest! {
        #[test]
        fn positive_scaling_invariant(seed in any::<u64>(), scale in 1e-3f64..1e3) {
            let p = HyperplanePool::generate(6, 130, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sx: Vec<f64> = x.iter().map(|v| v * scale).collect();
            prop_assert_eq!(p.encode(&x).unwrap(), p.encode(&sx).unwrap());
        }

        #[test]
        fn restrict_commutes_with_bit_selection(seed in any::<u64>(), picks in prop::collection::vec(0usize..150, 1..40)) {
            let p = HyperplanePool::generate(7, 150, seed).unwrap();
            let mut idx = Vec::new();
            for i in picks { if !idx.contains(&i) { idx.push(i); } }
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
            let x: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
            let full = p.encode(&x).unwrap();
            prop_assert_eq!(p.restrict(&idx).unwrap().encode(&x).unwrap(), full.select(&idx));
        }
    }
}
