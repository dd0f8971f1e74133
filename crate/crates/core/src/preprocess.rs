//! Standardization followed by PCA truncation at a cumulative contribution ratio.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Eigenvalues this close below zero are rounding noise and clamp to 0.
const EIGEN_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Population standard deviations; a zero entry marks a dead column.
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &LabeledDataset) -> Result<Self> {
        let n = data.n_rows();
        if n < 2 {
            return Err(Error::InsufficientData { needed: 2, actual: n });
        }
        let means = column_means(data);
        let mut vars = vec![0.0; data.n_dims()];
        for row in data.rows() {
            for ((v, x), m) in vars.iter_mut().zip(row).zip(&means) {
                *v += (x - m) * (x - m);
            }
        }
        let stds = vars.into_iter().map(|v| (v / n as f64).sqrt()).collect();
        Ok(Self { means, stds })
    }

    pub fn n_dims(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, data: &LabeledDataset) -> Result<LabeledDataset> {
        if data.n_dims() != self.n_dims() {
            return Err(Error::shape(self.n_dims(), data.n_dims()));
        }
        data.map_rows(self.n_dims(), |src, dst| self.apply_row(src, dst))
    }

    pub fn apply_row(&self, src: &[f64], dst: &mut [f64]) {
        for (((d, x), m), s) in dst.iter_mut().zip(src).zip(&self.means).zip(&self.stds) {
            *d = if *s > 0.0 { (x - m) / s } else { 0.0 };
        }
    }
}

fn column_means(data: &LabeledDataset) -> Vec<f64> {
    let mut means = vec![0.0; data.n_dims()];
    for row in data.rows() {
        for (m, x) in means.iter_mut().zip(row) {
            *m += x;
        }
    }
    let n = data.n_rows() as f64;
    means.iter_mut().for_each(|m| *m /= n);
    means
}

/// Population covariance matrix of the rows.
pub fn covariance(data: &LabeledDataset) -> Result<DMatrix<f64>> {
    let n = data.n_rows();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, actual: n });
    }
    let d = data.n_dims();
    let means = column_means(data);
    let centered = DMatrix::from_fn(n, d, |i, j| data.row(i)[j] - means[j]);
    Ok(centered.tr_mul(&centered) / n as f64)
}

/// All principal directions of `data`, eigenvalues non-increasing.
/// Returns `(eigenvalues, basis)` with basis rows as unit directions.
pub fn principal_directions(data: &LabeledDataset) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let eig = SymmetricEigen::new(covariance(data)?);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    // stable sort: equal eigenvalues keep decomposition order
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order
        .iter()
        .map(|&i| {
            let v = eig.eigenvalues[i];
            if v < 0.0 {
                debug_assert!(v > -EIGEN_CLAMP * eig.eigenvalues.amax().max(1.0));
                0.0
            } else {
                v
            }
        })
        .collect();
    let basis = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    Ok((values, basis))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    /// k rows of n_dims, orthonormal.
    pub basis: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// Cumulative eigenvalue mass retained by the k directions.
    pub contribution_ratio: f64,
    pub n_dims: usize,
}

impl PcaProjection {
    /// Keeps the fewest leading directions whose cumulative eigenvalue mass
    /// strictly exceeds `ratio` of the total. With `ratio == 1` all
    /// directions of nonzero variance are kept.
    pub fn fit(data: &LabeledDataset, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::Validation(format!("PCA ratio must be in (0, 1], got {ratio}")));
        }
        let (values, basis) = principal_directions(data)?;
        let total: f64 = values.iter().sum();
        if total <= 0.0 {
            return Err(Error::Degenerate("covariance has zero trace".into()));
        }
        let rank = values.iter().filter(|&&v| v > EIGEN_CLAMP * values[0]).count();
        let k = if ratio >= 1.0 {
            rank
        } else {
            let mut cum = 0.0;
            values
                .iter()
                .position(|v| {
                    cum += v;
                    cum > ratio * total
                })
                .map_or(rank, |p| p + 1)
        };
        let contribution_ratio = (values[..k].iter().sum::<f64>() / total).min(1.0);
        Ok(Self {
            basis: basis.into_iter().take(k).collect(),
            eigenvalues: values.into_iter().take(k).collect(),
            contribution_ratio,
            n_dims: data.n_dims(),
        })
    }

    pub fn k(&self) -> usize {
        self.basis.len()
    }

    pub fn project(&self, data: &LabeledDataset) -> Result<LabeledDataset> {
        if data.n_dims() != self.n_dims {
            return Err(Error::shape(self.n_dims, data.n_dims()));
        }
        data.map_rows(self.k(), |src, dst| self.project_row(src, dst))
    }

    pub fn project_row(&self, src: &[f64], dst: &mut [f64]) {
        for (d, dir) in dst.iter_mut().zip(&self.basis) {
            *d = dir.iter().zip(src).map(|(a, b)| a * b).sum();
        }
    }
}

/// Standardizer and PCA projection fitted on the learning data and replayed
/// unchanged on test and query data.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessor {
    pub standardizer: Standardizer,
    pub pca: PcaProjection,
}

impl Preprocessor {
    pub fn fit(data: &LabeledDataset, ratio: f64) -> Result<Self> {
        let standardizer = Standardizer::fit(data)?;
        let pca = PcaProjection::fit(&standardizer.apply(data)?, ratio)?;
        Ok(Self { standardizer, pca })
    }

    pub fn input_dims(&self) -> usize {
        self.standardizer.n_dims()
    }

    pub fn output_dims(&self) -> usize {
        self.pca.k()
    }

    pub fn apply(&self, data: &LabeledDataset) -> Result<LabeledDataset> {
        self.pca.project(&self.standardizer.apply(data)?)
    }
}
