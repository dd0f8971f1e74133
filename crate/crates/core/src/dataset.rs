//! Labeled feature matrices, file ingestion and the synthetic cluster generator.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian, WriteBytesExt};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub type Label = i64;

/// Row-major matrix of finite reals with one integer label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    values: Vec<f64>,
    n_dims: usize,
    labels: Vec<Label>,
}

impl LabeledDataset {
    pub fn new(values: Vec<f64>, n_dims: usize, labels: Vec<Label>) -> Result<Self> {
        if n_dims == 0 {
            return Err(Error::Validation("dataset needs at least one dimension".into()));
        }
        if labels.is_empty() {
            return Err(Error::Validation("dataset needs at least one row".into()));
        }
        if values.len() != labels.len() * n_dims {
            return Err(Error::shape(labels.len() * n_dims, values.len()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value at row {}, column {}",
                pos / n_dims,
                pos % n_dims
            )));
        }
        Ok(Self {
            values,
            n_dims,
            labels,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<Label>) -> Result<Self> {
        let n_dims = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_dims) {
            return Err(Error::shape(n_dims, bad.len()));
        }
        Self::new(rows.concat(), n_dims, labels)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_dims..(i + 1) * self.n_dims]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.n_dims)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[j])
    }

    /// Copies the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.n_dims);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n_rows() {
                return Err(Error::Validation(format!(
                    "row index {i} out of range for {} rows",
                    self.n_rows()
                )));
            }
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self::new(values, self.n_dims, labels)
    }

    /// Replaces every row by `f(row)`, which must return `out_dims` values.
    pub(crate) fn map_rows<F>(&self, out_dims: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let mut values = vec![0.0; self.n_rows() * out_dims];
        for (src, dst) in self.rows().zip(values.chunks_exact_mut(out_dims)) {
            f(src, dst);
        }
        Self::new(values, out_dims, self.labels.clone())
    }
}

/// Reads a headerless (or `has_header`) comma-separated file; `label_column`
/// is parsed as an integer label and every other column as a feature.
pub fn load_csv(path: &Path, label_column: usize, has_header: bool) -> Result<LabeledDataset> {
    let text = fs::read_to_string(path)?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut n_cols: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if has_header && idx == 0 {
            continue;
        }
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match n_cols {
            None => {
                if fields.len() < 2 {
                    return Err(parse_err(line_no, "need a label and at least one feature".into()));
                }
                if label_column >= fields.len() {
                    return Err(parse_err(
                        line_no,
                        format!("label column {label_column} but only {} columns", fields.len()),
                    ));
                }
                n_cols = Some(fields.len());
            }
            Some(n) if n != fields.len() => {
                return Err(parse_err(
                    line_no,
                    format!("expected {n} columns, found {}", fields.len()),
                ));
            }
            Some(_) => {}
        }
        for (col, field) in fields.iter().enumerate() {
            if col == label_column {
                let label = field
                    .parse::<Label>()
                    .map_err(|_| parse_err(line_no, format!("invalid label {field:?}")))?;
                labels.push(label);
            } else {
                let v = field.parse::<f64>().map_err(|_| {
                    parse_err(line_no, format!("invalid number {field:?} in column {col}"))
                })?;
                if !v.is_finite() {
                    return Err(Error::Validation(format!(
                        "{}:{line_no}: non-finite value in column {col}",
                        path.display()
                    )));
                }
                values.push(v);
            }
        }
    }
    let Some(n_cols) = n_cols else {
        return Err(Error::Validation(format!("{}: no data rows", path.display())));
    };
    LabeledDataset::new(values, n_cols - 1, labels)
}

/// Writes the dataset as CSV with the label placed at `label_column`.
pub fn save_csv(data: &LabeledDataset, path: &Path, label_column: usize) -> Result<()> {
    if label_column > data.n_dims() {
        return Err(Error::Validation(format!(
            "label column {label_column} beyond {} columns",
            data.n_dims() + 1
        )));
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    for (row, label) in data.rows().zip(data.labels()) {
        let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        fields.insert(label_column, label.to_string());
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads little-endian f32 row-major vectors plus a text file of one label per line.
pub fn load_raw(path: &Path, n_dims: usize, labels_path: &Path) -> Result<LabeledDataset> {
    if n_dims == 0 {
        return Err(Error::Validation("n_dims must be at least 1".into()));
    }
    let bytes = fs::read(path)?;
    let row_bytes = 4 * n_dims;
    if bytes.is_empty() || bytes.len() % row_bytes != 0 {
        return Err(Error::Validation(format!(
            "{}: {} bytes is not a positive multiple of {row_bytes} ({n_dims} f32 values)",
            path.display(),
            bytes.len()
        )));
    }
    let mut floats = vec![0f32; bytes.len() / 4];
    LittleEndian::read_f32_into(&bytes, &mut floats);
    let values: Vec<f64> = floats.into_iter().map(f64::from).collect();

    let text = fs::read_to_string(labels_path)?;
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        labels.push(line.parse::<Label>().map_err(|_| Error::Parse {
            path: labels_path.to_path_buf(),
            line: idx + 1,
            message: format!("invalid label {line:?}"),
        })?);
    }
    let n_rows = bytes.len() / row_bytes;
    if labels.len() != n_rows {
        return Err(Error::Validation(format!(
            "{} vectors but {} labels",
            n_rows,
            labels.len()
        )));
    }
    LabeledDataset::new(values, n_dims, labels)
}

/// Inverse of [`load_raw`]. Values are narrowed to f32.
pub fn save_raw(data: &LabeledDataset, path: &Path, labels_path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for &v in data.values() {
        out.write_f32::<LittleEndian>(v as f32)?;
    }
    out.flush()?;
    let mut lab = BufWriter::new(fs::File::create(labels_path)?);
    for l in data.labels() {
        writeln!(lab, "{l}")?;
    }
    lab.flush()?;
    Ok(())
}

/// Gaussian clusters around centers drawn uniformly from `[-1, 1]^n_dims`.
/// Rows are grouped by label, `per_label` rows each, labels `0..n_labels`.
pub fn gen_synthetic(
    n_labels: usize,
    per_label: usize,
    n_dims: usize,
    cluster_sigma: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if n_labels == 0 || per_label == 0 || n_dims == 0 {
        return Err(Error::Validation("synthetic counts must be at least 1".into()));
    }
    let noise = Normal::new(0.0, cluster_sigma)
        .ok()
        .filter(|_| cluster_sigma > 0.0 && cluster_sigma.is_finite())
        .ok_or_else(|| Error::Validation(format!("cluster sigma must be > 0, got {cluster_sigma}")))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<f64> = (0..n_labels * n_dims)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    let mut values = Vec::with_capacity(n_labels * per_label * n_dims);
    let mut labels = Vec::with_capacity(n_labels * per_label);
    for (label, center) in centers.chunks_exact(n_dims).enumerate() {
        for _ in 0..per_label {
            values.extend(center.iter().map(|c| c + noise.sample(&mut rng)));
            labels.push(label as Label);
        }
    }
    LabeledDataset::new(values, n_dims, labels)
}

/// Learning, test (database) and query sets drawn from disjoint rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSplit {
    pub learning: LabeledDataset,
    pub test: LabeledDataset,
    pub query: LabeledDataset,
    /// Source row indices of learning, test and query, in that order.
    pub source_rows: [Vec<usize>; 3],
}

impl DataSplit {
    pub fn is_disjoint(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.source_rows.iter().flatten().all(|&r| seen.insert(r))
    }
}

/// Shuffles rows with `seed` and partitions them by `fractions`
/// (learning, test, query). The query set takes the remainder.
pub fn split(data: &LabeledDataset, fractions: [f64; 3], seed: u64) -> Result<DataSplit> {
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(Error::Validation(format!("split fractions out of [0, 1]: {fractions:?}")));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!("split fractions sum to {total}, expected 1")));
    }
    let n = data.n_rows();
    let n_learn = (fractions[0] * n as f64).round() as usize;
    let n_test = ((fractions[1] * n as f64).round() as usize).min(n - n_learn.min(n));
    if n_learn == 0 || n_test == 0 || n_learn + n_test >= n {
        return Err(Error::Validation(format!(
            "split {fractions:?} of {n} rows leaves an empty part"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let learn_rows = order[..n_learn].to_vec();
    let test_rows = order[n_learn..n_learn + n_test].to_vec();
    let query_rows = order[n_learn + n_test..].to_vec();
    Ok(DataSplit {
        learning: data.select_rows(&learn_rows)?,
        test: data.select_rows(&test_rows)?,
        query: data.select_rows(&query_rows)?,
        source_rows: [learn_rows, test_rows, query_rows],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(dir: &tempfile::TempDir, name: &str, bytes: &[u8]) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::File::create(&p).unwrap().write_all(bytes).unwrap();
        p
    }

    #[test]
    fn csv_three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "d.csv", b"1.0,2.0,7\n0.0,0.0,7\n5.0,5.0,9\n");
        let d = load_csv(&p, 2, false).unwrap();
        assert_eq!(d.n_rows(), 3);
        assert_eq!(d.n_dims(), 2);
        assert_eq!(d.labels(), &[7, 7, 9]);
        assert_eq!(d.row(2), &[5.0, 5.0]);
    }

    #[test]
    fn csv_empty_file_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "e.csv", b"");
        assert!(matches!(load_csv(&p, 0, false), Err(Error::Validation(_))));
    }

    #[test]
    fn csv_bad_number_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "b.csv", b"1,2,0\n3,abc,1\n");
        match load_csv(&p, 2, false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_ragged_and_nonfinite() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "r.csv", b"1,2,0\n3,1\n");
        assert!(matches!(load_csv(&p, 2, false), Err(Error::Parse { line: 2, .. })));
        let p = write_tmp(&dir, "n.csv", b"1,inf,0\n");
        assert!(matches!(load_csv(&p, 2, false), Err(Error::Validation(_))));
    }

    #[test]
    fn csv_header_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "h.csv", b"label,a,b\n3,1.5,2.5\n");
        let d = load_csv(&p, 0, true).unwrap();
        assert_eq!(d.labels(), &[3]);
        assert_eq!(d.row(0), &[1.5, 2.5]);
    }

    #[test]
    fn raw_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let mut eight = Vec::new();
        eight.extend_from_slice(&1.5f32.to_le_bytes());
        eight.extend_from_slice(&(-2.0f32).to_le_bytes());
        let v = write_tmp(&dir, "v8.bin", &eight);
        let l1 = write_tmp(&dir, "l1.txt", b"4\n");
        let d = load_raw(&v, 2, &l1).unwrap();
        assert_eq!((d.n_rows(), d.n_dims()), (1, 2));
        assert_eq!(d.row(0), &[1.5, -2.0]);

        let v12 = write_tmp(&dir, "v12.bin", &[0u8; 12]);
        assert!(matches!(load_raw(&v12, 2, &l1), Err(Error::Validation(_))));

        let v16 = write_tmp(&dir, "v16.bin", &[0u8; 16]);
        let l3 = write_tmp(&dir, "l3.txt", b"1\n2\n3\n");
        assert!(matches!(load_raw(&v16, 2, &l3), Err(Error::Validation(_))));
    }

    #[test]
    fn round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let d = gen_synthetic(3, 4, 5, 0.3, 11).unwrap();
        let c = dir.path().join("d.csv");
        save_csv(&d, &c, 0).unwrap();
        assert_eq!(load_csv(&c, 0, false).unwrap(), d);

        let narrowed = LabeledDataset::new(
            d.values().iter().map(|&v| v as f32 as f64).collect(),
            d.n_dims(),
            d.labels().to_vec(),
        )
        .unwrap();
        let (v, l) = (dir.path().join("d.bin"), dir.path().join("d.lab"));
        save_raw(&narrowed, &v, &l).unwrap();
        assert_eq!(load_raw(&v, 5, &l).unwrap(), narrowed);
    }

    #[test]
    fn synthetic_shape_and_determinism() {
        let d = gen_synthetic(2, 3, 4, 0.1, 42).unwrap();
        assert_eq!(d.n_rows(), 6);
        assert_eq!(d.n_dims(), 4);
        assert_eq!(d.labels(), &[0, 0, 0, 1, 1, 1]);
        let again = gen_synthetic(2, 3, 4, 0.1, 42).unwrap();
        let bits = |x: &LabeledDataset| x.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&d), bits(&again));
        assert!(gen_synthetic(2, 3, 4, 0.0, 42).is_err());
        assert!(gen_synthetic(0, 3, 4, 0.1, 42).is_err());
    }

    #[test]
    fn synthetic_clusters_are_nearest_neighbor_separable() {
        let d = gen_synthetic(10, 50, 20, 0.05, 1).unwrap();
        let mut correct = 0;
        for i in 0..d.n_rows() {
            let mut best = (f64::INFINITY, usize::MAX);
            for j in (0..d.n_rows()).filter(|&j| j != i) {
                let dist: f64 = d.row(i).iter().zip(d.row(j)).map(|(a, b)| (a - b).powi(2)).sum();
                if dist < best.0 {
                    best = (dist, j);
                }
            }
            correct += usize::from(d.labels()[best.1] == d.labels()[i]);
        }
        assert!(correct as f64 >= 0.99 * d.n_rows() as f64, "{correct}");
    }

    #[test]
    fn split_is_disjoint_and_validated() {
        let d = gen_synthetic(10, 50, 20, 0.1, 7).unwrap();
        let s = split(&d, [0.5, 0.25, 0.25], 7).unwrap();
        assert!(s.is_disjoint());
        assert_eq!(s.learning.n_rows() + s.test.n_rows() + s.query.n_rows(), 500);
        assert_eq!(s.learning.n_rows(), 250);
        assert_eq!(s, split(&d, [0.5, 0.25, 0.25], 7).unwrap());
        assert!(split(&d, [0.5, 0.25, 0.3], 7).is_err());
        assert!(split(&d, [1.0, 0.0, 0.0], 7).is_err());
    }
}
