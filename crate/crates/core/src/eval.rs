//! Hamming search over code databases and the retrieval metrics:
//! precision, recall, acquisition-sized retrieval and refined-search error rate.

use std::io::Write;

use rayon::prelude::*;

use crate::bits::BitCode;
use crate::dataset::{DataSplit, Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::model::HashModel;

/// Database rows ordered by plain Hamming distance, ties by ascending index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    pub ranked_indices: Vec<usize>,
    pub distances: Vec<u32>,
}

impl SearchResult {
    pub fn len(&self) -> usize {
        self.ranked_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked_indices.is_empty()
    }
}

fn check_search(query: &BitCode, db: &[BitCode], retrieve_count: usize) -> Result<()> {
    if retrieve_count > db.len() {
        return Err(Error::Validation(format!(
            "cannot retrieve {retrieve_count} from a database of {}",
            db.len()
        )));
    }
    if let Some(c) = db.iter().find(|c| c.len() != query.len()) {
        return Err(Error::shape(query.len(), c.len()));
    }
    Ok(())
}

/// The `retrieve_count` nearest codes by popcount Hamming distance.
pub fn search(query: &BitCode, db: &[BitCode], retrieve_count: usize) -> Result<SearchResult> {
    check_search(query, db, retrieve_count)?;
    let mut scored: Vec<(u32, usize)> = db
        .iter()
        .enumerate()
        .map(|(i, c)| (crate::bits::hamming_words(query.words(), c.words()), i))
        .collect();
    if retrieve_count < scored.len() && retrieve_count > 0 {
        scored.select_nth_unstable(retrieve_count - 1);
    }
    scored.truncate(retrieve_count);
    scored.sort_unstable();
    Ok(SearchResult {
        ranked_indices: scored.iter().map(|s| s.1).collect(),
        distances: scored.iter().map(|s| s.0).collect(),
    })
}

/// Bit-by-bit distances and a full stable sort. Reference for [`search`].
pub fn search_scalar(query: &BitCode, db: &[BitCode], retrieve_count: usize) -> Result<SearchResult> {
    check_search(query, db, retrieve_count)?;
    let mut scored = Vec::with_capacity(db.len());
    for (i, c) in db.iter().enumerate() {
        scored.push((query.hamming_scalar(c)?, i));
    }
    scored.sort_by_key(|s| s.0);
    scored.truncate(retrieve_count);
    Ok(SearchResult {
        ranked_indices: scored.iter().map(|s| s.1).collect(),
        distances: scored.iter().map(|s| s.0).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    /// False when no database row carries the query's label; recall is then 0.
    pub label_present: bool,
}

pub fn precision_recall(result: &SearchResult, query_label: Label, db_labels: &[Label]) -> PrecisionRecall {
    let hits = result
        .ranked_indices
        .iter()
        .filter(|&&i| db_labels[i] == query_label)
        .count();
    let relevant = db_labels.iter().filter(|&&l| l == query_label).count();
    PrecisionRecall {
        precision: if result.is_empty() { 0.0 } else { hits as f64 / result.len() as f64 },
        recall: if relevant == 0 { 0.0 } else { hits as f64 / relevant as f64 },
        label_present: relevant > 0,
    }
}

/// `round(acquisition × db_size)` with halves rounding up, at least 1.
pub fn retrieve_count_for(acquisition: f64, db_size: usize) -> Result<usize> {
    if !(acquisition > 0.0 && acquisition <= 1.0) {
        return Err(Error::Validation(format!(
            "acquisition must be in (0, 1], got {acquisition}"
        )));
    }
    let n = (acquisition * db_size as f64 + 0.5).floor() as usize;
    Ok(n.clamp(1, db_size.max(1)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRate {
    pub rate: f64,
    pub errors: usize,
    pub queries: usize,
    /// Queries whose label never occurs in the database (counted as errors).
    pub absent_label: usize,
}

fn check_labels(codes: &[BitCode], labels: &[Label]) -> Result<()> {
    if codes.len() != labels.len() {
        return Err(Error::shape(codes.len(), labels.len()));
    }
    Ok(())
}

/// Fraction of queries whose retrieved set holds no row of the query's label.
pub fn error_rate(
    queries: &[BitCode],
    query_labels: &[Label],
    db: &[BitCode],
    db_labels: &[Label],
    acquisition: f64,
) -> Result<ErrorRate> {
    let report = evaluate_codes(queries, query_labels, db, db_labels, acquisition)?;
    Ok(ErrorRate {
        rate: report.error_rate,
        errors: report.errors,
        queries: queries.len(),
        absent_label: report.absent_label_queries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub bits: usize,
    pub acquisition: f64,
    pub retrieved: usize,
    pub precision: f64,
    pub recall: f64,
    pub error_rate: f64,
    pub errors: usize,
    pub absent_label_queries: usize,
}

/// Mean precision and recall plus error rate over all queries.
pub fn evaluate_codes(
    queries: &[BitCode],
    query_labels: &[Label],
    db: &[BitCode],
    db_labels: &[Label],
    acquisition: f64,
) -> Result<MetricReport> {
    check_labels(queries, query_labels)?;
    check_labels(db, db_labels)?;
    if queries.is_empty() {
        return Err(Error::Validation("no queries".into()));
    }
    if db.is_empty() {
        return Err(Error::Validation("empty database".into()));
    }
    let k = retrieve_count_for(acquisition, db.len())?;
    let per_query: Vec<PrecisionRecall> = queries
        .par_iter()
        .zip(query_labels)
        .map(|(q, &l)| Ok(precision_recall(&search(q, db, k)?, l, db_labels)))
        .collect::<Result<_>>()?;

    let n = per_query.len() as f64;
    // a query errs exactly when none of its retrieved rows share its label
    let errors = per_query.iter().filter(|pr| pr.precision == 0.0).count();
    Ok(MetricReport {
        bits: queries[0].len(),
        acquisition,
        retrieved: k,
        precision: per_query.iter().map(|pr| pr.precision).sum::<f64>() / n,
        recall: per_query.iter().map(|pr| pr.recall).sum::<f64>() / n,
        error_rate: errors as f64 / n,
        errors,
        absent_label_queries: per_query.iter().filter(|pr| !pr.label_present).count(),
    })
}

/// Encodes `db` and `queries` with `model` at `bits` and evaluates.
pub fn evaluate_model(
    model: &HashModel,
    bits: usize,
    db: &LabeledDataset,
    queries: &LabeledDataset,
    acquisition: f64,
) -> Result<MetricReport> {
    let db_codes = model.encode(db, Some(bits))?;
    let q_codes = model.encode(queries, Some(bits))?;
    evaluate_codes(&q_codes, queries.labels(), &db_codes, db.labels(), acquisition)
}

#[derive(Debug)]
pub struct CurveCell {
    pub scheme: String,
    pub bits: usize,
    pub acquisition: f64,
    pub result: Result<MetricReport>,
}

/// Evaluates every model at every width on the split's test (database) and
/// query sets. A width beyond a model's capacity yields an error cell.
pub fn curve(
    models: &[(String, &HashModel)],
    bit_widths: &[usize],
    split: &DataSplit,
    acquisition: f64,
) -> Result<Vec<CurveCell>> {
    curve_sets(models, bit_widths, &split.test, &split.query, acquisition)
}

/// [`curve`] over an explicit database and query set.
pub fn curve_sets(
    models: &[(String, &HashModel)],
    bit_widths: &[usize],
    db: &LabeledDataset,
    queries: &LabeledDataset,
    acquisition: f64,
) -> Result<Vec<CurveCell>> {
    retrieve_count_for(acquisition, db.n_rows())?;
    let mut cells = Vec::with_capacity(models.len() * bit_widths.len());
    for (name, model) in models {
        // encode once at full width; narrower codes are prefixes of the selection
        let full = model
            .encode(db, None)
            .and_then(|db_codes| Ok((db_codes, model.encode(queries, None)?)));
        for &bits in bit_widths {
            let result = match &full {
                Err(e) => Err(Error::Validation(format!("encoding failed: {e}"))),
                Ok(_) if bits == 0 || bits > model.capacity() => Err(Error::Capability(format!(
                    "{name}: {bits} bits requested, model provides {}",
                    model.capacity()
                ))),
                Ok((db_codes, q_codes)) => {
                    let cut = |codes: &[BitCode]| codes.iter().map(|c| c.prefix(bits)).collect::<Result<Vec<_>>>();
                    cut(db_codes).and_then(|d| {
                        evaluate_codes(&cut(q_codes)?, queries.labels(), &d, db.labels(), acquisition)
                    })
                }
            };
            cells.push(CurveCell {
                scheme: name.clone(),
                bits,
                acquisition,
                result,
            });
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MetricSet {
    #[default]
    All,
    PrecisionRecall,
    ErrorRate,
}

pub const CURVE_HEADER: &str = "scheme,bits,acquisition,precision,recall,error_rate";

/// Six significant digits, `%g` style.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..6).contains(&exp) {
        let s = trim(format!("{:.*}", (5 - exp).max(0) as usize, x));
        // rounding can carry into a new digit (e.g. 9.999995 -> 10.0000)
        let digits = s.chars().filter(char::is_ascii_digit).skip_while(|&c| c == '0').count();
        if digits > 6 {
            return trim(format!("{:.*}", (4 - exp).max(0) as usize, x));
        }
        s
    } else {
        let s = format!("{:.5e}", x);
        let (mant, e) = s.split_once('e').unwrap_or((&s, "0"));
        let e: i32 = e.parse().unwrap_or(0);
        format!("{}e{}{:02}", trim(mant.to_string()), if e < 0 { '-' } else { '+' }, e.abs())
    }
}

/// Writes the curve table. Error cells print `NA` in the metric columns;
/// metrics outside `metrics` are left empty.
pub fn write_curve_csv<W: Write>(cells: &[CurveCell], metrics: MetricSet, mut out: W) -> Result<()> {
    writeln!(out, "{CURVE_HEADER}")?;
    for c in cells {
        let (p, r, e) = match &c.result {
            Ok(m) => (fmt_sig6(m.precision), fmt_sig6(m.recall), fmt_sig6(m.error_rate)),
            Err(_) => ("NA".into(), "NA".into(), "NA".into()),
        };
        let (p, r, e) = match metrics {
            MetricSet::All => (p, r, e),
            MetricSet::PrecisionRecall => (p, r, String::new()),
            MetricSet::ErrorRate => (String::new(), String::new(), e),
        };
        writeln!(out, "{},{},{},{p},{r},{e}", c.scheme, c.bits, fmt_sig6(c.acquisition))?;
    }
    Ok(())
}
