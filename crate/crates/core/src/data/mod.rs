//! Dataset container, CSV ingestion, standardization, and rank statistics.
//!
//! The missing-value policy is drop-and-report: rows with unparseable,
//! missing, or non-finite cells are removed during ingestion and counted,
//! never imputed. Distance-based filtering downstream would otherwise
//! treat imputed values as genuine inliers.

pub mod generate;
pub mod lcpr;

use std::io;
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::{Error, Result};

/// An `N × d` numeric sample matrix with feature names, optional binary
/// ground-truth outlier labels, and a free-text provenance tag.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Array2<f64>,
    feature_names: Vec<String>,
    truth_labels: Option<Vec<bool>>,
    provenance: String,
}

impl Dataset {
    /// Builds a dataset, checking shape consistency (`N ≥ 1`, `d ≥ 1`,
    /// one name per column, one label per row when labels are present).
    pub fn new(
        values: Array2<f64>,
        feature_names: Vec<String>,
        truth_labels: Option<Vec<bool>>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::NoUsableRows);
        }
        if values.ncols() == 0 {
            return Err(Error::EmptyInput("feature columns"));
        }
        if feature_names.len() != values.ncols() {
            return Err(Error::LengthMismatch {
                left: feature_names.len(),
                right: values.ncols(),
            });
        }
        if let Some(labels) = &truth_labels {
            if labels.len() != values.nrows() {
                return Err(Error::LengthMismatch {
                    left: labels.len(),
                    right: values.nrows(),
                });
            }
        }
        Ok(Self {
            values,
            feature_names,
            truth_labels,
            provenance: provenance.into(),
        })
    }

    /// Convenience constructor with generated feature names `x0..x{d-1}`.
    pub fn from_values(values: Array2<f64>, provenance: impl Into<String>) -> Result<Self> {
        let names = (0..values.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(values, names, None, provenance)
    }

    /// Number of samples `N`.
    #[inline]
    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    /// Feature dimension `d`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    #[inline]
    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    #[inline]
    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    #[inline]
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    #[inline]
    pub fn truth_labels(&self) -> Option<&[bool]> {
        self.truth_labels.as_deref()
    }

    #[inline]
    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Index of the first row containing a NaN or infinity, if any.
    pub fn first_non_finite_row(&self) -> Option<usize> {
        self.values
            .rows()
            .into_iter()
            .position(|row| row.iter().any(|v| !v.is_finite()))
    }

    /// Replaces the label vector (length-checked).
    pub fn with_truth_labels(mut self, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != self.n_samples() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: self.n_samples(),
            });
        }
        self.truth_labels = Some(labels);
        Ok(self)
    }
}

/// Result of CSV ingestion: the parsed dataset plus how many rows were
/// dropped under the missing-value policy.
#[derive(Debug)]
pub struct CsvIngest {
    pub dataset: Dataset,
    pub dropped_rows: usize,
}

/// Reads a rectangular numeric CSV into a [`Dataset`].
///
/// Rows with any unparseable, empty, or non-finite cell are dropped and
/// counted. When `label_column` names a column, its `{0,1}` values become
/// `truth_labels` and the column is excluded from the value matrix; rows
/// whose label is neither 0 nor 1 are dropped as well. A row with the
/// wrong field count makes the whole file non-rectangular, which is a
/// hard error rather than a drop.
pub fn read_csv(
    path: impl AsRef<Path>,
    has_header: bool,
    label_column: Option<&str>,
) -> Result<CsvIngest> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv_from(file, has_header, label_column, path.as_ref().display().to_string())
}

/// [`read_csv`] over any reader; `provenance` tags the resulting dataset.
pub fn read_csv_from(
    reader: impl io::Read,
    has_header: bool,
    label_column: Option<&str>,
    provenance: impl Into<String>,
) -> Result<CsvIngest> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);

    let mut records = rdr.records();
    let mut feature_names: Vec<String>;
    let mut first_data: Option<csv::StringRecord> = None;
    let width;

    if has_header {
        let header = match records.next() {
            Some(rec) => rec?,
            None => return Err(Error::NoUsableRows),
        };
        width = header.len();
        feature_names = header.iter().map(str::to_owned).collect();
    } else {
        let first = match records.next() {
            Some(rec) => rec?,
            None => return Err(Error::NoUsableRows),
        };
        width = first.len();
        feature_names = (0..width).map(|j| format!("f{j}")).collect();
        first_data = Some(first);
    }

    let label_idx = match label_column {
        Some(name) => match feature_names.iter().position(|n| n == name) {
            Some(idx) => Some(idx),
            None => return Err(Error::UnknownLabelColumn(name.to_owned())),
        },
        None => None,
    };
    if let Some(idx) = label_idx {
        feature_names.remove(idx);
    }
    if feature_names.is_empty() {
        return Err(Error::EmptyInput("feature columns"));
    }

    let d = feature_names.len();
    let mut flat: Vec<f64> = Vec::new();
    let mut labels: Vec<bool> = Vec::new();
    let mut dropped = 0usize;
    let mut row_no = if has_header { 1 } else { 0 };

    let mut handle_record = |record: csv::StringRecord, row_no: usize| -> Result<()> {
        if record.len() != width {
            return Err(Error::NonRectangularCsv {
                row: row_no + 1,
                expected: width,
                actual: record.len(),
            });
        }
        let mut row_vals = Vec::with_capacity(d);
        let mut row_label = None;
        let mut ok = true;
        for (j, cell) in record.iter().enumerate() {
            let parsed = cell.trim().parse::<f64>().ok().filter(|v| v.is_finite());
            match parsed {
                Some(v) if Some(j) == label_idx => {
                    if v == 0.0 || v == 1.0 {
                        row_label = Some(v == 1.0);
                    } else {
                        ok = false;
                    }
                }
                Some(v) => row_vals.push(v),
                None => ok = false,
            }
            if !ok {
                break;
            }
        }
        if ok {
            flat.extend_from_slice(&row_vals);
            if let Some(l) = row_label {
                labels.push(l);
            }
        } else {
            dropped += 1;
        }
        Ok(())
    };

    if let Some(first) = first_data {
        handle_record(first, row_no)?;
        row_no += 1;
    }
    for record in records {
        handle_record(record?, row_no)?;
        row_no += 1;
    }

    let n = flat.len() / d;
    if n == 0 {
        return Err(Error::NoUsableRows);
    }
    let values = Array2::from_shape_vec((n, d), flat).expect("row-major shape");
    let truth = label_idx.map(|_| labels);
    let dataset = Dataset::new(values, feature_names, truth, provenance)?;
    Ok(CsvIngest {
        dataset,
        dropped_rows: dropped,
    })
}

/// Writes the dataset as CSV: header row with feature names (plus a
/// trailing `label` column when labels are present), values in shortest
/// round-trip decimal form.
pub fn write_csv(dataset: &Dataset, out: impl io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = dataset.feature_names().iter().map(String::as_str).collect();
    if dataset.truth_labels().is_some() {
        header.push("label");
    }
    w.write_record(&header)?;
    let mut buf: Vec<String> = Vec::with_capacity(header.len());
    for (i, row) in dataset.values().rows().into_iter().enumerate() {
        buf.clear();
        buf.extend(row.iter().map(|v| format!("{v}")));
        if let Some(labels) = dataset.truth_labels() {
            buf.push(if labels[i] { "1".into() } else { "0".into() });
        }
        w.write_record(buf.iter())?;
    }
    w.flush()?;
    Ok(())
}

/// Per-column location/scale recorded by [`standardize`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ColumnScale {
    pub mean: f64,
    /// Population standard deviation; 0 marks a constant column.
    pub std: f64,
}

/// Output of [`standardize`].
#[derive(Debug)]
pub struct Standardized {
    pub dataset: Dataset,
    pub scales: Vec<ColumnScale>,
    /// Columns left at zero because their deviation was (numerically) nil.
    pub constant_columns: Vec<usize>,
}

/// Scales each column to zero mean and unit population variance.
///
/// Constant columns map to all zeros, record `std = 0`, and are listed in
/// `constant_columns` as a warning. Errors when `N < 2`.
pub fn standardize(data: &Dataset) -> Result<Standardized> {
    let n = data.n_samples();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, actual: n });
    }
    let values = data.values();
    let mut out = values.to_owned();
    let mut scales = Vec::with_capacity(data.dim());
    let mut constants = Vec::new();
    for j in 0..data.dim() {
        let col = values.column(j);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        // relative threshold so near-constant columns do not blow up
        if std <= 1e-12 * (1.0 + mean.abs()) {
            out.column_mut(j).fill(0.0);
            scales.push(ColumnScale { mean, std: 0.0 });
            constants.push(j);
        } else {
            out.column_mut(j).mapv_inplace(|v| (v - mean) / std);
            scales.push(ColumnScale { mean, std });
        }
    }
    let dataset = Dataset::new(
        out,
        data.feature_names().to_vec(),
        data.truth_labels().map(<[bool]>::to_vec),
        format!("{} (standardized)", data.provenance()),
    )?;
    Ok(Standardized {
        dataset,
        scales,
        constant_columns: constants,
    })
}

/// Maps integer-valued cyclic features (hour, weekday, month) onto the
/// unit circle: `v ↦ (sin(2πv/period), cos(2πv/period))`.
pub fn cyclical_encode(values: &[i64], period: u64) -> Result<Vec<(f64, f64)>> {
    if period == 0 {
        return Err(Error::InvalidParameter {
            name: "period",
            reason: "period must be >= 1".into(),
        });
    }
    let p = period as f64;
    Ok(values
        .iter()
        .map(|&v| {
            let phase = 2.0 * std::f64::consts::PI * (v as f64) / p;
            (phase.sin(), phase.cos())
        })
        .collect())
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        // positions start..end hold a tied run
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of average-rank vectors.
///
/// Errors when either side is constant (the coefficient is undefined) or
/// when fewer than two observations are given.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            actual: x.len(),
        });
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::ConstantInput("x"));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::ConstantInput("y"));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    Ok(cov / (vx * vy).sqrt())
}
