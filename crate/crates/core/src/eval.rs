//! Confusion-count metrics and the grid-search protocol: evaluate every
//! hyperparameter point, keep the run with the best accuracy, report its
//! precision.
//!
//! The positive class is "outlier". Precision with zero positive
//! predictions is reported as undefined (`None`), never 0 or 1, so it
//! cannot silently distort best-run extraction. Accuracy remains the
//! selection target even under class imbalance; interpret it with that
//! caveat in mind.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{knn_score, lof_score};
use crate::data::Dataset;
use crate::filter::{fead, swad, FilterConfig};
use crate::sw::WassersteinOrder;
use crate::{Error, Result};

/// Standard confusion counts; `tp + fp + tn + fn` equals the number of
/// evaluated samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    #[serde(rename = "tp")]
    pub true_positives: usize,
    #[serde(rename = "fp")]
    pub false_positives: usize,
    #[serde(rename = "tn")]
    pub true_negatives: usize,
    #[serde(rename = "fn")]
    pub false_negatives: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }
}

/// Counts prediction/truth agreement; `true` marks the outlier class.
pub fn confusion(pred: &[bool], truth: &[bool]) -> Result<ConfusionCounts> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    let mut counts = ConfusionCounts {
        true_positives: 0,
        false_positives: 0,
        true_negatives: 0,
        false_negatives: 0,
    };
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (true, true) => counts.true_positives += 1,
            (true, false) => counts.false_positives += 1,
            (false, false) => counts.true_negatives += 1,
            (false, true) => counts.false_negatives += 1,
        }
    }
    Ok(counts)
}

/// Accuracy and precision. `precision` is `None` when there are no
/// positive predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: Option<f64>,
}

pub fn metrics(counts: &ConfusionCounts) -> Result<Metrics> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::EmptyInput("confusion counts"));
    }
    let accuracy = (counts.true_positives + counts.true_negatives) as f64 / total as f64;
    let predicted_positive = counts.true_positives + counts.false_positives;
    let precision = if predicted_positive > 0 {
        Some(counts.true_positives as f64 / predicted_positive as f64)
    } else {
        None
    };
    Ok(Metrics { accuracy, precision })
}

/// Which detector a grid evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Swad,
    Fead,
    Lof,
    Knn,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Swad => "swad",
            ModelKind::Fead => "fead",
            ModelKind::Lof => "lof",
            ModelKind::Knn => "knn",
        }
    }

    fn allowed_axes(self) -> &'static [&'static str] {
        match self {
            ModelKind::Swad => &["epsilon", "p", "n", "L", "t"],
            ModelKind::Fead => &["eta", "p", "n"],
            ModelKind::Lof | ModelKind::Knn => &["k", "threshold"],
        }
    }

    fn required_axes(self) -> &'static [&'static str] {
        match self {
            // score-based baselines need a flagging threshold to produce labels
            ModelKind::Lof | ModelKind::Knn => &["k", "threshold"],
            _ => &[],
        }
    }
}

/// A finite hyperparameter grid: one detector plus named value axes.
/// Axes are kept in name order so the point enumeration is canonical.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub model: ModelKind,
    #[serde(default)]
    pub axes: BTreeMap<String, Vec<f64>>,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let allowed = self.model.allowed_axes();
        for (name, values) in &self.axes {
            if !allowed.contains(&name.as_str()) {
                return Err(Error::InvalidParameter {
                    name: "axes",
                    reason: format!(
                        "axis `{name}` is not valid for model `{}` (allowed: {})",
                        self.model.name(),
                        allowed.join(", ")
                    ),
                });
            }
            if values.is_empty() {
                return Err(Error::InvalidParameter {
                    name: "axes",
                    reason: format!("axis `{name}` has no values"),
                });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "axes",
                    reason: format!("axis `{name}` contains a non-finite value"),
                });
            }
            if matches!(name.as_str(), "n" | "L" | "k")
                && values.iter().any(|&v| v.fract() != 0.0 || v < 1.0)
            {
                return Err(Error::InvalidParameter {
                    name: "axes",
                    reason: format!("axis `{name}` must hold integers >= 1"),
                });
            }
        }
        for required in self.model.required_axes() {
            if !self.axes.contains_key(*required) {
                return Err(Error::InvalidParameter {
                    name: "axes",
                    reason: format!(
                        "model `{}` requires axis `{required}`",
                        self.model.name()
                    ),
                });
            }
        }
        Ok(())
    }

    /// Total number of grid points (product of axis lengths; 1 for an
    /// empty axes map).
    pub fn point_count(&self) -> usize {
        self.axes.values().map(Vec::len).product()
    }

    /// Cartesian product in axis-name order, last axis fastest.
    fn points(&self) -> Vec<Vec<f64>> {
        let mut points: Vec<Vec<f64>> = vec![Vec::new()];
        for values in self.axes.values() {
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |&v| {
                        let mut next = prefix.clone();
                        next.push(v);
                        next
                    })
                })
                .collect();
        }
        points
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub counts: ConfusionCounts,
    pub accuracy: f64,
    pub precision: Option<f64>,
    /// Fully resolved hyperparameters of this run.
    pub params: BTreeMap<String, f64>,
}

/// Full grid output plus the selected best run.
#[derive(Debug, Clone, Serialize)]
pub struct GridSearchOutput {
    pub model: ModelKind,
    pub results: Vec<EvalResult>,
    pub best: EvalResult,
}

fn axis_value(axes: &BTreeMap<String, Vec<f64>>, coords: &[f64], name: &str) -> Option<f64> {
    axes.keys().position(|k| k == name).map(|i| coords[i])
}

fn evaluate_point(
    data: &Dataset,
    truth: &[bool],
    model: ModelKind,
    axes: &BTreeMap<String, Vec<f64>>,
    coords: &[f64],
    seed: u64,
) -> Result<EvalResult> {
    let mut params = BTreeMap::new();
    let pred: Vec<bool> = match model {
        ModelKind::Swad | ModelKind::Fead => {
            let mut cfg = FilterConfig {
                seed,
                ..Default::default()
            };
            if let Some(v) = axis_value(axes, coords, "epsilon") {
                cfg.epsilon = v;
            }
            if let Some(v) = axis_value(axes, coords, "eta") {
                cfg.eta = v;
            }
            if let Some(v) = axis_value(axes, coords, "p") {
                cfg.vote_threshold = v;
            }
            if let Some(v) = axis_value(axes, coords, "n") {
                cfg.votes = Some(v as usize);
            }
            if let Some(v) = axis_value(axes, coords, "L") {
                cfg.num_projections = v as usize;
            }
            if let Some(v) = axis_value(axes, coords, "t") {
                cfg.order = WassersteinOrder::new(v)?;
            }
            let report = match model {
                ModelKind::Swad => swad(data, &cfg)?,
                _ => fead(data, &cfg)?,
            };
            match model {
                ModelKind::Swad => {
                    params.insert("epsilon".into(), cfg.epsilon);
                    params.insert("L".into(), cfg.num_projections as f64);
                    params.insert("t".into(), cfg.order.get());
                }
                _ => {
                    params.insert("eta".into(), cfg.eta);
                }
            }
            params.insert("p".into(), cfg.vote_threshold);
            params.insert("n".into(), report.votes_cast as f64);
            report.flags
        }
        ModelKind::Lof | ModelKind::Knn => {
            let k = axis_value(axes, coords, "k").expect("validated") as usize;
            let threshold = axis_value(axes, coords, "threshold").expect("validated");
            let scores = match model {
                ModelKind::Lof => lof_score(data, k)?,
                _ => knn_score(data, k)?,
            };
            params.insert("k".into(), k as f64);
            params.insert("threshold".into(), threshold);
            scores.iter().map(|&s| s >= threshold).collect()
        }
    };
    let counts = confusion(&pred, truth)?;
    let m = metrics(&counts)?;
    Ok(EvalResult {
        counts,
        accuracy: m.accuracy,
        precision: m.precision,
        params,
    })
}

/// Evaluates every grid point against the dataset's ground-truth labels.
///
/// The best run maximizes accuracy; ties go to the higher precision
/// (undefined ranks lowest), then to the lexicographically smaller
/// coordinate tuple in axis-name order. Results come back in grid order
/// and are bit-reproducible for a fixed seed.
pub fn grid_search(data: &Dataset, grid: &GridSpec, seed: u64) -> Result<GridSearchOutput> {
    grid.validate()?;
    let truth = data.truth_labels().ok_or(Error::MissingLabels)?.to_vec();
    let points = grid.points();
    let results: Vec<EvalResult> = points
        .par_iter()
        .map(|coords| evaluate_point(data, &truth, grid.model, &grid.axes, coords, seed))
        .collect::<Result<Vec<_>>>()?;

    let mut best_idx = 0;
    for i in 1..results.len() {
        let (a, b) = (&results[i], &results[best_idx]);
        let better = match a.accuracy.total_cmp(&b.accuracy) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => {
                let pa = a.precision.unwrap_or(f64::NEG_INFINITY);
                let pb = b.precision.unwrap_or(f64::NEG_INFINITY);
                match pa.total_cmp(&pb) {
                    std::cmp::Ordering::Greater => true,
                    // earlier grid order == lexicographically smaller tuple
                    _ => false,
                }
            }
        };
        if better {
            best_idx = i;
        }
    }
    Ok(GridSearchOutput {
        model: grid.model,
        results: results.clone(),
        best: results[best_idx].clone(),
    })
}

/// Flat results table: one row per grid point with all parameters,
/// counts, accuracy, and precision (blank when undefined).
pub fn results_to_csv(output: &GridSearchOutput) -> String {
    let mut columns: Vec<&str> = output
        .results
        .first()
        .map(|r| r.params.keys().map(String::as_str).collect())
        .unwrap_or_default();
    columns.sort_unstable();
    let mut s = String::from("model");
    for c in &columns {
        s.push(',');
        s.push_str(c);
    }
    s.push_str(",tp,fp,tn,fn,accuracy,precision\n");
    for r in &output.results {
        s.push_str(output.model.name());
        for c in &columns {
            s.push(',');
            s.push_str(&format!("{}", r.params[*c]));
        }
        let c = &r.counts;
        s.push_str(&format!(
            ",{},{},{},{},{}",
            c.true_positives, c.false_positives, c.true_negatives, c.false_negatives, r.accuracy
        ));
        match r.precision {
            Some(p) => s.push_str(&format!(",{p}\n")),
            None => s.push_str(",\n"),
        }
    }
    s
}
