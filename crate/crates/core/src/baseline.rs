//! Reference unsupervised detectors: k-nearest-neighbor distance and the
//! classic Local Outlier Factor.
//!
//! Both return raw scores; converting scores to labels (threshold sweep)
//! belongs to the evaluation harness so the baselines stay comparable to
//! the voting filter's score semantics.

use ndarray::ArrayView1;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::{Error, Result};

/// Reachability distances of exactly 0 (duplicate points) are floored
/// here so local reachability densities stay finite; fully degenerate
/// neighborhoods then come out at LOF 1 on both sides of the ratio.
const REACH_FLOOR: f64 = 1e-12;

fn euclidean(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Per-sample k-nearest-neighbor lists (excluding the query point),
/// sorted by `(distance, index)` and truncated at exactly `k`.
///
/// The lexicographic tie rule keeps neighbor sets deterministic; it
/// deliberately deviates from the "include all ties" LOF variant.
#[derive(Debug, Clone)]
pub struct NeighborGraph {
    k: usize,
    /// `neighbors[i]` = `k` pairs `(index, distance)`, distances non-decreasing.
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl NeighborGraph {
    pub fn build(data: &Dataset, k: usize) -> Result<Self> {
        let n = data.n_samples();
        if k == 0 || k > n.saturating_sub(1) {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: format!("k must satisfy 1 <= k <= N-1 = {}, got {k}", n.saturating_sub(1)),
            });
        }
        if let Some(row) = data.first_non_finite_row() {
            return Err(Error::NonFiniteValue { row });
        }
        let values = data.values();
        let neighbors: Vec<Vec<(usize, f64)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut dists: Vec<(usize, f64)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (j, euclidean(values.row(i), values.row(j))))
                    .collect();
                dists.sort_unstable_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                dists.truncate(k);
                dists
            })
            .collect();
        Ok(Self { k, neighbors })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    /// Distance from sample `i` to its k-th nearest neighbor.
    #[inline]
    pub fn k_distance(&self, i: usize) -> f64 {
        self.neighbors[i][self.k - 1].1
    }

    fn len(&self) -> usize {
        self.neighbors.len()
    }
}

/// k-nearest-neighbor distance score: `score[i]` is the distance from
/// `z_i` to its k-th nearest neighbor.
pub fn knn_score(data: &Dataset, k: usize) -> Result<Vec<f64>> {
    let graph = NeighborGraph::build(data, k)?;
    Ok((0..graph.len()).map(|i| graph.k_distance(i)).collect())
}

/// Classic Local Outlier Factor: mean ratio of the neighbors' local
/// reachability density to the candidate's own. Scores near 1 denote
/// inliers.
///
/// Requires at least `k + 1` distinct points so neighborhoods are not
/// entirely degenerate.
pub fn lof_score(data: &Dataset, k: usize) -> Result<Vec<f64>> {
    if distinct_rows(data) < k + 1 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: format!("dataset must contain at least k+1 = {} distinct points", k + 1),
        });
    }
    let graph = NeighborGraph::build(data, k)?;
    let n = graph.len();

    // lrd(a) = k / Σ_b max(k_dist(b), d(a, b))
    let lrd: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let sum: f64 = graph
                .neighbors(i)
                .iter()
                .map(|&(j, d)| graph.k_distance(j).max(d).max(REACH_FLOOR))
                .sum();
            graph.k() as f64 / sum
        })
        .collect();

    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let sum: f64 = graph.neighbors(i).iter().map(|&(j, _)| lrd[j]).sum();
            sum / (graph.k() as f64 * lrd[i])
        })
        .collect())
}

fn distinct_rows(data: &Dataset) -> usize {
    let values = data.values();
    let mut rows: Vec<Vec<u64>> = values
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.to_bits()).collect())
        .collect();
    rows.sort_unstable();
    rows.dedup();
    rows.len()
}
