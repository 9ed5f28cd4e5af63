//! The sliced-Wasserstein voting filter and its fast Euclidean shortcut.
//!
//! For every candidate `z_i` the filter draws `n` distinct comparators
//! `z_j` (without replacement, `j ≠ i`) and casts one vote per comparator:
//! positive when the pair statistic reaches the distance threshold. A
//! candidate whose positive-vote fraction reaches `p` is flagged as an
//! outlier; the fraction itself is the candidate's confidence score.
//!
//! Pair statistics:
//!
//! - `swad`: sliced-Wasserstein distance between the two leave-one-out
//!   empirical distributions `D \ {z_i}` and `D \ {z_j}`, thresholded at
//!   `ε` (or `ε / (N_eff − 1)` in normalized mode, which expresses `ε` as
//!   a per-atom transport cost that stays comparable across chunk sizes);
//! - `fead`: plain Euclidean distance `‖z_i − z_j‖₂` thresholded at `η`.
//!
//! Since the two leave-one-out clouds share `N − 2` atoms, each projected
//! pair distance reduces to a short window of sorted-projection gaps. The
//! implementation presorts every projection once and answers each pair
//! from prefix sums of the gap powers, which is algebraically the same
//! closed form `wasserstein_1d` evaluates on materialized clouds (see
//! [`pair_statistic_swad`] for the transparent route).
//!
//! Randomness is split by role: the direction sample is derived from the
//! seed alone, the chunk shuffle from stream 1, and each candidate's
//! comparator draw from a stream indexed by the candidate id. Parallel
//! scheduling therefore cannot change any result: output is bit-identical
//! across worker counts.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::sw::{pow_abs, root, sample_directions, sliced_wasserstein, DirectionSet, WassersteinOrder};
use crate::{Error, Result};

/// Stream id for the chunk shuffle; candidate streams start right after.
const SHUFFLE_STREAM: u64 = 1;
const CANDIDATE_STREAM_BASE: u64 = 2;

/// How the vote threshold `ε` is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Compare the sliced-Wasserstein value against `ε` directly.
    Raw,
    /// Compare against `ε / (N_eff − 1)`: `ε` becomes a per-atom transport
    /// cost, stable across chunk sizes. Mandatory under chunking.
    Normalized,
}

/// All filter hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Wasserstein order `t`.
    pub order: WassersteinOrder,
    /// Number of random projections `L` (ignored by `fead`).
    pub num_projections: usize,
    /// Sliced-Wasserstein vote threshold `ε > 0`.
    pub epsilon: f64,
    /// Euclidean vote threshold `η ≥ 0` (`fead` only).
    pub eta: f64,
    /// Fraction of positive votes required to flag, `p ∈ [0, 1]`.
    pub vote_threshold: f64,
    /// Votes per candidate `n`; `None` resolves to `min(30, N_eff − 1)`.
    pub votes: Option<usize>,
    pub seed: u64,
    /// Chunk size for `chunked_swad`; `None` elsewhere.
    pub chunk_size: Option<usize>,
    pub threshold_mode: ThresholdMode,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            order: WassersteinOrder::default(),
            num_projections: 50,
            epsilon: 1.0,
            eta: 1.0,
            vote_threshold: 0.7,
            votes: None,
            seed: 0,
            chunk_size: None,
            threshold_mode: ThresholdMode::Raw,
        }
    }
}

impl FilterConfig {
    /// Checks the data-independent parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if !(self.vote_threshold.is_finite() && (0.0..=1.0).contains(&self.vote_threshold)) {
            return Err(Error::InvalidParameter {
                name: "p",
                reason: format!("vote threshold must lie in [0, 1], got {}", self.vote_threshold),
            });
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("epsilon must be a finite real > 0, got {}", self.epsilon),
            });
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "eta",
                reason: format!("eta must be a finite real >= 0, got {}", self.eta),
            });
        }
        if self.num_projections == 0 {
            return Err(Error::InvalidParameter {
                name: "L",
                reason: "projection count must be >= 1".into(),
            });
        }
        if self.votes == Some(0) {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "votes per candidate must be >= 1".into(),
            });
        }
        if let Some(c) = self.chunk_size {
            if c < 4 {
                return Err(Error::InvalidParameter {
                    name: "chunk_size",
                    reason: format!("chunk size must be >= 4, got {c}"),
                });
            }
        }
        Ok(())
    }

    /// Votes per candidate for a population of `n_eff` samples.
    fn resolve_votes(&self, n_eff: usize) -> Result<usize> {
        let v = self.votes.unwrap_or_else(|| 30.min(n_eff - 1));
        if v > n_eff - 1 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: format!("votes per candidate ({v}) exceeds population minus one ({})", n_eff - 1),
            });
        }
        Ok(v)
    }
}

/// Per-sample outcome of a filter run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterReport {
    /// `flags[i] == (scores[i] >= p)`.
    pub flags: Vec<bool>,
    /// Positive-vote fraction per sample, each in `{0, 1/n, …, 1}`.
    pub scores: Vec<f64>,
    /// Ascending indices of flagged samples.
    pub outlier_indices: Vec<usize>,
    /// The configuration the run was called with.
    pub config_echo: FilterConfig,
    /// Resolved votes per candidate `n`.
    pub votes_cast: usize,
}

impl FilterReport {
    pub fn outlier_count(&self) -> usize {
        self.outlier_indices.len()
    }
}

fn candidate_rng(seed: u64, id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(CANDIDATE_STREAM_BASE + id as u64);
    rng
}

/// Draws `votes` distinct comparator positions `!= candidate` from
/// `0..n_eff`, uniformly without replacement.
fn draw_comparators(rng: &mut ChaCha8Rng, n_eff: usize, candidate: usize, votes: usize) -> Vec<usize> {
    rand::seq::index::sample(rng, n_eff - 1, votes)
        .iter()
        .map(|idx| idx + usize::from(idx >= candidate))
        .collect()
}

fn check_data(data: &Dataset, needed: usize) -> Result<()> {
    let n = data.n_samples();
    if n < needed {
        return Err(Error::TooFewSamples { needed, actual: n });
    }
    if let Some(row) = data.first_non_finite_row() {
        return Err(Error::NonFiniteValue { row });
    }
    Ok(())
}

/// Presorted projections of the full dataset plus prefix sums of the
/// sorted-gap powers, one row per direction. Answers any leave-one-out
/// pair distance in `O(L)`.
struct LooTable {
    /// `ranks[l * n + i]` = sorted position of sample `i` under direction `l`.
    ranks: Vec<u32>,
    /// `prefix[l * n + k]` = sum of the first `k` gap powers under `l`.
    prefix: Vec<f64>,
    num_dirs: usize,
    n: usize,
    t: f64,
}

impl LooTable {
    fn build(data: &Dataset, dirs: &DirectionSet, order: WassersteinOrder) -> Self {
        let n = data.n_samples();
        let t = order.get();
        let values = data.values();
        let mut ranks = vec![0u32; dirs.len() * n];
        let mut prefix = vec![0.0f64; dirs.len() * n];
        let mut proj = vec![0.0f64; n];
        let mut idx: Vec<usize> = (0..n).collect();
        for (l, theta) in dirs.iter().enumerate() {
            for (i, row) in values.rows().into_iter().enumerate() {
                proj[i] = row.dot(&theta);
            }
            idx.sort_unstable_by(|&a, &b| proj[a].total_cmp(&proj[b]).then(a.cmp(&b)));
            let base = l * n;
            for (pos, &i) in idx.iter().enumerate() {
                ranks[base + i] = pos as u32;
            }
            let mut acc = 0.0;
            prefix[base] = 0.0;
            for k in 1..n {
                acc += pow_abs(proj[idx[k]] - proj[idx[k - 1]], t);
                prefix[base + k] = acc;
            }
        }
        Self {
            ranks,
            prefix,
            num_dirs: dirs.len(),
            n,
            t,
        }
    }

    /// Sliced-Wasserstein distance between the leave-one-out clouds that
    /// drop samples `i` and `j` respectively.
    fn pair_sw(&self, i: usize, j: usize) -> f64 {
        let mut acc = 0.0;
        for l in 0..self.num_dirs {
            let base = l * self.n;
            let ri = self.ranks[base + i] as usize;
            let rj = self.ranks[base + j] as usize;
            let (a, b) = if ri < rj { (ri, rj) } else { (rj, ri) };
            acc += self.prefix[base + b] - self.prefix[base + a];
        }
        root(acc / (self.num_dirs as f64 * (self.n - 1) as f64), self.t)
    }
}

fn build_report(scores: Vec<f64>, cfg: &FilterConfig, votes: usize) -> FilterReport {
    let p = cfg.vote_threshold;
    let flags: Vec<bool> = scores.iter().map(|&s| s >= p).collect();
    let outlier_indices = flags
        .iter()
        .enumerate()
        .filter_map(|(i, &f)| f.then_some(i))
        .collect();
    FilterReport {
        flags,
        scores,
        outlier_indices,
        config_echo: cfg.clone(),
        votes_cast: votes,
    }
}

/// Sliced-Wasserstein voting filter over the whole dataset.
///
/// Candidate `i`'s comparator draw comes from stream `i`; see
/// [`swad_with_candidate_ids`] to pin streams to sample identities instead
/// of row positions.
pub fn swad(data: &Dataset, cfg: &FilterConfig) -> Result<FilterReport> {
    let ids: Vec<usize> = (0..data.n_samples()).collect();
    swad_with_candidate_ids(data, cfg, &ids)
}

/// [`swad`] with explicit per-candidate stream ids.
///
/// `ids[i]` seeds the comparator draw of row `i`, so a permuted or
/// subsetted dataset can keep each sample's vote randomness attached to
/// the sample itself. `chunked_swad` runs every chunk through this with
/// the members' original indices.
pub fn swad_with_candidate_ids(data: &Dataset, cfg: &FilterConfig, ids: &[usize]) -> Result<FilterReport> {
    cfg.validate()?;
    check_data(data, 3)?;
    let n = data.n_samples();
    if ids.len() != n {
        return Err(Error::LengthMismatch {
            left: ids.len(),
            right: n,
        });
    }
    let votes = cfg.resolve_votes(n)?;
    let dirs = sample_directions(data.dim(), cfg.num_projections, cfg.seed)?;
    let table = LooTable::build(data, &dirs, cfg.order);
    let eps_eff = match cfg.threshold_mode {
        ThresholdMode::Raw => cfg.epsilon,
        ThresholdMode::Normalized => cfg.epsilon / (n - 1) as f64,
    };
    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = candidate_rng(cfg.seed, ids[i]);
            let positive = draw_comparators(&mut rng, n, i, votes)
                .into_iter()
                .filter(|&j| table.pair_sw(i, j) >= eps_eff)
                .count();
            positive as f64 / votes as f64
        })
        .collect();
    Ok(build_report(scores, cfg, votes))
}

/// Fast Euclidean approximation: identical voting structure to [`swad`]
/// with the pair statistic replaced by `‖z_i − z_j‖₂ ≥ η`. No projections
/// are computed; `threshold_mode` does not apply.
pub fn fead(data: &Dataset, cfg: &FilterConfig) -> Result<FilterReport> {
    let ids: Vec<usize> = (0..data.n_samples()).collect();
    fead_with_candidate_ids(data, cfg, &ids)
}

/// [`fead`] with explicit per-candidate stream ids; comparator draws
/// coincide with [`swad_with_candidate_ids`] at equal seed and ids.
pub fn fead_with_candidate_ids(data: &Dataset, cfg: &FilterConfig, ids: &[usize]) -> Result<FilterReport> {
    cfg.validate()?;
    check_data(data, 2)?;
    let n = data.n_samples();
    if ids.len() != n {
        return Err(Error::LengthMismatch {
            left: ids.len(),
            right: n,
        });
    }
    let votes = cfg.resolve_votes(n)?;
    let values = data.values();
    let eta = cfg.eta;
    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = candidate_rng(cfg.seed, ids[i]);
            let zi = values.row(i);
            let positive = draw_comparators(&mut rng, n, i, votes)
                .into_iter()
                .filter(|&j| {
                    let zj = values.row(j);
                    let dist = zi
                        .iter()
                        .zip(zj.iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    dist >= eta
                })
                .count();
            positive as f64 / votes as f64
        })
        .collect();
    Ok(build_report(scores, cfg, votes))
}

/// The deterministic partition used by [`chunked_swad`]: a seeded shuffle
/// of `0..n` cut into contiguous blocks of `chunk_size`, each returned in
/// ascending index order. A short final block is merged into its
/// predecessor when it could not host a full vote (or a minimal filter
/// population of 3).
pub fn chunk_partition(n: usize, cfg: &FilterConfig) -> Result<Vec<Vec<usize>>> {
    cfg.validate()?;
    let chunk_size = cfg.chunk_size.ok_or(Error::InvalidParameter {
        name: "chunk_size",
        reason: "chunked filtering requires a chunk size".into(),
    })?;
    if chunk_size > n {
        return Err(Error::InvalidParameter {
            name: "chunk_size",
            reason: format!("chunk size ({chunk_size}) exceeds dataset size ({n})"),
        });
    }
    let votes = cfg.votes.unwrap_or_else(|| 30.min(chunk_size - 1));
    if chunk_size < votes + 1 {
        return Err(Error::InvalidParameter {
            name: "chunk_size",
            reason: format!("chunk size ({chunk_size}) must be at least votes + 1 ({})", votes + 1),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(SHUFFLE_STREAM);
    order.shuffle(&mut rng);

    let min_last = (votes + 1).max(3);
    let mut chunks: Vec<Vec<usize>> = order.chunks(chunk_size).map(<[usize]>::to_vec).collect();
    if chunks.len() > 1 && chunks.last().is_some_and(|c| c.len() < min_last) {
        let tail = chunks.pop().expect("non-empty");
        chunks.last_mut().expect("non-empty").extend(tail);
    }
    for chunk in &mut chunks {
        chunk.sort_unstable();
    }
    Ok(chunks)
}

/// Runs [`swad`] independently inside each chunk of a seeded partition
/// and stitches the per-chunk scores back to the original indices.
///
/// Normalized threshold mode is mandatory: a raw `ε` is not comparable
/// across chunk sizes. With `chunk_size == n` this degenerates to plain
/// [`swad`] exactly (same seed, same directions, same comparator streams).
pub fn chunked_swad(data: &Dataset, cfg: &FilterConfig) -> Result<FilterReport> {
    if cfg.threshold_mode != ThresholdMode::Normalized {
        return Err(Error::InvalidParameter {
            name: "threshold_mode",
            reason: "chunked filtering requires normalized mode".into(),
        });
    }
    check_data(data, 3)?;
    let n = data.n_samples();
    let chunks = chunk_partition(n, cfg)?;
    let chunk_size = cfg.chunk_size.expect("checked by chunk_partition");
    let votes = cfg.resolve_votes(chunk_size)?;

    let mut scores = vec![0.0f64; n];
    let mut sub_cfg = cfg.clone();
    sub_cfg.chunk_size = None;
    sub_cfg.votes = Some(votes);
    for members in &chunks {
        let mut sub_values = Array2::zeros((members.len(), data.dim()));
        for (local, &orig) in members.iter().enumerate() {
            sub_values.row_mut(local).assign(&data.row(orig));
        }
        let sub = Dataset::new(
            sub_values,
            data.feature_names().to_vec(),
            None,
            data.provenance(),
        )?;
        let report = swad_with_candidate_ids(&sub, &sub_cfg, members)?;
        for (local, &orig) in members.iter().enumerate() {
            scores[orig] = report.scores[local];
        }
    }
    Ok(build_report(scores, cfg, votes))
}

/// The transparent pair statistic: materializes both leave-one-out clouds
/// and evaluates [`sliced_wasserstein`] on them. Exposed for testing and
/// explainability; `swad` computes the same quantity through the presorted
/// gap table.
pub fn pair_statistic_swad(
    data: &Dataset,
    i: usize,
    j: usize,
    order: WassersteinOrder,
    dirs: &DirectionSet,
) -> Result<f64> {
    check_data(data, 3)?;
    let n = data.n_samples();
    for idx in [i, j] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, len: n });
        }
    }
    if i == j {
        return Err(Error::IdenticalIndices { index: i });
    }
    let u = leave_one_out(data, i);
    let v = leave_one_out(data, j);
    sliced_wasserstein(u.view(), v.view(), order, dirs)
}

fn leave_one_out(data: &Dataset, drop: usize) -> Array2<f64> {
    let n = data.n_samples();
    let mut out = Array2::zeros((n - 1, data.dim()));
    let mut k = 0;
    for (i, row) in data.values().rows().into_iter().enumerate() {
        if i != drop {
            out.row_mut(k).assign(&row);
            k += 1;
        }
    }
    out
}
