//! Seeded synthetic dataset generators.
//!
//! `gen_three_gaussians` produces the majority / minority / far-outlier
//! mixture used throughout the filter tests; the toy generators cover the
//! usual 2D shapes (blobs, moons, circles, an anisotropic blob variant,
//! and box-uniform noise). Everything is a pure function of its parameters
//! and the seed.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::{Error, Result};

/// One Gaussian population: size, mean vector, covariance matrix.
#[derive(Debug, Clone)]
pub struct GaussianGroup {
    pub n: usize,
    pub mean: Vec<f64>,
    pub cov: Array2<f64>,
}

impl GaussianGroup {
    pub fn isotropic(n: usize, mean: [f64; 2], variance: f64) -> Self {
        Self {
            n,
            mean: mean.to_vec(),
            cov: Array2::eye(2) * variance,
        }
    }
}

/// Parameters for the three-group mixture: a majority group, a smaller
/// minority group, and a sparse far-away outlier group (the one that gets
/// `truth_labels = true`).
#[derive(Debug, Clone)]
pub struct ThreeGaussiansConfig {
    pub majority: GaussianGroup,
    pub minority: GaussianGroup,
    pub outliers: GaussianGroup,
    pub seed: u64,
}

impl Default for ThreeGaussiansConfig {
    /// Illustrative 2D defaults: a tight majority at the origin, a
    /// displaced minority, and a wide sparse outlier cloud far from both.
    fn default() -> Self {
        Self {
            majority: GaussianGroup::isotropic(300, [0.0, 0.0], 1.0),
            minority: GaussianGroup::isotropic(60, [9.0, 9.0], 1.0),
            outliers: GaussianGroup::isotropic(15, [25.0, -20.0], 36.0),
            seed: 0,
        }
    }
}

/// Lower-triangular factor `L` with `L Lᵀ = cov`, accepting semi-definite
/// matrices (zero pivots allowed). Errors when `cov` is asymmetric or has
/// a negative direction.
fn psd_cholesky(cov: &Array2<f64>, group: usize) -> Result<Array2<f64>> {
    let n = cov.nrows();
    if cov.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: cov.ncols(),
        });
    }
    let scale = cov.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = 1e-9 * scale;
    for i in 0..n {
        for j in 0..i {
            if (cov[(i, j)] - cov[(j, i)]).abs() > tol {
                return Err(Error::NotPositiveSemiDefinite { group });
            }
        }
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = cov[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d > tol {
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = cov[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        } else if d >= -tol {
            // semi-definite: pivot vanishes, the rest of the column must too
            l[(j, j)] = 0.0;
            for i in (j + 1)..n {
                let mut s = cov[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if s.abs() > 1e-6 * scale {
                    return Err(Error::NotPositiveSemiDefinite { group });
                }
                l[(i, j)] = 0.0;
            }
        } else {
            return Err(Error::NotPositiveSemiDefinite { group });
        }
    }
    Ok(l)
}

/// Samples the three-group Gaussian mixture. Rows come out in group order
/// (majority, minority, outliers); the outlier rows carry `true` labels.
pub fn gen_three_gaussians(cfg: &ThreeGaussiansConfig) -> Result<Dataset> {
    let groups = [&cfg.majority, &cfg.minority, &cfg.outliers];
    let total: usize = groups.iter().map(|g| g.n).sum();
    if total == 0 {
        return Err(Error::InvalidParameter {
            name: "sizes",
            reason: "at least one group must be non-empty".into(),
        });
    }
    let d = cfg.majority.mean.len();
    if d == 0 {
        return Err(Error::EmptyInput("mean vector"));
    }
    for g in &groups {
        if g.mean.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: g.mean.len(),
            });
        }
    }
    let factors = [
        psd_cholesky(&groups[0].cov, 0)?,
        psd_cholesky(&groups[1].cov, 1)?,
        psd_cholesky(&groups[2].cov, 2)?,
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut values = Array2::zeros((total, d));
    let mut labels = Vec::with_capacity(total);
    let mut row = 0;
    let mut g = vec![0.0f64; d];
    for (gi, group) in groups.iter().enumerate() {
        let l = &factors[gi];
        for _ in 0..group.n {
            for v in g.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            for i in 0..d {
                let mut x = group.mean[i];
                for k in 0..=i {
                    x += l[(i, k)] * g[k];
                }
                values[(row, i)] = x;
            }
            labels.push(gi == 2);
            row += 1;
        }
    }
    let names = (0..d).map(|j| format!("x{j}")).collect();
    Dataset::new(
        values,
        names,
        Some(labels),
        format!("three_gaussians(seed={})", cfg.seed),
    )
}

/// 2D toy shapes mirroring the usual synthetic benchmark archetypes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ToyKind {
    /// Isotropic Gaussian clusters around `centers` points on a radius-6
    /// circle.
    Blobs { centers: usize },
    /// Two interleaving half-circle arcs.
    Moons,
    /// Concentric circles with inner/outer radius ratio `factor`.
    Circles { factor: f64 },
    /// Blobs sheared by a fixed linear map.
    Anisotropic,
    /// Uniform noise in the `[-6, 6]²` box.
    UniformNoise,
}

fn linspace(start: f64, end: f64, count: usize, endpoint: bool) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let div = if endpoint { count - 1 } else { count } as f64;
            (0..count).map(|i| start + (end - start) * i as f64 / div).collect()
        }
    }
}

/// Generates `n` points of the given shape with additive Gaussian noise
/// of scale `noise`. Deterministic in `seed`; labels are all `false`
/// (the toys plant no outliers).
pub fn gen_toy(kind: ToyKind, n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "sample count must be >= 1".into(),
        });
    }
    if !noise.is_finite() || noise < 0.0 {
        return Err(Error::InvalidParameter {
            name: "noise",
            reason: format!("noise must be a finite real >= 0, got {noise}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Array2::zeros((n, 2));
    let tag: String;

    match kind {
        ToyKind::Blobs { .. } | ToyKind::Anisotropic => {
            let centers = match kind {
                ToyKind::Blobs { centers } => centers,
                _ => 3,
            };
            if centers == 0 {
                return Err(Error::InvalidParameter {
                    name: "centers",
                    reason: "blob generator needs at least one center".into(),
                });
            }
            let cx: Vec<(f64, f64)> = (0..centers)
                .map(|c| {
                    let phi = 2.0 * std::f64::consts::PI * c as f64 / centers as f64;
                    (6.0 * phi.cos(), 6.0 * phi.sin())
                })
                .collect();
            for i in 0..n {
                let (cx0, cx1) = cx[i % centers];
                let gx: f64 = StandardNormal.sample(&mut rng);
                let gy: f64 = StandardNormal.sample(&mut rng);
                values[(i, 0)] = cx0 + noise * gx;
                values[(i, 1)] = cx1 + noise * gy;
            }
            if kind == ToyKind::Anisotropic {
                // fixed shear; applied after noise so clusters stay elongated
                for i in 0..n {
                    let (x, y) = (values[(i, 0)], values[(i, 1)]);
                    values[(i, 0)] = 0.6 * x - 0.6 * y;
                    values[(i, 1)] = -0.4 * x + 0.8 * y;
                }
                tag = "anisotropic".into();
            } else {
                tag = format!("blobs(centers={centers})");
            }
        }
        ToyKind::Moons => {
            let n_out = n / 2;
            let n_in = n - n_out;
            let t_out = linspace(0.0, std::f64::consts::PI, n_out, true);
            let t_in = linspace(0.0, std::f64::consts::PI, n_in, true);
            for (i, t) in t_out.iter().enumerate() {
                values[(i, 0)] = t.cos();
                values[(i, 1)] = t.sin();
            }
            for (i, t) in t_in.iter().enumerate() {
                values[(n_out + i, 0)] = 1.0 - t.cos();
                values[(n_out + i, 1)] = 0.5 - t.sin();
            }
            add_noise(&mut values, noise, &mut rng);
            tag = "moons".into();
        }
        ToyKind::Circles { factor } => {
            if !(factor > 0.0 && factor < 1.0) {
                return Err(Error::InvalidParameter {
                    name: "factor",
                    reason: format!("circle factor must lie in (0, 1), got {factor}"),
                });
            }
            let n_out = n / 2;
            let n_in = n - n_out;
            let t_out = linspace(0.0, 2.0 * std::f64::consts::PI, n_out, false);
            let t_in = linspace(0.0, 2.0 * std::f64::consts::PI, n_in, false);
            for (i, t) in t_out.iter().enumerate() {
                values[(i, 0)] = t.cos();
                values[(i, 1)] = t.sin();
            }
            for (i, t) in t_in.iter().enumerate() {
                values[(n_out + i, 0)] = factor * t.cos();
                values[(n_out + i, 1)] = factor * t.sin();
            }
            add_noise(&mut values, noise, &mut rng);
            tag = format!("circles(factor={factor})");
        }
        ToyKind::UniformNoise => {
            for i in 0..n {
                values[(i, 0)] = -6.0 + 12.0 * rng.random::<f64>();
                values[(i, 1)] = -6.0 + 12.0 * rng.random::<f64>();
            }
            tag = "uniform_noise".into();
        }
    }

    Dataset::new(
        values,
        vec!["x0".into(), "x1".into()],
        Some(vec![false; n]),
        format!("toy:{tag}(n={n},noise={noise},seed={seed})"),
    )
}

fn add_noise(values: &mut Array2<f64>, noise: f64, rng: &mut ChaCha8Rng) {
    if noise == 0.0 {
        return;
    }
    for v in values.iter_mut() {
        let g: f64 = StandardNormal.sample(rng);
        *v += noise * g;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_gaussians_counts_and_labels() {
        let cfg = ThreeGaussiansConfig::default();
        let ds = gen_three_gaussians(&cfg).unwrap();
        assert_eq!(ds.n_samples(), 375);
        assert_eq!(ds.dim(), 2);
        let labels = ds.truth_labels().unwrap();
        assert_eq!(labels.iter().filter(|&&l| l).count(), 15);
        assert!(labels[..360].iter().all(|&l| !l));
    }

    #[test]
    fn three_gaussians_no_outliers_means_no_positive_labels() {
        let mut cfg = ThreeGaussiansConfig::default();
        cfg.outliers.n = 0;
        let ds = gen_three_gaussians(&cfg).unwrap();
        assert!(ds.truth_labels().unwrap().iter().all(|&l| !l));
    }

    #[test]
    fn three_gaussians_reproducible() {
        let cfg = ThreeGaussiansConfig {
            seed: 7,
            ..Default::default()
        };
        let a = gen_three_gaussians(&cfg).unwrap();
        let b = gen_three_gaussians(&cfg).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn three_gaussians_majority_mean_near_parameter() {
        // CLT: per-coordinate sample mean within 4σ/√n of the true mean
        let cfg = ThreeGaussiansConfig {
            seed: 11,
            ..Default::default()
        };
        let ds = gen_three_gaussians(&cfg).unwrap();
        let n = cfg.majority.n;
        let bound = 4.0 / (n as f64).sqrt();
        for j in 0..2 {
            let mean = ds.values().column(j).iter().take(n).sum::<f64>() / n as f64;
            assert!((mean - cfg.majority.mean[j]).abs() < bound, "col {j}: {mean}");
        }
    }

    #[test]
    fn three_gaussians_rejects_non_psd_cov() {
        let mut cfg = ThreeGaussiansConfig::default();
        cfg.minority.cov = ndarray::array![[1.0, 2.0], [2.0, 1.0]];
        assert!(matches!(
            gen_three_gaussians(&cfg),
            Err(Error::NotPositiveSemiDefinite { group: 1 })
        ));
    }

    #[test]
    fn psd_cholesky_accepts_singular_psd() {
        let cov = ndarray::array![[1.0, 1.0], [1.0, 1.0]];
        let l = psd_cholesky(&cov, 0).unwrap();
        let prod = l.dot(&l.t());
        for (a, b) in prod.iter().zip(cov.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn moons_with_zero_noise_lie_on_arcs() {
        let ds = gen_toy(ToyKind::Moons, 31, 0.0, 3).unwrap();
        let n_out = 31 / 2;
        for (i, row) in ds.values().rows().into_iter().enumerate() {
            let (cx, cy) = if i < n_out { (0.0, 0.0) } else { (1.0, 0.5) };
            let r = ((row[0] - cx).powi(2) + (row[1] - cy).powi(2)).sqrt();
            assert!((r - 1.0).abs() < 1e-12, "point {i} off its arc: r={r}");
        }
    }

    #[test]
    fn blobs_single_center_zero_noise_collapses() {
        let ds = gen_toy(ToyKind::Blobs { centers: 1 }, 8, 0.0, 0).unwrap();
        let first = ds.row(0).to_owned();
        for row in ds.values().rows() {
            assert_eq!(row, first.view());
        }
    }

    #[test]
    fn circles_radius_ratio_preserved() {
        let noise = 0.03;
        let ds = gen_toy(ToyKind::Circles { factor: 0.5 }, 100, noise, 5).unwrap();
        let n_out = 50;
        for (i, row) in ds.values().rows().into_iter().enumerate() {
            let r = (row[0] * row[0] + row[1] * row[1]).sqrt();
            let target = if i < n_out { 1.0 } else { 0.5 };
            assert!((r - target).abs() < 6.0 * noise, "point {i}: r={r}");
        }
    }

    #[test]
    fn toys_are_deterministic_in_seed() {
        for kind in [
            ToyKind::Blobs { centers: 3 },
            ToyKind::Moons,
            ToyKind::Circles { factor: 0.5 },
            ToyKind::Anisotropic,
            ToyKind::UniformNoise,
        ] {
            let a = gen_toy(kind, 40, 0.1, 9).unwrap();
            let b = gen_toy(kind, 40, 0.1, 9).unwrap();
            assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn toy_rejects_zero_samples_and_negative_noise() {
        assert!(gen_toy(ToyKind::Moons, 0, 0.0, 0).is_err());
        assert!(gen_toy(ToyKind::Moons, 5, -0.1, 0).is_err());
    }
}
