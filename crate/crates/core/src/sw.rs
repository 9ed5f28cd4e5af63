//! Exact 1D order-`t` Wasserstein distance and its sliced extension.
//!
//! Between two uniform empirical distributions with the same number of
//! atoms, the 1D Wasserstein distance has a closed form: sort both sides
//! and match atoms in order,
//!
//! ```text
//! W_t(x, y) = ( (1/m) Σ_i |x_(i) - y_(i)|^t )^(1/t)
//! ```
//!
//! The sliced distance projects both point clouds onto `L` random unit
//! directions, computes the 1D distance per projection, and averages
//! the `t`-th powers,
//!
//! ```text
//! SW_t(U, V) ≈ ( (1/L) Σ_l W_t(U·θ_l, V·θ_l)^t )^(1/t)
//! ```
//!
//! Directions are drawn uniformly on the unit sphere (normalized standard
//! Gaussians) from a seeded generator, so any `(d, L, seed)` triple always
//! reproduces the same [`DirectionSet`]. All summations run in fixed index
//! order; results are bit-stable across runs and thread counts.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance for accepting a caller-supplied direction as unit length.
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// `|x|^t`, specialized for the common orders.
#[inline]
pub(crate) fn pow_abs(x: f64, t: f64) -> f64 {
    let a = x.abs();
    if t == 1.0 {
        a
    } else if t == 2.0 {
        a * a
    } else {
        a.powf(t)
    }
}

/// `x^(1/t)` for non-negative `x`, specialized for the common orders.
#[inline]
pub(crate) fn root(x: f64, t: f64) -> f64 {
    if t == 1.0 {
        x
    } else if t == 2.0 {
        x.sqrt()
    } else {
        x.powf(1.0 / t)
    }
}

/// Order `t ≥ 1` of the Wasserstein cost. The ground norm is Euclidean
/// throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct WassersteinOrder(f64);

impl WassersteinOrder {
    pub fn new(t: f64) -> Result<Self> {
        if !t.is_finite() || t < 1.0 {
            return Err(Error::InvalidParameter {
                name: "t",
                reason: format!("order must be a finite real >= 1, got {t}"),
            });
        }
        Ok(Self(t))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for WassersteinOrder {
    fn default() -> Self {
        Self(1.0)
    }
}

impl TryFrom<f64> for WassersteinOrder {
    type Error = Error;
    fn try_from(t: f64) -> Result<Self> {
        Self::new(t)
    }
}

impl From<WassersteinOrder> for f64 {
    fn from(o: WassersteinOrder) -> f64 {
        o.0
    }
}

/// A projected sample held in ascending order, ready for the 1D closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection1D {
    values: Vec<f64>,
}

impl Projection1D {
    /// Sorts `values` ascending. Errors on empty input.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("projection"));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `L` unit vectors on the sphere `S^(d-1)`, reproducible from `(d, L, seed)`.
///
/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    directions: Array2<f64>,
    seed: u64,
}

impl DirectionSet {
    /// Ambient dimension `d`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.directions.ncols()
    }

    /// Number of directions `L`.
    #[inline]
    pub fn len(&self) -> usize {
        self.directions.nrows()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.directions.nrows() == 0
    }

    /// Seed the set was generated from.
    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// All directions as an `L × d` view.
    #[inline]
    pub fn directions(&self) -> ArrayView2<'_, f64> {
        self.directions.view()
    }

    /// The `l`-th direction.
    #[inline]
    pub fn direction(&self, l: usize) -> ArrayView1<'_, f64> {
        self.directions.row(l)
    }

    pub fn iter(&self) -> impl Iterator<Item = ArrayView1<'_, f64>> {
        self.directions.rows().into_iter()
    }
}

/// Draws `count` directions uniformly on `S^(d-1)`.
///
/// Each direction is a standard-normal vector normalized to unit length;
/// near-zero draws are rejected and redrawn. Deterministic in `seed`.
pub fn sample_directions(d: usize, count: usize, seed: u64) -> Result<DirectionSet> {
    if d == 0 {
        return Err(Error::InvalidParameter {
            name: "d",
            reason: "dimension must be >= 1".into(),
        });
    }
    if count == 0 {
        return Err(Error::InvalidParameter {
            name: "L",
            reason: "direction count must be >= 1".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut directions = Array2::zeros((count, d));
    let mut buf = vec![0.0f64; d];
    for l in 0..count {
        loop {
            for v in buf.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let norm = buf.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                for (j, v) in buf.iter().enumerate() {
                    directions[(l, j)] = v / norm;
                }
                break;
            }
        }
    }
    Ok(DirectionSet { directions, seed })
}

/// Projects every row of `points` onto `direction` (row order preserved).
///
/// `direction` must have unit norm within [`UNIT_NORM_TOL`] and match the
/// column count of `points`.
pub fn project(points: ArrayView2<'_, f64>, direction: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
    if direction.len() != points.ncols() {
        return Err(Error::DimensionMismatch {
            expected: points.ncols(),
            actual: direction.len(),
        });
    }
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::NotUnitLength { norm });
    }
    Ok(points.rows().into_iter().map(|row| row.dot(&direction)).collect())
}

/// Exact order-`t` Wasserstein distance between two equal-size uniform
/// empirical distributions on the line.
///
/// Both inputs are copied and sorted; see [`wasserstein_1d_presorted`] to
/// skip the sort. Symmetric in its arguments and zero exactly when the
/// sorted sequences coincide.
pub fn wasserstein_1d(xs: &[f64], ys: &[f64], order: WassersteinOrder) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptyInput("wasserstein_1d"));
    }
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let xs = Projection1D::new(xs.to_vec())?;
    let ys = Projection1D::new(ys.to_vec())?;
    wasserstein_1d_presorted(&xs, &ys, order)
}

/// The 1D closed form on already-sorted inputs.
pub fn wasserstein_1d_presorted(
    xs: &Projection1D,
    ys: &Projection1D,
    order: WassersteinOrder,
) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let t = order.get();
    let m = xs.len() as f64;
    let mut acc = 0.0;
    for (x, y) in xs.values().iter().zip(ys.values()) {
        acc += pow_abs(x - y, t);
    }
    Ok(root(acc / m, t))
}

/// Monte-Carlo sliced-Wasserstein distance between two equal-size point
/// clouds, using the shared `dirs` projections.
///
/// Symmetric in `u` and `v`; zero when both contain the same multiset of
/// rows. The estimate is deterministic given `(u, v, order, dirs)`.
pub fn sliced_wasserstein(
    u: ArrayView2<'_, f64>,
    v: ArrayView2<'_, f64>,
    order: WassersteinOrder,
    dirs: &DirectionSet,
) -> Result<f64> {
    if u.nrows() != v.nrows() {
        return Err(Error::LengthMismatch {
            left: u.nrows(),
            right: v.nrows(),
        });
    }
    if u.nrows() == 0 {
        return Err(Error::EmptyInput("sliced_wasserstein"));
    }
    if u.ncols() != dirs.dim() || v.ncols() != dirs.dim() {
        return Err(Error::DimensionMismatch {
            expected: dirs.dim(),
            actual: if u.ncols() != dirs.dim() { u.ncols() } else { v.ncols() },
        });
    }
    let t = order.get();
    let mut acc = 0.0;
    for theta in dirs.iter() {
        let pu = Projection1D::new(project(u, theta)?)?;
        let pv = Projection1D::new(project(v, theta)?)?;
        let w = wasserstein_1d_presorted(&pu, &pv, order)?;
        acc += pow_abs(w, t);
    }
    Ok(root(acc / dirs.len() as f64, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn order(t: f64) -> WassersteinOrder {
        WassersteinOrder::new(t).unwrap()
    }

    #[test]
    fn project_axis_aligned() {
        let pts = array![[1.0, 2.0], [3.0, 4.0]];
        let dir = array![1.0, 0.0];
        assert_eq!(project(pts.view(), dir.view()).unwrap(), vec![1.0, 3.0]);
    }

    #[test]
    fn project_diagonal() {
        let pts = array![[1.0, 1.0]];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let dir = array![s, s];
        let p = project(pts.view(), dir.view()).unwrap();
        assert!((p[0] - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn project_sign_flip_in_1d() {
        let pts = array![[5.0], [-2.0]];
        let dir = array![-1.0];
        assert_eq!(project(pts.view(), dir.view()).unwrap(), vec![-5.0, 2.0]);
    }

    #[test]
    fn project_rejects_dimension_mismatch() {
        let pts = array![[1.0, 2.0]];
        let dir = array![1.0, 0.0, 0.0];
        assert!(matches!(
            project(pts.view(), dir.view()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn project_rejects_non_unit_direction() {
        let pts = array![[1.0, 2.0]];
        let dir = array![1.0, 1.0];
        assert!(matches!(
            project(pts.view(), dir.view()),
            Err(Error::NotUnitLength { .. })
        ));
    }

    #[test]
    fn w1d_identical_inputs_are_zero() {
        for t in [1.0, 2.0, 3.5] {
            let xs = [0.3, 7.0, -1.0];
            assert_eq!(wasserstein_1d(&xs, &xs, order(t)).unwrap(), 0.0);
        }
    }

    #[test]
    fn w1d_single_atom_displacement() {
        assert_eq!(wasserstein_1d(&[0.0], &[3.0], order(1.0)).unwrap(), 3.0);
    }

    #[test]
    fn w1d_monotone_matching() {
        // ((1^2 + 1^2)/2)^(1/2) = 1
        let w = wasserstein_1d(&[0.0, 1.0], &[1.0, 2.0], order(2.0)).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
    }

    #[test]
    fn w1d_cross_matching_instance() {
        // brute-force minimum over both matchings of {0,2} -> {1,1} is 1 at t=1
        let w = wasserstein_1d(&[0.0, 2.0], &[1.0, 1.0], order(1.0)).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
    }

    #[test]
    fn w1d_rejects_unequal_lengths_and_empty() {
        assert!(matches!(
            wasserstein_1d(&[1.0], &[1.0, 2.0], order(1.0)),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            wasserstein_1d(&[], &[], order(1.0)),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn directions_are_unit_and_reproducible() {
        let a = sample_directions(3, 1000, 42).unwrap();
        let b = sample_directions(3, 1000, 42).unwrap();
        assert_eq!(a, b);
        for theta in a.iter() {
            let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn directions_in_1d_are_signs() {
        let dirs = sample_directions(1, 64, 7).unwrap();
        for theta in dirs.iter() {
            assert!(theta[0] == 1.0 || theta[0] == -1.0);
        }
    }

    #[test]
    fn direction_sample_mean_is_near_zero() {
        // CLT over the uniform sphere: ||mean|| concentrates at 1/sqrt(L),
        // so 0.02 leaves a factor-6 margin at L = 100000
        let dirs = sample_directions(2, 100_000, 31).unwrap();
        let mut mean = [0.0f64; 2];
        for theta in dirs.iter() {
            mean[0] += theta[0];
            mean[1] += theta[1];
        }
        let l = dirs.len() as f64;
        let norm = (mean[0] * mean[0] + mean[1] * mean[1]).sqrt() / l;
        assert!(norm < 0.02, "empirical mean norm {norm}");
    }

    #[test]
    fn directions_reject_zero_sizes() {
        assert!(sample_directions(0, 5, 0).is_err());
        assert!(sample_directions(2, 0, 0).is_err());
    }

    #[test]
    fn sw_zero_on_permuted_rows() {
        let u = array![[0.0, 1.0], [2.0, -1.0], [4.0, 4.0]];
        let v = array![[4.0, 4.0], [0.0, 1.0], [2.0, -1.0]];
        let dirs = sample_directions(2, 32, 5).unwrap();
        let d = sliced_wasserstein(u.view(), v.view(), order(1.0), &dirs).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn sw_in_1d_equals_closed_form() {
        let u = array![[0.0], [1.0], [5.0]];
        let v = array![[2.0], [2.0], [3.0]];
        let dirs = sample_directions(1, 17, 9).unwrap();
        for t in [1.0, 2.0] {
            let sw = sliced_wasserstein(u.view(), v.view(), order(t), &dirs).unwrap();
            let w = wasserstein_1d(&[0.0, 1.0, 5.0], &[2.0, 2.0, 3.0], order(t)).unwrap();
            assert!((sw - w).abs() < 1e-12, "t={t}: {sw} vs {w}");
        }
    }

    #[test]
    fn sw_translation_invariance() {
        let u = array![[0.0, 0.0], [1.0, 0.5], [0.2, 2.0]];
        let v = array![[3.0, 1.0], [0.0, 0.1], [1.0, 1.0]];
        let shift = array![[10.0, -4.0], [10.0, -4.0], [10.0, -4.0]];
        let dirs = sample_directions(2, 25, 3).unwrap();
        let base = sliced_wasserstein(u.view(), v.view(), order(1.0), &dirs).unwrap();
        let us = &u + &shift;
        let vs = &v + &shift;
        let shifted = sliced_wasserstein(us.view(), vs.view(), order(1.0), &dirs).unwrap();
        assert!((base - shifted).abs() < 1e-12);
    }

    #[test]
    fn sw_homogeneity() {
        let u = array![[0.0, 0.0], [1.0, 0.5], [0.2, 2.0]];
        let v = array![[3.0, 1.0], [0.0, 0.1], [1.0, 1.0]];
        let dirs = sample_directions(2, 25, 3).unwrap();
        for t in [1.0, 2.0] {
            let base = sliced_wasserstein(u.view(), v.view(), order(t), &dirs).unwrap();
            let ua = u.mapv(|x| -2.5 * x);
            let va = v.mapv(|x| -2.5 * x);
            let scaled = sliced_wasserstein(ua.view(), va.view(), order(t), &dirs).unwrap();
            assert!((scaled - 2.5 * base).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn sw_rejects_size_and_dim_mismatch() {
        let u = array![[0.0, 0.0], [1.0, 0.5]];
        let v = array![[3.0, 1.0]];
        let dirs = sample_directions(2, 4, 0).unwrap();
        assert!(matches!(
            sliced_wasserstein(u.view(), v.view(), WassersteinOrder::default(), &dirs),
            Err(Error::LengthMismatch { .. })
        ));
        let w = array![[3.0, 1.0, 0.0], [0.0, 0.0, 0.0]];
        assert!(matches!(
            sliced_wasserstein(u.view(), w.view(), WassersteinOrder::default(), &dirs),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn order_validation() {
        assert!(WassersteinOrder::new(0.5).is_err());
        assert!(WassersteinOrder::new(f64::NAN).is_err());
        assert!(WassersteinOrder::new(1.0).is_ok());
    }
}
