//! Regularized functional linear regression and lagged regression.
//!
//! The concurrent model Y_t = A(X_t) + eps_t is estimated from the moment
//! identity C^{YX} = A C^X by composing the empirical cross-covariance with a
//! truncated inverse of the empirical covariance:
//!
//! ```text
//! A_hat = C^{YX}_0 . sum_{k <= K} lambda_k^{-1} e_k (x) e_k
//! ```
//!
//! Inverting the covariance is ill-posed, so K (or the cumulative variance
//! fraction tau that selects it) is the regularization knob. The lagged model
//! Y_t = sum_{k=0}^{m} A_k(X_{t-k}) + eps_t reduces to the same estimator on
//! the stacked series Z_t = (X_t, ..., X_{t-m}); the fitted operator splits
//! back into per-lag blocks A_0..A_m.

use serde::{Deserialize, Serialize};

use nalgebra::DMatrix;

use crate::basis::Curve;
use crate::error::{FtsError, Result};
use crate::moments::FtsSample;
use crate::operators::{HsOperator, DEFAULT_EIGEN_FLOOR};

/// Hard cap on the stacked dimension (m + 1) * d.
pub const STACKED_DIM_CAP: usize = 256;

/// Default cumulative variance fraction for automatic K selection.
pub const DEFAULT_TAU: f64 = 0.85;

/// Truncation level for the regularized inverse: fixed K or automatic
/// selection by cumulative variance fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    Fixed(usize),
    Auto { tau: f64 },
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Auto { tau: DEFAULT_TAU }
    }
}

/// Smallest K whose top-K eigenvalues reach fraction tau of the total mass.
/// Negative rounding noise in the tail is clamped to zero.
pub(crate) fn select_k_from_eigenvalues(eigenvalues: &[f64], tau: f64) -> Result<usize> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(FtsError::invalid_argument(format!(
            "tau must lie in (0, 1], got {tau}"
        )));
    }
    let total: f64 = eigenvalues.iter().map(|&l| l.max(0.0)).sum();
    // negated compare also rejects NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(total > 0.0) {
        return Err(FtsError::DegenerateOperator(
            "eigenvalue mass is zero; cannot select K".into(),
        ));
    }
    let mut acc = 0.0;
    for (idx, &l) in eigenvalues.iter().enumerate() {
        acc += l.max(0.0);
        if acc >= tau * total {
            return Ok(idx + 1);
        }
    }
    Ok(eigenvalues.len())
}

/// Selects K on the centered covariance spectrum of `x`.
pub fn select_k(x: &FtsSample, tau: f64) -> Result<usize> {
    let c0 = crate::moments::autocov(x, 0)?;
    let eig = c0.eigendecompose()?;
    select_k_from_eigenvalues(&eig.eigenvalues, tau)
}

/// Centers the columns of a data matrix in place and returns the mean.
fn center_columns(data: &mut DMatrix<f64>) -> nalgebra::DVector<f64> {
    let mu = data.column_mean();
    for mut col in data.column_iter_mut() {
        col -= &mu;
    }
    mu
}

/// Core estimator on centered data matrices (columns are observations).
/// Returns the d_y x d_x coefficient matrix and the truncation actually used.
fn regress_centered(
    yc: &DMatrix<f64>,
    xc: &DMatrix<f64>,
    k: Truncation,
    floor: f64,
) -> Result<(DMatrix<f64>, usize)> {
    let n = xc.ncols() as f64;
    let cxx = HsOperator::new(xc * xc.transpose() / n)?;
    let cyx = yc * xc.transpose() / n;
    let eig = cxx.eigendecompose()?;
    let k_target = match k {
        Truncation::Fixed(k) => {
            if k == 0 || k > cxx.d() {
                return Err(FtsError::invalid_argument(format!(
                    "K must lie in 1..={}, got {k}",
                    cxx.d()
                )));
            }
            k
        }
        Truncation::Auto { tau } => select_k_from_eigenvalues(&eig.eigenvalues, tau)?,
    };
    let (inv, k_used) = cxx.truncated_inverse(k_target, floor)?;
    Ok((cyx * inv.mat(), k_used))
}

/// Fitted concurrent regression.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionFit {
    pub a_hat: HsOperator,
    pub k_used: usize,
    /// Mean squared residual norm (1/N) sum ||Y_t - mu_Y - A_hat(X_t - mu_X)||^2.
    pub residual_variance: f64,
    pub mean_x: Curve,
    pub mean_y: Curve,
}

impl RegressionFit {
    /// Predicts Y_hat_t = mu_Y + A_hat(X_t - mu_X) for every index of `x`.
    pub fn predict(&self, x: &FtsSample) -> Result<FtsSample> {
        if x.d() != self.a_hat.d() {
            return Err(FtsError::DimensionMismatch {
                expected: self.a_hat.d(),
                got: x.d(),
            });
        }
        let mut data = x.data().clone();
        for mut col in data.column_iter_mut() {
            col -= self.mean_x.coeffs();
        }
        let mut out = self.a_hat.mat() * data;
        for mut col in out.column_iter_mut() {
            col += self.mean_y.coeffs();
        }
        FtsSample::from_matrix(out)
    }
}

/// Fits Y_t = A(X_t) + eps_t with the truncated-inverse estimator.
pub fn fit_linear(x: &FtsSample, y: &FtsSample, k: Truncation) -> Result<RegressionFit> {
    fit_linear_with_floor(x, y, k, DEFAULT_EIGEN_FLOOR)
}

pub fn fit_linear_with_floor(
    x: &FtsSample,
    y: &FtsSample,
    k: Truncation,
    floor: f64,
) -> Result<RegressionFit> {
    if x.len() != y.len() {
        return Err(FtsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.d() != y.d() {
        return Err(FtsError::DimensionMismatch {
            expected: x.d(),
            got: y.d(),
        });
    }
    if x.len() < 2 {
        return Err(FtsError::InsufficientData {
            what: "linear regression",
            needed: 2,
            got: x.len(),
        });
    }
    let mut xc = x.data().clone();
    let mut yc = y.data().clone();
    let mean_x = Curve::new(center_columns(&mut xc)).expect("finite by invariant");
    let mean_y = Curve::new(center_columns(&mut yc)).expect("finite by invariant");
    let (a, k_used) = regress_centered(&yc, &xc, k, floor)?;
    let resid = &yc - &a * &xc;
    let residual_variance = resid.norm_squared() / x.len() as f64;
    Ok(RegressionFit {
        a_hat: HsOperator::new(a)?,
        k_used,
        residual_variance,
        mean_x,
        mean_y,
    })
}

/// The stacked series Z_t = (X_t, X_{t-1}, ..., X_{t-m}) for t = m..N-1,
/// in a basis of dimension (m + 1) * d.
#[derive(Debug, Clone)]
pub struct StackedSample {
    pub m: usize,
    pub base_d: usize,
    pub sample: FtsSample,
}

/// Stacks `m + 1` consecutive curves per observation. Observation i of the
/// result corresponds to original time t = m + i; block j holds X_{t-j}.
pub fn stack(x: &FtsSample, m: usize) -> Result<StackedSample> {
    let n = x.len();
    let d = x.d();
    if m + 2 > n {
        return Err(FtsError::InsufficientData {
            what: "stacking",
            needed: m + 2,
            got: n,
        });
    }
    let dim = (m + 1) * d;
    if dim > STACKED_DIM_CAP {
        return Err(FtsError::StackedDimensionCap {
            dim,
            cap: STACKED_DIM_CAP,
        });
    }
    let len = n - m;
    let mut data = DMatrix::zeros(dim, len);
    for i in 0..len {
        let t = m + i;
        for j in 0..=m {
            data.view_mut((j * d, i), (d, 1))
                .copy_from(&x.data().column(t - j));
        }
    }
    Ok(StackedSample {
        m,
        base_d: d,
        sample: FtsSample::from_matrix(data)?,
    })
}

/// A finitely supported operator filter sum_k A_k applied by convolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LinearFilterRepr", into = "LinearFilterRepr")]
pub struct LinearFilter {
    k_min: i64,
    ops: Vec<HsOperator>,
}

#[derive(Serialize, Deserialize)]
struct LagOpRepr {
    lag: i64,
    op: HsOperator,
}

/// Serialized form: the support plus one operator per lag.
#[derive(Serialize, Deserialize)]
struct LinearFilterRepr {
    support: (i64, i64),
    ops: Vec<LagOpRepr>,
}

impl From<LinearFilter> for LinearFilterRepr {
    fn from(f: LinearFilter) -> Self {
        let support = f.support();
        let ops = f
            .ops
            .iter()
            .enumerate()
            .map(|(i, op)| LagOpRepr {
                lag: f.k_min + i as i64,
                op: op.clone(),
            })
            .collect();
        LinearFilterRepr { support, ops }
    }
}

impl TryFrom<LinearFilterRepr> for LinearFilter {
    type Error = FtsError;

    fn try_from(repr: LinearFilterRepr) -> Result<Self> {
        let (k_min, k_max) = repr.support;
        let want = (k_max - k_min + 1) as usize;
        if k_max < k_min || repr.ops.len() != want {
            return Err(FtsError::Format(format!(
                "filter support [{k_min}, {k_max}] needs {want} operators, got {}",
                repr.ops.len()
            )));
        }
        let mut slots: Vec<Option<HsOperator>> = vec![None; want];
        for entry in repr.ops {
            if entry.lag < k_min || entry.lag > k_max {
                return Err(FtsError::Format(format!(
                    "filter lag {} outside support [{k_min}, {k_max}]",
                    entry.lag
                )));
            }
            let idx = (entry.lag - k_min) as usize;
            if slots[idx].replace(entry.op).is_some() {
                return Err(FtsError::Format(format!("duplicate filter lag {}", entry.lag)));
            }
        }
        let ops = slots
            .into_iter()
            .map(|s| s.ok_or_else(|| FtsError::Format("missing filter lag".into())))
            .collect::<Result<Vec<_>>>()?;
        LinearFilter::new(k_min, ops)
    }
}

impl LinearFilter {
    /// Dense filter over the contiguous support starting at `k_min`.
    pub fn new(k_min: i64, ops: Vec<HsOperator>) -> Result<Self> {
        if ops.is_empty() {
            return Err(FtsError::invalid_argument("filter needs at least one lag"));
        }
        let d = ops[0].d();
        if ops.iter().any(|op| op.d() != d) {
            return Err(FtsError::invalid_argument(
                "filter operators must share one dimension",
            ));
        }
        Ok(Self { k_min, ops })
    }

    /// Causal filter with lags 0..ops.len().
    pub fn causal(ops: Vec<HsOperator>) -> Result<Self> {
        Self::new(0, ops)
    }

    /// Inclusive support interval `[k_min, k_max]`.
    pub fn support(&self) -> (i64, i64) {
        (self.k_min, self.k_min + self.ops.len() as i64 - 1)
    }

    pub fn d(&self) -> usize {
        self.ops[0].d()
    }

    /// Operator at lag k, if k lies in the support.
    pub fn op(&self, k: i64) -> Option<&HsOperator> {
        let idx = k.checked_sub(self.k_min)?;
        if idx < 0 {
            return None;
        }
        self.ops.get(idx as usize)
    }

    /// Iterates `(k, A_k)` across the support.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &HsOperator)> {
        self.ops
            .iter()
            .enumerate()
            .map(|(i, op)| (self.k_min + i as i64, op))
    }

    /// sqrt(sum_k ||A_k||_HS^2), the Hilbert-Schmidt norm on the product space.
    pub fn hs_norm(&self) -> f64 {
        self.ops
            .iter()
            .map(|op| op.hs_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Total Hilbert-Schmidt distance to another filter, treating lags
    /// outside either support as zero operators.
    pub fn hs_distance(&self, other: &Self) -> Result<f64> {
        if self.d() != other.d() {
            return Err(FtsError::DimensionMismatch {
                expected: self.d(),
                got: other.d(),
            });
        }
        let (a_lo, a_hi) = self.support();
        let (b_lo, b_hi) = other.support();
        let mut acc = 0.0;
        for k in a_lo.min(b_lo)..=a_hi.max(b_hi) {
            let zero = HsOperator::zero(self.d());
            let a = self.op(k).unwrap_or(&zero);
            let b = other.op(k).unwrap_or(&zero);
            acc += a.sub(b)?.hs_norm().powi(2);
        }
        Ok(acc.sqrt())
    }

    /// Zero-mean convolution: (filter * x)_t = sum_k A_k(x_{t-k}) on the
    /// indices where the whole support is observed.
    pub fn apply(&self, x: &FtsSample) -> Result<Filtered> {
        if x.d() != self.d() {
            return Err(FtsError::DimensionMismatch {
                expected: self.d(),
                got: x.d(),
            });
        }
        let (k_min, k_max) = self.support();
        let n = x.len() as i64;
        let start = k_max.max(0);
        let end = n - 1 + k_min.min(0);
        if start > end {
            return Err(FtsError::InsufficientData {
                what: "filter application",
                needed: (k_max - k_min.min(0)) as usize + 1,
                got: x.len(),
            });
        }
        let len = (end - start + 1) as usize;
        let mut out = DMatrix::zeros(self.d(), len);
        for (k, op) in self.iter() {
            // lag-k source columns cover start - k .. end - k
            out += op.mat() * x.data().columns((start - k) as usize, len);
        }
        Ok(Filtered {
            sample: FtsSample::from_matrix(out)?,
            start: start as usize,
        })
    }

    /// Filter convolution: (self * other)_k = sum_j self_j . other_{k-j}.
    /// Applying the result equals applying `other` then `self`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        if self.d() != other.d() {
            return Err(FtsError::DimensionMismatch {
                expected: self.d(),
                got: other.d(),
            });
        }
        let (a_lo, a_hi) = self.support();
        let (b_lo, b_hi) = other.support();
        let lo = a_lo + b_lo;
        let hi = a_hi + b_hi;
        let mut ops = vec![HsOperator::zero(self.d()); (hi - lo + 1) as usize];
        for (j, a) in self.iter() {
            for (i, b) in other.iter() {
                let idx = (j + i - lo) as usize;
                ops[idx] = ops[idx].add(&a.compose(b)?)?;
            }
        }
        LinearFilter::new(lo, ops)
    }
}

/// Output of a filter application: `sample[i]` corresponds to input index
/// `start + i`.
#[derive(Debug, Clone)]
pub struct Filtered {
    pub sample: FtsSample,
    pub start: usize,
}

/// Fitted lagged regression: a filter plus the means used for prediction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaggedFit {
    pub filter: LinearFilter,
    pub k_used: usize,
    /// Mean squared residual norm over the indices the filter can predict.
    pub residual_variance: f64,
    pub mean_x: Curve,
    pub mean_y: Curve,
}

impl LaggedFit {
    /// Predicts Y_hat_t = mu_Y + sum_k A_k(X_{t-k} - mu_X) on the valid range.
    ///
    /// `mu_X`, `mu_Y` are the full-sample means stored at fit time. The
    /// time-domain estimator centers each stacked block over its own window
    /// internally, so predictions carry an O(m/N) intercept residue even on
    /// noiseless training data.
    pub fn predict(&self, x: &FtsSample) -> Result<Filtered> {
        let mut centered = x.data().clone();
        for mut col in centered.column_iter_mut() {
            col -= self.mean_x.coeffs();
        }
        let filtered = self.filter.apply(&FtsSample::from_matrix(centered)?)?;
        let mut data = filtered.sample.data().clone();
        for mut col in data.column_iter_mut() {
            col += self.mean_y.coeffs();
        }
        Ok(Filtered {
            sample: FtsSample::from_matrix(data)?,
            start: filtered.start,
        })
    }
}

/// Mean squared prediction error of a lagged fit over the aligned pair,
/// restricted to indices in `[from, to)` that the filter can reach.
pub fn prediction_mse(
    fit: &LaggedFit,
    x: &FtsSample,
    y: &FtsSample,
    from: usize,
    to: usize,
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(FtsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let pred = fit.predict(x)?;
    let pred_end = pred.start + pred.sample.len();
    let lo = from.max(pred.start);
    let hi = to.min(pred_end);
    if lo >= hi {
        return Err(FtsError::InsufficientData {
            what: "prediction window",
            needed: 1,
            got: 0,
        });
    }
    let mut acc = 0.0;
    for t in lo..hi {
        let diff = y.data().column(t) - pred.sample.data().column(t - pred.start);
        acc += diff.norm_squared();
    }
    Ok(acc / (hi - lo) as f64)
}

/// Fits the lagged model Y_t = sum_{k=0}^{m} A_k(X_{t-k}) + eps_t by
/// regressing on the stacked series and unpacking the per-lag blocks.
pub fn fit_lagged_timedomain(
    x: &FtsSample,
    y: &FtsSample,
    m: usize,
    k: Truncation,
) -> Result<LaggedFit> {
    fit_lagged_timedomain_with_floor(x, y, m, k, DEFAULT_EIGEN_FLOOR)
}

pub fn fit_lagged_timedomain_with_floor(
    x: &FtsSample,
    y: &FtsSample,
    m: usize,
    k: Truncation,
    floor: f64,
) -> Result<LaggedFit> {
    if x.len() != y.len() {
        return Err(FtsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.d() != y.d() {
        return Err(FtsError::DimensionMismatch {
            expected: x.d(),
            got: y.d(),
        });
    }
    let d = x.d();
    let stacked = stack(x, m)?;
    let len = stacked.sample.len();
    // align Y with the stacked observations (original times m..N-1)
    let mut yc = y.data().columns(m, len).into_owned();
    let mut zc = stacked.sample.data().clone();
    center_columns(&mut zc);
    center_columns(&mut yc);
    let (b, k_used) = regress_centered(&yc, &zc, k, floor)?;
    let resid = &yc - &b * &zc;
    let residual_variance = resid.norm_squared() / len as f64;
    let ops = (0..=m)
        .map(|j| HsOperator::new(b.view((0, j * d), (d, d)).into_owned()))
        .collect::<Result<Vec<_>>>()?;
    Ok(LaggedFit {
        filter: LinearFilter::causal(ops)?,
        k_used,
        residual_variance,
        mean_x: x.mean(),
        mean_y: y.mean(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample_from_rows(rows: &[Vec<f64>]) -> FtsSample {
        let curves: Vec<Curve> = rows
            .iter()
            .map(|r| Curve::from_slice(r).unwrap())
            .collect();
        FtsSample::new(&curves).unwrap()
    }

    /// Deterministic pseudo-random sample (linear congruential), full rank.
    fn lcg_sample(d: usize, n: usize, seed: u64) -> FtsSample {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (u32::MAX as f64) * 2.0 - 1.0
        };
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| next()).collect())
            .collect();
        sample_from_rows(&rows)
    }

    #[test]
    fn select_k_equal_eigenvalues_takes_the_ceiling() {
        let eigs = vec![1.0; 10];
        assert_eq!(select_k_from_eigenvalues(&eigs, 0.85).unwrap(), 9);
        assert_eq!(select_k_from_eigenvalues(&eigs, 1.0).unwrap(), 10);
        assert_eq!(select_k_from_eigenvalues(&eigs, 0.05).unwrap(), 1);
    }

    #[test]
    fn select_k_rejects_bad_tau_and_zero_mass() {
        assert!(select_k_from_eigenvalues(&[1.0], 0.0).is_err());
        assert!(select_k_from_eigenvalues(&[1.0], 1.5).is_err());
        assert!(select_k_from_eigenvalues(&[0.0, 0.0], 0.9).is_err());
    }

    #[test]
    fn fit_recovers_identity_exactly() {
        let x = lcg_sample(3, 200, 7);
        let fit = fit_linear(&x, &x, Truncation::Fixed(3)).unwrap();
        let err = fit.a_hat.sub(&HsOperator::identity(3)).unwrap().hs_norm();
        assert!(err < 1e-10, "identity recovery error {err}");
        assert!(fit.residual_variance < 1e-20);
        assert_eq!(fit.k_used, 3);
    }

    #[test]
    fn fit_recovers_known_operator_without_noise() {
        let a = HsOperator::from_row_slice(
            3,
            &[0.4, -0.2, 0.1, 0.0, 0.3, -0.5, 0.25, 0.1, -0.1],
        )
        .unwrap();
        let x = lcg_sample(3, 500, 13);
        let y = FtsSample::from_matrix(a.mat() * x.data()).unwrap();
        let fit = fit_linear(&x, &y, Truncation::Fixed(3)).unwrap();
        assert!(fit.a_hat.sub(&a).unwrap().hs_norm() < 1e-9);
        assert!(fit.residual_variance < 1e-18);
    }

    #[test]
    fn predict_with_zero_operator_returns_the_mean() {
        let x = lcg_sample(2, 50, 3);
        let y = lcg_sample(2, 50, 4);
        let fit = RegressionFit {
            a_hat: HsOperator::zero(2),
            k_used: 1,
            residual_variance: 0.0,
            mean_x: x.mean(),
            mean_y: y.mean(),
        };
        let pred = fit.predict(&x).unwrap();
        for t in 0..50 {
            let diff = pred.data().column(t) - y.mean().coeffs();
            assert!(diff.norm() < 1e-14);
        }
    }

    #[test]
    fn stacking_shapes_and_cap() {
        let x = lcg_sample(2, 10, 11);
        let s = stack(&x, 1).unwrap();
        assert_eq!(s.sample.len(), 9);
        assert_eq!(s.sample.d(), 4);
        // block order: Z_t = (X_t, X_{t-1})
        let z0 = s.sample.curve(0).unwrap();
        let x1 = x.curve(1).unwrap();
        let x0 = x.curve(0).unwrap();
        assert_eq!(z0.coeffs()[0], x1.coeffs()[0]);
        assert_eq!(z0.coeffs()[2], x0.coeffs()[0]);

        // N = 3 with m = 1 leaves two stacked curves
        let tiny = lcg_sample(2, 3, 1);
        assert_eq!(stack(&tiny, 1).unwrap().sample.len(), 2);
        assert!(stack(&tiny, 2).is_err());

        let wide = lcg_sample(32, 20, 5);
        assert!(stack(&wide, 7).is_ok());
        assert!(matches!(
            stack(&wide, 8),
            Err(FtsError::StackedDimensionCap { dim: 288, cap: 256 })
        ));
    }

    #[test]
    fn lagged_fit_with_m0_equals_fit_linear() {
        let x = lcg_sample(3, 120, 17);
        let a = HsOperator::from_row_slice(3, &[0.5, 0.1, 0.0, -0.2, 0.3, 0.2, 0.0, 0.1, 0.4])
            .unwrap();
        let y = FtsSample::from_matrix(a.mat() * x.data()).unwrap();
        let lagged = fit_lagged_timedomain(&x, &y, 0, Truncation::Fixed(3)).unwrap();
        let linear = fit_linear(&x, &y, Truncation::Fixed(3)).unwrap();
        let diff = lagged
            .filter
            .op(0)
            .unwrap()
            .sub(&linear.a_hat)
            .unwrap()
            .hs_norm();
        assert!(diff < 1e-12, "m=0 reduction differs by {diff}");
        assert_abs_diff_eq!(
            lagged.residual_variance,
            linear.residual_variance,
            epsilon = 1e-12
        );
    }

    #[test]
    fn lagged_fit_recovers_pure_shift() {
        let x = lcg_sample(3, 400, 23);
        // Y_t = X_{t-1}: build aligned pair by shifting
        let n = x.len();
        let y = FtsSample::from_matrix(x.data().columns(0, n - 1).into_owned()).unwrap();
        let x_al = FtsSample::from_matrix(x.data().columns(1, n - 1).into_owned()).unwrap();
        let fit = fit_lagged_timedomain(&x_al, &y, 1, Truncation::Fixed(6)).unwrap();
        let a0 = fit.filter.op(0).unwrap();
        let a1 = fit.filter.op(1).unwrap();
        assert!(a0.hs_norm() < 1e-8, "A_0 = {}", a0.hs_norm());
        assert!(
            a1.sub(&HsOperator::identity(3)).unwrap().hs_norm() < 1e-8,
            "A_1 error = {}",
            a1.sub(&HsOperator::identity(3)).unwrap().hs_norm()
        );
    }

    #[test]
    fn filter_apply_shifts_and_respects_support() {
        let x = lcg_sample(2, 6, 29);
        let shift = LinearFilter::new(1, vec![HsOperator::identity(2)]).unwrap();
        let out = shift.apply(&x).unwrap();
        assert_eq!(out.start, 1);
        assert_eq!(out.sample.len(), 5);
        for t in 0..5 {
            let diff = out.sample.data().column(t) - x.data().column(t);
            assert_eq!(diff.norm(), 0.0);
        }

        let twosided = LinearFilter::new(-1, vec![HsOperator::identity(2); 3]).unwrap();
        let out2 = twosided.apply(&x).unwrap();
        assert_eq!(out2.start, 1);
        assert_eq!(out2.sample.len(), 4);
        // value at output 0 (input t = 1) is x_0 + x_1 + x_2
        let want = x.data().column(0) + x.data().column(1) + x.data().column(2);
        assert!((out2.sample.data().column(0) - want).norm() < 1e-14);
    }

    #[test]
    fn filter_apply_needs_enough_history() {
        let x = lcg_sample(2, 3, 31);
        let wide = LinearFilter::new(0, vec![HsOperator::identity(2); 4]).unwrap();
        assert!(matches!(
            wide.apply(&x),
            Err(FtsError::InsufficientData { .. })
        ));
    }

    #[test]
    fn convolution_matches_sequential_application() {
        let a = LinearFilter::new(
            0,
            vec![
                HsOperator::from_row_slice(2, &[0.5, 0.1, -0.2, 0.3]).unwrap(),
                HsOperator::from_row_slice(2, &[0.0, 0.2, 0.1, -0.1]).unwrap(),
            ],
        )
        .unwrap();
        let b = LinearFilter::new(
            -1,
            vec![
                HsOperator::from_row_slice(2, &[0.3, 0.0, 0.0, 0.4]).unwrap(),
                HsOperator::from_row_slice(2, &[0.1, -0.3, 0.2, 0.0]).unwrap(),
            ],
        )
        .unwrap();
        let x = lcg_sample(2, 12, 37);
        let seq = a.apply(&b.apply(&x).unwrap().sample).unwrap();
        let conv = a.convolve(&b).unwrap().apply(&x).unwrap();
        assert_eq!(conv.sample.len(), seq.sample.len());
        for t in 0..conv.sample.len() {
            let diff = conv.sample.data().column(t) - seq.sample.data().column(t);
            assert!(diff.norm() < 1e-12);
        }
    }

    #[test]
    fn filter_json_roundtrip_preserves_support() {
        let f = LinearFilter::new(
            -1,
            vec![
                HsOperator::identity(2),
                HsOperator::zero(2),
                HsOperator::from_row_slice(2, &[0.0, 1.0, -1.0, 0.0]).unwrap(),
            ],
        )
        .unwrap();
        let json = serde_json::to_string(&f).unwrap();
        let back: LinearFilter = serde_json::from_str(&json).unwrap();
        assert_eq!(f, back);
        assert_eq!(back.support(), (-1, 1));
    }

    #[test]
    fn hs_distance_handles_disjoint_supports() {
        let a = LinearFilter::new(0, vec![HsOperator::identity(2)]).unwrap();
        let b = LinearFilter::new(2, vec![HsOperator::identity(2)]).unwrap();
        let dist = a.hs_distance(&b).unwrap();
        assert_abs_diff_eq!(dist, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a.hs_distance(&a).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn prediction_mse_on_noiseless_model_is_tiny() {
        let x = lcg_sample(2, 100, 41);
        let a0 = HsOperator::from_row_slice(2, &[0.6, 0.0, 0.1, 0.4]).unwrap();
        let a1 = HsOperator::from_row_slice(2, &[0.2, -0.1, 0.0, 0.3]).unwrap();
        let truth = LinearFilter::causal(vec![a0, a1]).unwrap();
        let filtered = truth.apply(&x).unwrap();
        let x_al = x.slice(filtered.start, filtered.start + filtered.sample.len()).unwrap();
        let fit = fit_lagged_timedomain(&x_al, &filtered.sample, 1, Truncation::Fixed(4)).unwrap();
        // operators are recovered exactly; the prediction intercept carries
        // an O(m/N) residue from the window vs full-sample centering
        assert!(fit.filter.hs_distance(&truth).unwrap() < 1e-8);
        let n = x_al.len();
        let mse = prediction_mse(&fit, &x_al, &filtered.sample, (n * 4) / 5, n).unwrap();
        assert!(mse < 1e-3, "mse = {mse}");
    }
}
