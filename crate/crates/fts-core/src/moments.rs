//! Empirical moments of a functional time series.
//!
//! For a sample X_1..X_N of coefficient curves the lag-h autocovariance
//! operator is estimated as
//!
//! ```text
//! C_h = (1/N) * sum_{t=1}^{N-h} (X_{t+h} - mean) (x) (X_t - mean)      h >= 0
//! C_{-h} = C_h^T
//! ```
//!
//! with the full-sample divisor N rather than N - h: the resulting lag-window
//! family keeps the Bartlett-smoothed spectral estimates positive
//! semidefinite, at the price of a small extra bias at large lags. The
//! cross-covariance between two aligned samples follows the same scheme with
//! `C^{YX}_h` estimating `E[(Y_{t+h} - mu_Y) (x) (X_t - mu_X)]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::Curve;
use crate::error::{FtsError, Result};
use crate::operators::HsOperator;

/// A time-ordered sample of curves sharing one basis dimension, stored as the
/// d x N matrix whose column t holds the coefficients of X_t.
#[derive(Debug, Clone, PartialEq)]
pub struct FtsSample {
    data: DMatrix<f64>,
}

impl FtsSample {
    pub fn new(curves: &[Curve]) -> Result<Self> {
        let n = curves.len();
        if n == 0 {
            return Err(FtsError::invalid_argument("sample needs at least 1 curve"));
        }
        let d = curves[0].d();
        let mut data = DMatrix::zeros(d, n);
        for (t, c) in curves.iter().enumerate() {
            if c.d() != d {
                return Err(FtsError::DimensionMismatch {
                    expected: d,
                    got: c.d(),
                });
            }
            data.set_column(t, c.coeffs());
        }
        Ok(Self { data })
    }

    /// Takes the d x N coefficient matrix directly (columns are curves).
    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        if data.ncols() == 0 || data.nrows() == 0 {
            return Err(FtsError::invalid_argument("sample matrix must be nonempty"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(FtsError::NonFinite("sample coefficients"));
        }
        Ok(Self { data })
    }

    /// Number of curves N.
    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Basis dimension d.
    pub fn d(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn curve(&self, t: usize) -> Result<Curve> {
        if t >= self.len() {
            return Err(FtsError::invalid_argument(format!(
                "index {t} out of range for sample of length {}",
                self.len()
            )));
        }
        Curve::new(self.data.column(t).into_owned())
    }

    pub fn curves(&self) -> Vec<Curve> {
        (0..self.len())
            .map(|t| Curve::new(self.data.column(t).into_owned()).expect("finite by invariant"))
            .collect()
    }

    /// Contiguous sub-sample `[from, to)`.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        if from >= to || to > self.len() {
            return Err(FtsError::invalid_argument(format!(
                "invalid slice {from}..{to} of sample with length {}",
                self.len()
            )));
        }
        Ok(Self {
            data: self.data.columns(from, to - from).into_owned(),
        })
    }

    /// Pointwise mean curve.
    pub fn mean(&self) -> Curve {
        Curve::new(self.data.column_mean()).expect("finite by invariant")
    }

    /// Data matrix with the mean of every row subtracted.
    fn centered(&self) -> DMatrix<f64> {
        let mu = self.data.column_mean();
        let mut out = self.data.clone();
        for mut col in out.column_iter_mut() {
            col -= &mu;
        }
        out
    }
}

/// Pointwise mean curve of the sample.
pub fn mean(x: &FtsSample) -> Curve {
    x.mean()
}

fn validate_lag(n: usize, h: i64) -> Result<usize> {
    let habs = h.unsigned_abs() as usize;
    // h = 0 is always estimable; lagged terms need at least two overlapping
    // observations, so |h| <= N - 2
    if habs > 0 && habs + 2 > n {
        return Err(FtsError::InsufficientData {
            what: "lagged covariance",
            needed: habs + 2,
            got: n,
        });
    }
    Ok(habs)
}

/// Lag-h products of two centered (or raw) data matrices, divisor N.
fn lag_product(a: &DMatrix<f64>, b: &DMatrix<f64>, h: i64) -> HsOperator {
    let n = a.ncols();
    let habs = h.unsigned_abs() as usize;
    let width = n - habs;
    let prod = if h >= 0 {
        a.columns(habs, width) * b.columns(0, width).transpose()
    } else {
        a.columns(0, width) * b.columns(habs, width).transpose()
    };
    HsOperator::new(prod / n as f64).expect("finite by construction")
}

/// Lag-h autocovariance operator with empirical centering.
pub fn autocov(x: &FtsSample, h: i64) -> Result<HsOperator> {
    autocov_impl(x, h, true)
}

/// Lag-h autocovariance without centering (raw second moment).
pub fn autocov_uncentered(x: &FtsSample, h: i64) -> Result<HsOperator> {
    autocov_impl(x, h, false)
}

fn autocov_impl(x: &FtsSample, h: i64, centered: bool) -> Result<HsOperator> {
    validate_lag(x.len(), h)?;
    let data = if centered {
        x.centered()
    } else {
        x.data().clone()
    };
    if h < 0 {
        // C_{-h} = C_h^T by construction
        return Ok(lag_product(&data, &data, -h).transpose());
    }
    Ok(lag_product(&data, &data, h))
}

/// Lag-h cross-covariance `C^{YX}_h` of two aligned samples, centered.
pub fn crosscov(y: &FtsSample, x: &FtsSample, h: i64) -> Result<HsOperator> {
    crosscov_impl(y, x, h, true)
}

/// Uncentered variant of [`crosscov`].
pub fn crosscov_uncentered(y: &FtsSample, x: &FtsSample, h: i64) -> Result<HsOperator> {
    crosscov_impl(y, x, h, false)
}

fn crosscov_impl(y: &FtsSample, x: &FtsSample, h: i64, centered: bool) -> Result<HsOperator> {
    if y.len() != x.len() {
        return Err(FtsError::LengthMismatch {
            left: y.len(),
            right: x.len(),
        });
    }
    if y.d() != x.d() {
        return Err(FtsError::DimensionMismatch {
            expected: x.d(),
            got: y.d(),
        });
    }
    validate_lag(x.len(), h)?;
    let (yc, xc) = if centered {
        (y.centered(), x.centered())
    } else {
        (y.data().clone(), x.data().clone())
    };
    Ok(lag_product(&yc, &xc, h))
}

/// Hilbert-Schmidt norms of the centered autocovariances at lags 0..=q; a
/// quick check that dependence decays before trusting bandwidth choices.
pub fn decay_diagnostic(x: &FtsSample, q: usize) -> Result<Vec<f64>> {
    (0..=q as i64).map(|h| Ok(autocov(x, h)?.hs_norm())).collect()
}

/// Autocovariance or cross-covariance operators for every lag |h| <= q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LagCovSequenceRepr", into = "LagCovSequenceRepr")]
pub struct LagCovSequence {
    q: usize,
    /// index h + q holds the lag-h operator
    ops: Vec<HsOperator>,
}

/// Serialized form: the (lag, operator) pairs in lag order.
#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct LagCovSequenceRepr {
    entries: Vec<LagCovEntry>,
}

#[derive(Serialize, Deserialize)]
struct LagCovEntry {
    lag: i64,
    op: HsOperator,
}

impl TryFrom<LagCovSequenceRepr> for LagCovSequence {
    type Error = FtsError;

    fn try_from(repr: LagCovSequenceRepr) -> Result<Self> {
        if repr.entries.is_empty() || repr.entries.len() % 2 == 0 {
            return Err(FtsError::Format(format!(
                "lag sequence needs an odd number of entries, got {}",
                repr.entries.len()
            )));
        }
        let q = repr.entries.len() / 2;
        let mut ops = Vec::with_capacity(repr.entries.len());
        for (expect, entry) in (-(q as i64)..=q as i64).zip(repr.entries) {
            if entry.lag != expect {
                return Err(FtsError::Format(format!(
                    "lag sequence entries must run -q..=q, found lag {} where {} was expected",
                    entry.lag, expect
                )));
            }
            ops.push(entry.op);
        }
        Self::from_ops(q, ops)
    }
}

impl From<LagCovSequence> for LagCovSequenceRepr {
    fn from(c: LagCovSequence) -> Self {
        let q = c.q as i64;
        Self {
            entries: (-q..=q)
                .zip(c.ops)
                .map(|(lag, op)| LagCovEntry { lag, op })
                .collect(),
        }
    }
}

impl LagCovSequence {
    /// Centered autocovariances of `x` out to lag q.
    pub fn autocovariances(x: &FtsSample, q: usize) -> Result<Self> {
        validate_lag(x.len(), q as i64)?;
        let data = x.centered();
        let mut ops = Vec::with_capacity(2 * q + 1);
        for h in -(q as i64)..=(q as i64) {
            if h < 0 {
                ops.push(lag_product(&data, &data, -h).transpose());
            } else {
                ops.push(lag_product(&data, &data, h));
            }
        }
        Ok(Self { q, ops })
    }

    /// Centered cross-covariances `C^{YX}_h` of two aligned samples out to
    /// lag q.
    pub fn cross_covariances(y: &FtsSample, x: &FtsSample, q: usize) -> Result<Self> {
        if y.len() != x.len() {
            return Err(FtsError::LengthMismatch {
                left: y.len(),
                right: x.len(),
            });
        }
        if y.d() != x.d() {
            return Err(FtsError::DimensionMismatch {
                expected: x.d(),
                got: y.d(),
            });
        }
        validate_lag(x.len(), q as i64)?;
        let yc = y.centered();
        let xc = x.centered();
        let ops = (-(q as i64)..=(q as i64))
            .map(|h| lag_product(&yc, &xc, h))
            .collect();
        Ok(Self { q, ops })
    }

    /// Builds a sequence from explicit operators ordered h = -q..=q.
    pub fn from_ops(q: usize, ops: Vec<HsOperator>) -> Result<Self> {
        if ops.len() != 2 * q + 1 {
            return Err(FtsError::invalid_argument(format!(
                "lag sequence with q = {q} needs {} operators, got {}",
                2 * q + 1,
                ops.len()
            )));
        }
        let d = ops[0].d();
        if ops.iter().any(|op| op.d() != d) {
            return Err(FtsError::invalid_argument(
                "lag sequence operators must share one dimension",
            ));
        }
        Ok(Self { q, ops })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d(&self) -> usize {
        self.ops[0].d()
    }

    pub fn get(&self, h: i64) -> Result<&HsOperator> {
        if h.unsigned_abs() as usize > self.q {
            return Err(FtsError::invalid_argument(format!(
                "lag {h} outside the stored range |h| <= {}",
                self.q
            )));
        }
        Ok(&self.ops[(h + self.q as i64) as usize])
    }

    /// Iterates `(h, C_h)` for h = -q..=q.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &HsOperator)> {
        let q = self.q as i64;
        (-q..=q).zip(self.ops.iter())
    }
}
