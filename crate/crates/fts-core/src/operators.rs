//! Hilbert-Schmidt operators on the d-dimensional coefficient space.
//!
//! An operator F is stored as the real d x d matrix with entries
//! `mat[(i, j)] = <e_i, F(e_j)>`; applying F to a curve is a matrix-vector
//! product and the Hilbert-Schmidt norm is the Frobenius norm. The rank-one
//! (outer) product follows the convention `(f (x) g)(v) = <g, v> f`, so its
//! matrix is `f g^T`. Complex-valued operators of the same shape carry
//! spectral density values; their Hermitian eigendecomposition drives the
//! per-frequency regularized inverses.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::Curve;
use crate::error::{FtsError, Result};

/// Relative eigenvalue floor used by the truncated inverses when the caller
/// does not override it: components with eigenvalue <= floor * lambda_1 are
/// dropped.
pub const DEFAULT_EIGEN_FLOOR: f64 = 1e-10;

/// Largest entrywise asymmetry tolerated before symmetrizing an operator for
/// eigendecomposition, relative to max(1, largest entry magnitude).
pub const SYMMETRY_TOL: f64 = 1e-8;

pub type Complex64 = Complex<f64>;

/// Real Hilbert-Schmidt operator, a square matrix in the basis coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HsOperatorRepr", into = "HsOperatorRepr")]
pub struct HsOperator {
    mat: DMatrix<f64>,
}

/// Serialized form: dimension plus row-major entries.
#[derive(Serialize, Deserialize)]
struct HsOperatorRepr {
    d: usize,
    entries: Vec<f64>,
}

impl From<HsOperator> for HsOperatorRepr {
    fn from(op: HsOperator) -> Self {
        let d = op.d();
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                entries.push(op.mat[(i, j)]);
            }
        }
        HsOperatorRepr { d, entries }
    }
}

impl TryFrom<HsOperatorRepr> for HsOperator {
    type Error = FtsError;

    fn try_from(repr: HsOperatorRepr) -> Result<Self> {
        if repr.entries.len() != repr.d * repr.d {
            return Err(FtsError::Format(format!(
                "operator payload has {} entries, expected {}",
                repr.entries.len(),
                repr.d * repr.d
            )));
        }
        HsOperator::new(DMatrix::from_row_slice(repr.d, repr.d, &repr.entries))
    }
}

impl HsOperator {
    /// Wraps a square matrix with finite entries.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(FtsError::invalid_argument(format!(
                "operator matrix must be square and nonempty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(FtsError::NonFinite("operator entries"));
        }
        Ok(Self { mat })
    }

    pub fn from_row_slice(d: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(FtsError::invalid_argument(format!(
                "expected {} entries for a {d}x{d} operator, got {}",
                d * d,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(d, d, entries))
    }

    pub fn zero(d: usize) -> Self {
        Self {
            mat: DMatrix::zeros(d, d),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            mat: DMatrix::identity(d, d),
        }
    }

    /// Diagonal operator from its eigenvalues in basis order.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Rank-one operator (f (x) g)(v) = <g, v> f, i.e. the matrix f g^T.
    pub fn outer(f: &Curve, g: &Curve) -> Self {
        Self {
            mat: f.coeffs() * g.coeffs().transpose(),
        }
    }

    pub fn d(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// F(x) as a coefficient curve.
    pub fn apply(&self, x: &Curve) -> Result<Curve> {
        if x.d() != self.d() {
            return Err(FtsError::DimensionMismatch {
                expected: self.d(),
                got: x.d(),
            });
        }
        Curve::new(&self.mat * x.coeffs())
    }

    /// Hilbert-Schmidt norm (Frobenius norm of the matrix).
    pub fn hs_norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn transpose(&self) -> Self {
        Self {
            mat: self.mat.transpose(),
        }
    }

    /// Composition self . other (matrix product).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.d() != other.d() {
            return Err(FtsError::DimensionMismatch {
                expected: self.d(),
                got: other.d(),
            });
        }
        Ok(Self {
            mat: &self.mat * &other.mat,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.d() != other.d() {
            return Err(FtsError::DimensionMismatch {
                expected: self.d(),
                got: other.d(),
            });
        }
        Ok(Self {
            mat: &self.mat + &other.mat,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.d() != other.d() {
            return Err(FtsError::DimensionMismatch {
                expected: self.d(),
                got: other.d(),
            });
        }
        Ok(Self {
            mat: &self.mat - &other.mat,
        })
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            mat: &self.mat * a,
        }
    }

    /// Eigendecomposition for (numerically) symmetric operators.
    ///
    /// Asymmetry up to [`SYMMETRY_TOL`] (relative to the entry scale) is
    /// repaired by replacing F with (F + F^T)/2; anything larger is an error.
    /// Eigenvalues come back sorted in descending order with matching
    /// eigenvector columns.
    pub fn eigendecompose(&self) -> Result<EigenSystem> {
        let sym = self.symmetrized()?;
        let eig = sym.symmetric_eigen();
        let (eigenvalues, eigenvectors) = sort_descending(&eig.eigenvalues, &eig.eigenvectors);
        Ok(EigenSystem {
            eigenvalues,
            eigenvectors,
        })
    }

    fn symmetrized(&self) -> Result<DMatrix<f64>> {
        let scale = 1.0f64.max(self.mat.amax());
        let mut asym = 0.0f64;
        for i in 0..self.d() {
            for j in (i + 1)..self.d() {
                asym = asym.max((self.mat[(i, j)] - self.mat[(j, i)]).abs());
            }
        }
        let tol = SYMMETRY_TOL * scale;
        if asym > tol {
            return Err(FtsError::NotSymmetric {
                asymmetry: asym,
                tol,
            });
        }
        Ok((&self.mat + self.mat.transpose()) * 0.5)
    }

    /// Regularized inverse truncated to the top-K eigenpairs.
    ///
    /// Keeps `K' = min(K, #{k : lambda_k > floor * lambda_1})` components and
    /// returns `sum_{k <= K'} lambda_k^{-1} e_k (x) e_k` together with K'.
    /// Requires a symmetric PSD-like operator: `lambda_1 <= 0` is an error.
    pub fn truncated_inverse(&self, k: usize, floor: f64) -> Result<(Self, usize)> {
        if k == 0 {
            return Err(FtsError::invalid_argument("truncation level K must be >= 1"));
        }
        let eig = self.eigendecompose()?;
        let (mat, k_used) = truncated_inverse_from_parts(
            &eig.eigenvalues,
            |idx| eig.eigenvectors.column(idx).into_owned(),
            k,
            floor,
            self.d(),
        )?;
        Ok((Self { mat }, k_used))
    }
}

/// Eigenpairs of a symmetric operator, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl EigenSystem {
    /// Rebuilds sum_k lambda_k e_k (x) e_k, mainly for residual checks.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let lam = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        &self.eigenvectors * lam * self.eigenvectors.transpose()
    }
}

fn sort_descending(
    values: &DVector<f64>,
    vectors: &DMatrix<f64>,
) -> (Vec<f64>, DMatrix<f64>) {
    let d = values.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut eigenvectors = DMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &vectors.column(src));
    }
    (eigenvalues, eigenvectors)
}

fn truncated_inverse_from_parts<V, F>(
    eigenvalues: &[f64],
    column: F,
    k: usize,
    floor: f64,
    d: usize,
) -> Result<(V::Output, usize)>
where
    V: InverseAccumulator,
    F: Fn(usize) -> V,
{
    let lambda1 = eigenvalues[0];
    // negated compare also rejects NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(lambda1 > 0.0) {
        return Err(FtsError::DegenerateOperator(format!(
            "leading eigenvalue {lambda1:.3e} is not positive"
        )));
    }
    let cutoff = floor * lambda1;
    let keep = eigenvalues.iter().take_while(|&&l| l > cutoff).count();
    let k_used = k.min(keep);
    let mut acc = V::zero_output(d);
    for (idx, &lambda) in eigenvalues.iter().enumerate().take(k_used) {
        column(idx).accumulate(&mut acc, 1.0 / lambda);
    }
    Ok((acc, k_used))
}

/// Shared accumulation for the real and complex truncated inverses.
trait InverseAccumulator {
    type Output;
    fn zero_output(d: usize) -> Self::Output;
    fn accumulate(&self, acc: &mut Self::Output, scale: f64);
}

impl InverseAccumulator for DVector<f64> {
    type Output = DMatrix<f64>;

    fn zero_output(d: usize) -> DMatrix<f64> {
        DMatrix::zeros(d, d)
    }

    fn accumulate(&self, acc: &mut DMatrix<f64>, scale: f64) {
        acc.ger(scale, self, self, 1.0);
    }
}

impl InverseAccumulator for DVector<Complex64> {
    type Output = DMatrix<Complex64>;

    fn zero_output(d: usize) -> DMatrix<Complex64> {
        DMatrix::zeros(d, d)
    }

    fn accumulate(&self, acc: &mut DMatrix<Complex64>, scale: f64) {
        // rank-one update v v^* / lambda
        let adj = self.adjoint();
        *acc += (self * adj) * Complex64::new(scale, 0.0);
    }
}

/// Complex operator of the same shape, used for spectral density values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexOperatorRepr", into = "ComplexOperatorRepr")]
pub struct ComplexOperator {
    mat: DMatrix<Complex64>,
}

/// Serialized form: dimension plus row-major real and imaginary parts.
#[derive(Serialize, Deserialize)]
struct ComplexOperatorRepr {
    d: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl From<ComplexOperator> for ComplexOperatorRepr {
    fn from(op: ComplexOperator) -> Self {
        let d = op.d();
        let mut re = Vec::with_capacity(d * d);
        let mut im = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                re.push(op.mat[(i, j)].re);
                im.push(op.mat[(i, j)].im);
            }
        }
        ComplexOperatorRepr { d, re, im }
    }
}

impl TryFrom<ComplexOperatorRepr> for ComplexOperator {
    type Error = FtsError;

    fn try_from(repr: ComplexOperatorRepr) -> Result<Self> {
        if repr.re.len() != repr.d * repr.d || repr.im.len() != repr.re.len() {
            return Err(FtsError::Format(format!(
                "complex operator payload has {}/{} entries, expected {}",
                repr.re.len(),
                repr.im.len(),
                repr.d * repr.d
            )));
        }
        let entries: Vec<Complex64> = repr
            .re
            .iter()
            .zip(repr.im.iter())
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        ComplexOperator::new(DMatrix::from_row_slice(repr.d, repr.d, &entries))
    }
}

impl ComplexOperator {
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(FtsError::invalid_argument(format!(
                "operator matrix must be square and nonempty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(FtsError::NonFinite("operator entries"));
        }
        Ok(Self { mat })
    }

    pub fn zero(d: usize) -> Self {
        Self {
            mat: DMatrix::zeros(d, d),
        }
    }

    pub fn from_real(op: &HsOperator) -> Self {
        Self {
            mat: op.mat().map(|v| Complex64::new(v, 0.0)),
        }
    }

    pub fn d(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    /// F(x) for a complex coefficient vector.
    pub fn apply(&self, x: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        if x.len() != self.d() {
            return Err(FtsError::DimensionMismatch {
                expected: self.d(),
                got: x.len(),
            });
        }
        Ok(&self.mat * x)
    }

    pub fn hs_norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
        }
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.d() != other.d() {
            return Err(FtsError::DimensionMismatch {
                expected: self.d(),
                got: other.d(),
            });
        }
        Ok(Self {
            mat: &self.mat * &other.mat,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.d() != other.d() {
            return Err(FtsError::DimensionMismatch {
                expected: self.d(),
                got: other.d(),
            });
        }
        Ok(Self {
            mat: &self.mat + &other.mat,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.d() != other.d() {
            return Err(FtsError::DimensionMismatch {
                expected: self.d(),
                got: other.d(),
            });
        }
        Ok(Self {
            mat: &self.mat - &other.mat,
        })
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self {
            mat: &self.mat * a,
        }
    }

    /// Largest imaginary magnitude over the entries.
    pub fn max_imag(&self) -> f64 {
        self.mat.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Drops imaginary parts, keeping the real entries.
    pub fn real_part(&self) -> HsOperator {
        HsOperator {
            mat: self.mat.map(|v| v.re),
        }
    }

    /// Eigendecomposition for (numerically) Hermitian operators; same repair
    /// and tolerance policy as the real case, eigenvalues real and sorted
    /// descending.
    pub fn hermitian_eigendecompose(&self) -> Result<HermitianEigenSystem> {
        let herm = self.hermitianized()?;
        let eig = herm.symmetric_eigen();
        let d = self.d();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut eigenvectors = DMatrix::zeros(d, d);
        for (dst, &src) in order.iter().enumerate() {
            eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok(HermitianEigenSystem {
            eigenvalues,
            eigenvectors,
        })
    }

    fn hermitianized(&self) -> Result<DMatrix<Complex64>> {
        let scale = 1.0f64.max(self.mat.iter().map(|v| v.norm()).fold(0.0, f64::max));
        let adj = self.mat.adjoint();
        let mut asym = 0.0f64;
        for i in 0..self.d() {
            for j in 0..self.d() {
                asym = asym.max((self.mat[(i, j)] - adj[(i, j)]).norm());
            }
        }
        let tol = SYMMETRY_TOL * scale;
        if asym > tol {
            return Err(FtsError::NotHermitian {
                asymmetry: asym,
                tol,
            });
        }
        Ok((&self.mat + adj) * Complex64::new(0.5, 0.0))
    }

    /// Complex counterpart of [`HsOperator::truncated_inverse`] built from
    /// the Hermitian eigendecomposition.
    pub fn truncated_inverse(&self, k: usize, floor: f64) -> Result<(Self, usize)> {
        if k == 0 {
            return Err(FtsError::invalid_argument("truncation level K must be >= 1"));
        }
        let eig = self.hermitian_eigendecompose()?;
        let (mat, k_used) = truncated_inverse_from_parts(
            &eig.eigenvalues,
            |idx| eig.eigenvectors.column(idx).into_owned(),
            k,
            floor,
            self.d(),
        )?;
        Ok((Self { mat }, k_used))
    }
}

/// Eigenpairs of a Hermitian operator: real descending eigenvalues, complex
/// orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}
