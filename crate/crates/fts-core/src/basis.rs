//! Finite Fourier representation of curves on the unit interval.
//!
//! A curve lives in L2[0,1] and is held in one of two forms: sampled on a
//! uniform grid (`DiscreteCurve`) or as a coefficient vector (`Curve`) in the
//! orthonormal Fourier basis
//!
//! ```text
//! e_0(x) = 1
//! e_{2k-1}(x) = sqrt(2) * cos(2 pi k x)
//! e_{2k}(x)   = sqrt(2) * sin(2 pi k x)      k = 1, 2, ...
//! ```
//!
//! ordered constant first, then cosine/sine pairs by increasing frequency.
//! This ordering is also the serialized coefficient order everywhere in the
//! crate. Grid-side inner products use composite trapezoid quadrature, which
//! is spectrally accurate for these periodic integrands, so the basis Gram
//! matrix is the identity to near machine precision at the default sizes
//! (n = 1001 points, d = 15 functions).

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{FtsError, Result};

/// Tolerance for grid endpoint placement and spacing uniformity.
pub const GRID_UNIFORMITY_TOL: f64 = 1e-12;

/// Uniform sampling grid 0 = t_0 < t_1 < ... < t_{n-1} = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    /// Builds the n-point uniform grid on [0,1]. Requires n >= 2.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(FtsError::InvalidGrid(format!(
                "need at least 2 points, got {n}"
            )));
        }
        let h = 1.0 / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
        // force the right endpoint exactly onto 1
        points[n - 1] = 1.0;
        Ok(Self { points })
    }

    /// Validates an externally supplied grid: at least 2 points, endpoints at
    /// 0 and 1, and spacing uniform to within [`GRID_UNIFORMITY_TOL`].
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        let n = points.len();
        if n < 2 {
            return Err(FtsError::InvalidGrid(format!(
                "need at least 2 points, got {n}"
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(FtsError::NonFinite("grid points"));
        }
        if points[0].abs() > GRID_UNIFORMITY_TOL {
            return Err(FtsError::InvalidGrid(format!(
                "first point must be 0, got {}",
                points[0]
            )));
        }
        if (points[n - 1] - 1.0).abs() > GRID_UNIFORMITY_TOL {
            return Err(FtsError::InvalidGrid(format!(
                "last point must be 1, got {}",
                points[n - 1]
            )));
        }
        let h = 1.0 / (n - 1) as f64;
        for j in 0..n - 1 {
            let gap = points[j + 1] - points[j];
            if (gap - h).abs() > GRID_UNIFORMITY_TOL {
                return Err(FtsError::InvalidGrid(format!(
                    "spacing at index {j} is {gap:.17e}, expected {h:.17e}"
                )));
            }
        }
        Ok(Self { points })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Uniform step 1/(n-1).
    pub fn step(&self) -> f64 {
        1.0 / (self.points.len() - 1) as f64
    }

    /// Composite trapezoid weights: h/2 at the endpoints, h inside.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.points.len();
        let h = self.step();
        let mut w = vec![h; n];
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
        w
    }
}

/// A curve sampled on a grid; `values[j]` is the value at `grid.points()[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCurve {
    pub values: Vec<f64>,
}

impl DiscreteCurve {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FtsError::NonFinite("curve samples"));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A curve as a coefficient vector in the Fourier basis of its dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    coeffs: DVector<f64>,
}

impl Curve {
    pub fn new(coeffs: DVector<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(FtsError::invalid_argument("curve needs at least 1 coefficient"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(FtsError::NonFinite("curve coefficients"));
        }
        Ok(Self { coeffs })
    }

    pub fn from_slice(coeffs: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coeffs))
    }

    pub fn zero(d: usize) -> Self {
        Self {
            coeffs: DVector::zeros(d),
        }
    }

    /// Basis dimension d.
    pub fn d(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    /// L2 norm of the represented curve; by Parseval this is the coefficient
    /// 2-norm.
    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }
}

impl Serialize for Curve {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.coeffs.as_slice().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Curve {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let coeffs = Vec::<f64>::deserialize(deserializer)?;
        Curve::from_slice(&coeffs).map_err(D::Error::custom)
    }
}

/// The first d Fourier basis functions tabulated on a grid.
///
/// `eval` holds the d x n matrix with `eval[(i, j)] = e_i(t_j)`.
#[derive(Debug, Clone)]
pub struct FourierBasis {
    d: usize,
    grid: Grid,
    eval: DMatrix<f64>,
}

impl FourierBasis {
    /// Tabulates the basis. Requires d >= 1 and 2*d < n so that no product of
    /// two basis functions aliases on the grid.
    pub fn new(d: usize, grid: Grid) -> Result<Self> {
        if d < 1 {
            return Err(FtsError::invalid_argument("basis dimension d must be >= 1"));
        }
        let n = grid.n();
        if 2 * d >= n {
            return Err(FtsError::Aliasing { d, n });
        }
        let mut eval = DMatrix::zeros(d, n);
        for (j, &t) in grid.points().iter().enumerate() {
            eval[(0, j)] = 1.0;
            for i in 1..d {
                let k = i.div_ceil(2) as f64;
                let arg = 2.0 * PI * k * t;
                eval[(i, j)] = if i % 2 == 1 {
                    SQRT_2 * arg.cos()
                } else {
                    SQRT_2 * arg.sin()
                };
            }
        }
        Ok(Self { d, grid, eval })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// d x n matrix of basis function values on the grid.
    pub fn eval(&self) -> &DMatrix<f64> {
        &self.eval
    }

    /// Gram matrix under trapezoid quadrature; identity up to quadrature
    /// error.
    pub fn gram(&self) -> DMatrix<f64> {
        let w = self.grid.trapezoid_weights();
        let mut weighted = self.eval.clone();
        for (j, wj) in w.iter().enumerate() {
            weighted.column_mut(j).scale_mut(*wj);
        }
        &weighted * self.eval.transpose()
    }

    /// The i-th basis function as a sampled curve.
    pub fn function(&self, i: usize) -> Result<DiscreteCurve> {
        if i >= self.d {
            return Err(FtsError::invalid_argument(format!(
                "basis index {i} out of range (d = {})",
                self.d
            )));
        }
        Ok(DiscreteCurve {
            values: self.eval.row(i).iter().copied().collect(),
        })
    }
}

fn check_same_len(f: &DiscreteCurve, n: usize) -> Result<()> {
    if f.len() != n {
        return Err(FtsError::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }
    Ok(())
}

/// Trapezoid-rule L2 inner product of two sampled curves.
pub fn inner_product(f: &DiscreteCurve, g: &DiscreteCurve, grid: &Grid) -> Result<f64> {
    let n = grid.n();
    check_same_len(f, n)?;
    check_same_len(g, n)?;
    let h = grid.step();
    let mut acc = 0.5 * (f.values[0] * g.values[0] + f.values[n - 1] * g.values[n - 1]);
    for j in 1..n - 1 {
        acc += f.values[j] * g.values[j];
    }
    Ok(acc * h)
}

/// Trapezoid-rule L2 norm of a sampled curve.
pub fn l2_norm(f: &DiscreteCurve, grid: &Grid) -> Result<f64> {
    // the quadratic form is PSD, but guard against -0.0 style rounding
    Ok(inner_product(f, f, grid)?.max(0.0).sqrt())
}

/// Projects a sampled curve onto the basis: c_i = <e_i, f> by quadrature.
pub fn project(f: &DiscreteCurve, basis: &FourierBasis) -> Result<Curve> {
    let grid = basis.grid();
    check_same_len(f, grid.n())?;
    let w = grid.trapezoid_weights();
    let weighted = DVector::from_iterator(
        grid.n(),
        f.values.iter().zip(w.iter()).map(|(v, wj)| v * wj),
    );
    Curve::new(basis.eval() * weighted)
}

/// Evaluates a coefficient vector back onto the grid: f(t_j) = sum_i c_i e_i(t_j).
pub fn reconstruct(c: &Curve, basis: &FourierBasis) -> Result<DiscreteCurve> {
    if c.d() != basis.d() {
        return Err(FtsError::DimensionMismatch {
            expected: basis.d(),
            got: c.d(),
        });
    }
    let values = basis.eval().transpose() * c.coeffs();
    Ok(DiscreteCurve {
        values: values.iter().copied().collect(),
    })
}

/// Returns `(norm_sq, coeff_sum_sq)`: the quadrature squared norm of `f` and
/// the squared coefficient mass of its projection. Bessel's inequality puts
/// `coeff_sum_sq <= norm_sq` up to quadrature error, with equality when `f`
/// is band-limited to the basis.
pub fn parseval_check(f: &DiscreteCurve, basis: &FourierBasis) -> Result<(f64, f64)> {
    let norm_sq = inner_product(f, f, basis.grid())?;
    let c = project(f, basis)?;
    Ok((norm_sq, c.coeffs().norm_squared()))
}
