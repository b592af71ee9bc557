//! Frequency-domain estimation of linear filters.
//!
//! A lag-covariance sequence transforms into a spectral density operator at
//! each frequency of a regular grid; the cross spectrum of two series,
//! deconvolved by the auto spectrum of the input, gives the frequency
//! response of the filter linking them; an inverse transform returns the
//! lag-domain coefficients.
//!
//! Conventions, fixed across the module:
//!
//! - spectra: `F(theta) = (1/2pi) sum_h w(h/q) C_h e^{-ih theta}`
//! - response of a filter: `R(theta) = sum_k A_k e^{-ik theta}`
//! - coefficients from a response: `A_k = (1/T) sum_j R(theta_j) e^{+ik theta_j}`
//!
//! With cross covariances indexed as `C^{YX}_h = E[Y_{t+h} (x) X_t]`, these
//! conventions make the factorization `F^{YX}(theta) = R(theta) F^X(theta)`
//! exact at the population level, so deconvolution returns filter
//! coefficients at their true lags.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FtsError, Result};
use crate::moments::{FtsSample, LagCovSequence};
use crate::operators::{Complex64, ComplexOperator, DEFAULT_EIGEN_FLOOR};
use crate::regression::{select_k_from_eigenvalues, LinearFilter, Truncation};

use std::f64::consts::TAU;

/// Hard failure threshold for the imaginary residue left after the inverse
/// transform; a conjugate-symmetric response stays below 1e-8.
pub const IMAG_RESIDUE_TOL: f64 = 1e-6;

/// Regular frequency grid `theta_j = 2 pi j / T`, j = 0..T-1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FrequencyGridRepr", into = "FrequencyGridRepr")]
pub struct FrequencyGrid {
    t: usize,
}

#[derive(Serialize, Deserialize)]
struct FrequencyGridRepr {
    t: usize,
}

impl TryFrom<FrequencyGridRepr> for FrequencyGrid {
    type Error = FtsError;

    fn try_from(repr: FrequencyGridRepr) -> Result<Self> {
        Self::fourier(repr.t)
    }
}

impl From<FrequencyGrid> for FrequencyGridRepr {
    fn from(grid: FrequencyGrid) -> Self {
        Self { t: grid.t }
    }
}

impl FrequencyGrid {
    pub fn fourier(t: usize) -> Result<Self> {
        if t == 0 {
            return Err(FtsError::invalid_argument(
                "frequency grid needs at least one frequency",
            ));
        }
        Ok(Self { t })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Frequency at index `j < T`, in `[0, 2pi)`.
    pub fn theta(&self, j: usize) -> f64 {
        debug_assert!(j < self.t);
        TAU * j as f64 / self.t as f64
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.t).map(|j| self.theta(j)).collect()
    }
}

/// Lag window applied to covariances before the spectral sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Triangular taper `1 - |h|/q`; keeps the smoothed spectrum PSD.
    #[default]
    Bartlett,
    /// No taper; exact for finite lag sequences, not PSD-safe.
    Rectangular,
}

impl Window {
    pub fn weight(self, h: i64, q: usize) -> f64 {
        match self {
            Window::Rectangular => 1.0,
            Window::Bartlett => {
                if q == 0 {
                    1.0
                } else {
                    1.0 - h.unsigned_abs() as f64 / q as f64
                }
            }
        }
    }
}

/// Spectral density estimate: one operator per grid frequency, the array
/// position being the frequency index.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SpectralDensityRepr", into = "SpectralDensityRepr")]
pub struct SpectralDensity {
    grid: FrequencyGrid,
    values: Vec<ComplexOperator>,
}

#[derive(Serialize, Deserialize)]
struct SpectralDensityRepr {
    t: usize,
    values: Vec<ComplexOperator>,
}

impl TryFrom<SpectralDensityRepr> for SpectralDensity {
    type Error = FtsError;

    fn try_from(repr: SpectralDensityRepr) -> Result<Self> {
        SpectralDensity::from_values(FrequencyGrid::fourier(repr.t)?, repr.values)
    }
}

impl From<SpectralDensity> for SpectralDensityRepr {
    fn from(s: SpectralDensity) -> Self {
        Self {
            t: s.grid.t(),
            values: s.values,
        }
    }
}

impl SpectralDensity {
    pub fn from_values(grid: FrequencyGrid, values: Vec<ComplexOperator>) -> Result<Self> {
        if values.len() != grid.t() {
            return Err(FtsError::LengthMismatch {
                left: grid.t(),
                right: values.len(),
            });
        }
        let d = values[0].d();
        if values.iter().any(|v| v.d() != d) {
            return Err(FtsError::invalid_argument(
                "spectral values must share one dimension",
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[ComplexOperator] {
        &self.values
    }

    /// Value at frequency index `j < T`.
    pub fn value(&self, j: usize) -> &ComplexOperator {
        &self.values[j]
    }

    pub fn d(&self) -> usize {
        self.values[0].d()
    }
}

/// Frequency response estimate with the per-frequency truncation levels and
/// the indices where the input spectrum was degenerate (response zeroed).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "FrequencyResponseRepr", into = "FrequencyResponseRepr")]
pub struct FrequencyResponse {
    grid: FrequencyGrid,
    values: Vec<ComplexOperator>,
    k_used: Vec<usize>,
    degenerate: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct FrequencyResponseRepr {
    t: usize,
    values: Vec<ComplexOperator>,
    k_used: Vec<usize>,
    degenerate: Vec<usize>,
}

impl TryFrom<FrequencyResponseRepr> for FrequencyResponse {
    type Error = FtsError;

    fn try_from(repr: FrequencyResponseRepr) -> Result<Self> {
        FrequencyResponse::from_parts(
            FrequencyGrid::fourier(repr.t)?,
            repr.values,
            repr.k_used,
            repr.degenerate,
        )
    }
}

impl From<FrequencyResponse> for FrequencyResponseRepr {
    fn from(r: FrequencyResponse) -> Self {
        Self {
            t: r.grid.t(),
            values: r.values,
            k_used: r.k_used,
            degenerate: r.degenerate,
        }
    }
}

impl FrequencyResponse {
    pub fn from_parts(
        grid: FrequencyGrid,
        values: Vec<ComplexOperator>,
        k_used: Vec<usize>,
        degenerate: Vec<usize>,
    ) -> Result<Self> {
        if values.len() != grid.t() {
            return Err(FtsError::LengthMismatch {
                left: grid.t(),
                right: values.len(),
            });
        }
        if k_used.len() != grid.t() {
            return Err(FtsError::LengthMismatch {
                left: grid.t(),
                right: k_used.len(),
            });
        }
        let d = values[0].d();
        if values.iter().any(|v| v.d() != d) {
            return Err(FtsError::invalid_argument(
                "response values must share one dimension",
            ));
        }
        let mut degenerate = degenerate;
        degenerate.sort_unstable();
        degenerate.dedup();
        if degenerate.iter().any(|&j| j >= grid.t()) {
            return Err(FtsError::invalid_argument(
                "degenerate frequency index outside the grid",
            ));
        }
        Ok(Self {
            grid,
            values,
            k_used,
            degenerate,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[ComplexOperator] {
        &self.values
    }

    /// Value at frequency index `j < T`.
    pub fn value(&self, j: usize) -> &ComplexOperator {
        &self.values[j]
    }

    /// Truncation level used at each frequency (0 where degenerate).
    pub fn k_used(&self) -> &[usize] {
        &self.k_used
    }

    /// Sorted indices of frequencies whose spectrum could not be inverted.
    pub fn degenerate(&self) -> &[usize] {
        &self.degenerate
    }

    pub fn d(&self) -> usize {
        self.values[0].d()
    }
}

/// Smoothed spectral density of a lag-covariance sequence:
/// `F(theta_j) = (1/2pi) sum_{|h| <= q} w(h/q) C_h e^{-ih theta_j}`.
pub fn spectral_from_lagcovs(
    c: &LagCovSequence,
    grid: &FrequencyGrid,
    window: Window,
) -> Result<SpectralDensity> {
    let d = c.d();
    let q = c.q();
    let scale = 1.0 / TAU;
    // window and 1/2pi folded into the real lag matrices once
    let weighted: Vec<(i64, DMatrix<f64>)> = c
        .iter()
        .map(|(h, op)| (h, op.mat() * (window.weight(h, q) * scale)))
        .collect();
    let mut values = Vec::with_capacity(grid.t());
    for j in 0..grid.t() {
        let theta = grid.theta(j);
        let mut m = DMatrix::<Complex64>::zeros(d, d);
        for (h, w) in &weighted {
            let phase = Complex64::from_polar(1.0, -(*h as f64) * theta);
            for (dst, src) in m.iter_mut().zip(w.iter()) {
                *dst += phase * *src;
            }
        }
        values.push(ComplexOperator::new(m)?);
    }
    SpectralDensity::from_values(*grid, values)
}

/// Spectral density of one series from its centered autocovariances up to
/// lag q.
pub fn auto_spectral(
    x: &FtsSample,
    q: usize,
    grid: &FrequencyGrid,
    window: Window,
) -> Result<SpectralDensity> {
    spectral_from_lagcovs(&LagCovSequence::autocovariances(x, q)?, grid, window)
}

/// Cross-spectral density of two series from their centered lag
/// cross-covariances up to lag q.
pub fn cross_spectral(
    y: &FtsSample,
    x: &FtsSample,
    q: usize,
    grid: &FrequencyGrid,
    window: Window,
) -> Result<SpectralDensity> {
    spectral_from_lagcovs(&LagCovSequence::cross_covariances(y, x, q)?, grid, window)
}

fn invert_spectrum(
    fx: &ComplexOperator,
    k: Truncation,
    floor: f64,
) -> Result<(ComplexOperator, usize)> {
    let k = match k {
        Truncation::Fixed(k) => k,
        Truncation::Auto { tau } => {
            let eig = fx.hermitian_eigendecompose()?;
            select_k_from_eigenvalues(&eig.eigenvalues, tau)?
        }
    };
    fx.truncated_inverse(k, floor)
}

/// Per-frequency deconvolution `R(theta_j) = F^{YX}(theta_j) inv_K(F^X(theta_j))`
/// with the truncated Hermitian inverse.
///
/// A frequency whose input spectrum is degenerate (no positive eigenvalue
/// mass) gets a zero response and is flagged instead of aborting the fit.
pub fn frequency_response(
    fyx: &SpectralDensity,
    fx: &SpectralDensity,
    k: Truncation,
    floor: f64,
) -> Result<FrequencyResponse> {
    if fyx.grid() != fx.grid() {
        return Err(FtsError::FrequencyGridMismatch {
            left: fyx.grid().t(),
            right: fx.grid().t(),
        });
    }
    let d = fx.d();
    if fyx.d() != d {
        return Err(FtsError::DimensionMismatch {
            expected: d,
            got: fyx.d(),
        });
    }
    if let Truncation::Fixed(k) = k {
        if k == 0 || k > d {
            return Err(FtsError::invalid_argument(format!(
                "truncation level K = {k} outside 1..={d}"
            )));
        }
    }
    let t = fx.grid().t();
    let mut values = Vec::with_capacity(t);
    let mut k_used = Vec::with_capacity(t);
    let mut degenerate = Vec::new();
    for j in 0..t {
        match invert_spectrum(fx.value(j), k, floor) {
            Ok((inv, kj)) => {
                values.push(fyx.value(j).compose(&inv)?);
                k_used.push(kj);
            }
            Err(FtsError::DegenerateOperator(_)) => {
                values.push(ComplexOperator::zero(d));
                k_used.push(0);
                degenerate.push(j);
            }
            Err(e) => return Err(e),
        }
    }
    FrequencyResponse::from_parts(*fx.grid(), values, k_used, degenerate)
}

/// Inverse transform of a response to lag-domain coefficients over the given
/// support: `A_k = (1/T) sum_j R(theta_j) e^{+ik theta_j}`.
///
/// Exact for responses of filters whose support fits inside a window of T
/// consecutive lags; wider filters alias modulo T.
pub fn filter_coefficients(r: &FrequencyResponse, support: (i64, i64)) -> Result<LinearFilter> {
    let (k_min, k_max) = support;
    if k_min > k_max {
        return Err(FtsError::invalid_argument(format!(
            "filter support {k_min}:{k_max} is empty"
        )));
    }
    let t = r.grid().t();
    let width = (k_max - k_min + 1) as usize;
    if width > t {
        return Err(FtsError::invalid_argument(format!(
            "{t} frequencies cannot resolve {width} filter lags"
        )));
    }
    let d = r.d();
    let inv_t = 1.0 / t as f64;
    let mut worst = 0.0f64;
    let mut ops = Vec::with_capacity(width);
    for k in k_min..=k_max {
        let mut m = DMatrix::<Complex64>::zeros(d, d);
        for j in 0..t {
            let phase = Complex64::from_polar(inv_t, k as f64 * r.grid().theta(j));
            for (dst, src) in m.iter_mut().zip(r.value(j).mat().iter()) {
                *dst += phase * *src;
            }
        }
        let op = ComplexOperator::new(m)?;
        worst = worst.max(op.max_imag());
        ops.push(op.real_part());
    }
    if worst > IMAG_RESIDUE_TOL {
        return Err(FtsError::ConjugateSymmetry {
            residue: worst,
            tol: IMAG_RESIDUE_TOL,
        });
    }
    LinearFilter::new(k_min, ops)
}

/// Exact response of a finite filter: `R(theta_j) = sum_k A_k e^{-ik theta_j}`.
///
/// No truncation is involved, so `k_used` is the full dimension everywhere.
pub fn response_of_filter(f: &LinearFilter, grid: &FrequencyGrid) -> FrequencyResponse {
    let d = f.d();
    let t = grid.t();
    let mut values = Vec::with_capacity(t);
    for j in 0..t {
        let theta = grid.theta(j);
        let mut m = DMatrix::<Complex64>::zeros(d, d);
        for (k, op) in f.iter() {
            let phase = Complex64::from_polar(1.0, -(k as f64) * theta);
            for (dst, src) in m.iter_mut().zip(op.mat().iter()) {
                *dst += phase * *src;
            }
        }
        // finite filter entries stay finite under the phase sum
        values.push(ComplexOperator::new(m).expect("finite response"));
    }
    FrequencyResponse {
        grid: *grid,
        values,
        k_used: vec![d; t],
        degenerate: Vec::new(),
    }
}

/// Default smoothing bandwidth `q = ceil(N^{1/3})`, guarded against float
/// error on exact integer cubes.
pub fn default_bandwidth(n: usize) -> usize {
    let c = (n as f64).powf(1.0 / 3.0);
    let r = c.round();
    let q = if (r * r * r - n as f64).abs() < 1e-6 * (n as f64).max(1.0) {
        r as usize
    } else {
        c.ceil() as usize
    };
    q.max(1)
}

/// Default frequency count `T = 2 (q + max |support|) + 1`, the smallest odd
/// grid on which every inverse transform in the pipeline is alias-free.
pub fn default_frequencies(q: usize, support: (i64, i64)) -> usize {
    let reach = support.0.unsigned_abs().max(support.1.unsigned_abs()) as usize;
    2 * (q + reach) + 1
}

/// Frequency-domain filter fit with the Bartlett window and default floor;
/// see [`fit_lagged_spectral_with`].
pub fn fit_lagged_spectral(
    x: &FtsSample,
    y: &FtsSample,
    q: usize,
    t: usize,
    support: (i64, i64),
    k: Truncation,
) -> Result<LinearFilter> {
    fit_lagged_spectral_with(x, y, q, t, support, k, Window::default(), DEFAULT_EIGEN_FLOOR)
}

/// Full frequency-domain pipeline: smoothed auto and cross spectra at T
/// frequencies, per-frequency deconvolution, inverse transform to the
/// requested support.
///
/// Unlike the stacked time-domain estimator this admits two-sided supports
/// (negative lags).
#[allow(clippy::too_many_arguments)]
pub fn fit_lagged_spectral_with(
    x: &FtsSample,
    y: &FtsSample,
    q: usize,
    t: usize,
    support: (i64, i64),
    k: Truncation,
    window: Window,
    floor: f64,
) -> Result<LinearFilter> {
    let grid = FrequencyGrid::fourier(t)?;
    let fx = auto_spectral(x, q, &grid, window)?;
    let fyx = cross_spectral(y, x, q, &grid, window)?;
    let r = frequency_response(&fyx, &fx, k, floor)?;
    filter_coefficients(&r, support)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Curve;
    use crate::operators::HsOperator;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

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

    fn op2(entries: [f64; 4]) -> HsOperator {
        HsOperator::from_row_slice(2, &entries).unwrap()
    }

    fn complex_diff(a: &ComplexOperator, b: &ComplexOperator) -> f64 {
        a.sub(b).unwrap().hs_norm()
    }

    #[test]
    fn grid_spans_the_unit_circle() {
        assert!(FrequencyGrid::fourier(0).is_err());
        let grid = FrequencyGrid::fourier(8).unwrap();
        assert_eq!(grid.t(), 8);
        assert_abs_diff_eq!(grid.theta(0), 0.0);
        assert_abs_diff_eq!(grid.theta(2), std::f64::consts::FRAC_PI_2);
        let thetas = grid.thetas();
        assert_eq!(thetas.len(), 8);
        assert!(thetas.iter().all(|&th| (0.0..TAU).contains(&th)));
    }

    #[test]
    fn window_weights_match_their_definitions() {
        assert_abs_diff_eq!(Window::Bartlett.weight(0, 4), 1.0);
        assert_abs_diff_eq!(Window::Bartlett.weight(2, 4), 0.5);
        assert_abs_diff_eq!(Window::Bartlett.weight(-2, 4), 0.5);
        assert_abs_diff_eq!(Window::Bartlett.weight(4, 4), 0.0);
        assert_abs_diff_eq!(Window::Bartlett.weight(0, 0), 1.0);
        assert_abs_diff_eq!(Window::Rectangular.weight(3, 4), 1.0);
    }

    #[test]
    fn lag_zero_only_gives_a_flat_spectrum() {
        let q = 3;
        let mut ops = vec![HsOperator::zero(2); 2 * q + 1];
        ops[q] = HsOperator::from_diagonal(&[2.0, 1.0]).unwrap();
        let c = LagCovSequence::from_ops(q, ops).unwrap();
        let grid = FrequencyGrid::fourier(5).unwrap();
        let want = ComplexOperator::from_real(&HsOperator::from_diagonal(&[2.0, 1.0]).unwrap())
            .scale(Complex64::new(1.0 / TAU, 0.0));
        for window in [Window::Bartlett, Window::Rectangular] {
            let s = spectral_from_lagcovs(&c, &grid, window).unwrap();
            for j in 0..grid.t() {
                assert!(complex_diff(s.value(j), &want) < 1e-14);
            }
        }
    }

    #[test]
    fn geometric_lags_match_the_closed_form_spectrum() {
        // scalar C_h = rho^|h|; the full series sums to
        // (1 - rho^2) / (1 - 2 rho cos(theta) + rho^2) / 2pi
        let rho = 0.6f64;
        let q = 400;
        let ops: Vec<HsOperator> = (-(q as i64)..=q as i64)
            .map(|h| HsOperator::from_row_slice(1, &[rho.powi(h.unsigned_abs() as i32)]).unwrap())
            .collect();
        let c = LagCovSequence::from_ops(q, ops).unwrap();
        let grid = FrequencyGrid::fourier(8).unwrap();
        let s = spectral_from_lagcovs(&c, &grid, Window::Rectangular).unwrap();
        for j in 0..grid.t() {
            let theta = grid.theta(j);
            let closed = (1.0 - rho * rho) / (1.0 - 2.0 * rho * theta.cos() + rho * rho) / TAU;
            // independent partial-sum oracle for the truncated series
            let z = Complex64::from_polar(rho, -theta);
            let partial = (1.0 + 2.0 * ((z - z.powu(q as u32 + 1)) / (1.0 - z)).re) / TAU;
            let got = s.value(j).mat()[(0, 0)];
            assert_abs_diff_eq!(got.re, partial, epsilon = 1e-12);
            assert_abs_diff_eq!(got.re, closed, epsilon = 1e-10);
            assert!(got.im.abs() < 1e-12);
        }
    }

    #[test]
    fn discrete_inversion_recovers_rectangular_lag_inputs() {
        let q = 2;
        let ops = vec![
            op2([0.1, -0.2, 0.3, 0.4]),
            op2([0.5, 0.1, -0.3, 0.2]),
            op2([1.0, 0.2, 0.2, 0.8]),
            op2([-0.4, 0.6, 0.0, 0.3]),
            op2([0.2, -0.1, 0.7, -0.5]),
        ];
        let c = LagCovSequence::from_ops(q, ops).unwrap();
        let grid = FrequencyGrid::fourier(7).unwrap();
        let s = spectral_from_lagcovs(&c, &grid, Window::Rectangular).unwrap();
        // C_h = (2pi/T) sum_j F(theta_j) e^{+ih theta_j} for |h| <= q < T/2
        for h in -(q as i64)..=q as i64 {
            let mut m = DMatrix::<Complex64>::zeros(2, 2);
            for j in 0..grid.t() {
                let phase = Complex64::from_polar(TAU / grid.t() as f64, h as f64 * grid.theta(j));
                for (dst, src) in m.iter_mut().zip(s.value(j).mat().iter()) {
                    *dst += phase * *src;
                }
            }
            let want = c.get(h).unwrap();
            for (got, expect) in m.iter().zip(want.mat().iter()) {
                assert_abs_diff_eq!(got.re, *expect, epsilon = 1e-10);
                assert!(got.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cross_spectrum_of_a_sample_with_itself_is_the_auto_spectrum() {
        let x = lcg_sample(2, 40, 7);
        let grid = FrequencyGrid::fourier(9).unwrap();
        let auto = auto_spectral(&x, 3, &grid, Window::Bartlett).unwrap();
        let cross = cross_spectral(&x, &x, 3, &grid, Window::Bartlett).unwrap();
        for j in 0..grid.t() {
            assert!(complex_diff(auto.value(j), cross.value(j)) < 1e-14);
        }
    }

    #[test]
    fn instantaneous_map_factorizes_the_cross_spectrum() {
        // Y_t = A0 X_t pointwise makes C^{YX}_h = A0 C^X_h at every lag, so
        // the factorization survives smoothing with any window
        let x = lcg_sample(2, 60, 11);
        let a0 = op2([0.8, 0.1, -0.2, 0.5]);
        let y = FtsSample::from_matrix(a0.mat() * x.data()).unwrap();
        let grid = FrequencyGrid::fourier(7).unwrap();
        let fx = auto_spectral(&x, 4, &grid, Window::Bartlett).unwrap();
        let fyx = cross_spectral(&y, &x, 4, &grid, Window::Bartlett).unwrap();
        let a0c = ComplexOperator::from_real(&a0);
        for j in 0..grid.t() {
            let want = a0c.compose(fx.value(j)).unwrap();
            assert!(complex_diff(fyx.value(j), &want) < 1e-12);
        }
    }

    #[test]
    fn population_shift_pipeline_recovers_lag_one() {
        // white X with C_0 = diag(2, 1), Y_t = A1 X_{t-1}: the response is
        // e^{-i theta} A1 and inversion must place A1 at lag +1
        let q = 2;
        let c0 = HsOperator::from_diagonal(&[2.0, 1.0]).unwrap();
        let a1 = op2([0.5, 0.25, 0.0, 1.0]);
        let mut auto_ops = vec![HsOperator::zero(2); 2 * q + 1];
        auto_ops[q] = c0.clone();
        let mut cross_ops = vec![HsOperator::zero(2); 2 * q + 1];
        cross_ops[q + 1] = a1.compose(&c0).unwrap();
        let grid = FrequencyGrid::fourier(7).unwrap();
        let fx = spectral_from_lagcovs(
            &LagCovSequence::from_ops(q, auto_ops).unwrap(),
            &grid,
            Window::Rectangular,
        )
        .unwrap();
        let fyx = spectral_from_lagcovs(
            &LagCovSequence::from_ops(q, cross_ops).unwrap(),
            &grid,
            Window::Rectangular,
        )
        .unwrap();
        let r = frequency_response(&fyx, &fx, Truncation::Fixed(2), DEFAULT_EIGEN_FLOOR).unwrap();
        assert!(r.degenerate().is_empty());
        assert!(r.k_used().iter().all(|&k| k == 2));
        let filter = filter_coefficients(&r, (-2, 2)).unwrap();
        for k in -2..=2 {
            let got = filter.op(k).unwrap();
            if k == 1 {
                assert!(got.sub(&a1).unwrap().hs_norm() < 1e-10);
            } else {
                assert!(got.hs_norm() < 1e-10);
            }
        }
    }

    #[test]
    fn population_two_sided_filter_is_recovered() {
        // white X, Y_t = A_{-1} X_{t+1} + A_0 X_t + A_1 X_{t-1}
        let q = 1;
        let c0 = HsOperator::from_diagonal(&[1.5, 0.5]).unwrap();
        let lags = [
            op2([0.2, -0.1, 0.0, 0.4]),
            op2([1.0, 0.3, 0.3, 0.7]),
            op2([-0.5, 0.0, 0.2, 0.1]),
        ];
        let auto_ops = vec![HsOperator::zero(2), c0.clone(), HsOperator::zero(2)];
        let cross_ops: Vec<HsOperator> = lags.iter().map(|a| a.compose(&c0).unwrap()).collect();
        let grid = FrequencyGrid::fourier(9).unwrap();
        let fx = spectral_from_lagcovs(
            &LagCovSequence::from_ops(q, auto_ops).unwrap(),
            &grid,
            Window::Rectangular,
        )
        .unwrap();
        let fyx = spectral_from_lagcovs(
            &LagCovSequence::from_ops(q, cross_ops).unwrap(),
            &grid,
            Window::Rectangular,
        )
        .unwrap();
        let r = frequency_response(&fyx, &fx, Truncation::Fixed(2), DEFAULT_EIGEN_FLOOR).unwrap();
        let filter = filter_coefficients(&r, (-1, 1)).unwrap();
        for (i, k) in (-1..=1).enumerate() {
            assert!(filter.op(k).unwrap().sub(&lags[i]).unwrap().hs_norm() < 1e-10);
        }
    }

    #[test]
    fn constant_response_inverts_to_a_lag_zero_filter() {
        let a0 = op2([0.4, -0.3, 0.2, 0.9]);
        let filter = LinearFilter::causal(vec![a0.clone()]).unwrap();
        let grid = FrequencyGrid::fourier(5).unwrap();
        let r = response_of_filter(&filter, &grid);
        for j in 0..grid.t() {
            assert!(complex_diff(r.value(j), &ComplexOperator::from_real(&a0)) < 1e-14);
        }
        let back = filter_coefficients(&r, (-2, 2)).unwrap();
        assert!(back.op(0).unwrap().sub(&a0).unwrap().hs_norm() < 1e-12);
        for k in [-2i64, -1, 1, 2] {
            assert!(back.op(k).unwrap().hs_norm() < 1e-12);
        }
    }

    #[test]
    fn response_matches_a_manual_term_sum() {
        let a0 = op2([0.6, 0.1, -0.4, 0.8]);
        let a1 = op2([0.2, -0.7, 0.5, 0.3]);
        let filter = LinearFilter::causal(vec![a0.clone(), a1.clone()]).unwrap();
        let grid = FrequencyGrid::fourier(5).unwrap();
        let r = response_of_filter(&filter, &grid);
        for j in 0..grid.t() {
            let phase = Complex64::from_polar(1.0, -grid.theta(j));
            let want = ComplexOperator::from_real(&a0)
                .add(&ComplexOperator::from_real(&a1).scale(phase))
                .unwrap();
            assert!(complex_diff(r.value(j), &want) < 1e-14);
        }
    }

    #[test]
    fn transform_round_trip_is_the_identity_on_filters() {
        let ops: Vec<HsOperator> = (0..6)
            .map(|i| {
                let base = i as f64;
                op2([
                    0.3 * base - 0.5,
                    0.1 * base,
                    -0.2 * base + 0.4,
                    0.05 * base * base - 0.3,
                ])
            })
            .collect();
        let filter = LinearFilter::new(-2, ops).unwrap();
        let grid = FrequencyGrid::fourier(7).unwrap();
        let r = response_of_filter(&filter, &grid);
        let back = filter_coefficients(&r, filter.support()).unwrap();
        assert!(filter.hs_distance(&back).unwrap() < 1e-10);
    }

    #[test]
    fn parseval_identity_holds_on_the_grid() {
        let ops: Vec<HsOperator> = (0..5)
            .map(|i| op2([1.0 / (i as f64 + 1.0), 0.2 * i as f64, -0.1, 0.3]))
            .collect();
        let filter = LinearFilter::new(-1, ops).unwrap();
        let grid = FrequencyGrid::fourier(7).unwrap();
        let r = response_of_filter(&filter, &grid);
        let lag_side: f64 = filter.iter().map(|(_, op)| op.hs_norm().powi(2)).sum();
        let freq_side: f64 = r
            .values()
            .iter()
            .map(|v| v.hs_norm().powi(2))
            .sum::<f64>()
            / grid.t() as f64;
        assert_abs_diff_eq!(lag_side, freq_side, epsilon = 1e-8);
    }

    #[test]
    fn convolution_in_time_is_multiplication_in_frequency() {
        let a = LinearFilter::causal(vec![
            op2([0.5, 0.1, 0.0, 0.4]),
            op2([-0.2, 0.3, 0.2, 0.1]),
        ])
        .unwrap();
        let b = LinearFilter::new(
            -1,
            vec![
                op2([0.3, 0.0, -0.1, 0.6]),
                op2([0.8, -0.4, 0.2, 0.2]),
                op2([0.1, 0.2, -0.3, 0.5]),
            ],
        )
        .unwrap();
        let composed = a.convolve(&b).unwrap();
        let grid = FrequencyGrid::fourier(9).unwrap();
        let lhs = response_of_filter(&composed, &grid);
        let ra = response_of_filter(&a, &grid);
        let rb = response_of_filter(&b, &grid);
        for j in 0..grid.t() {
            let product = ra.value(j).compose(rb.value(j)).unwrap();
            assert!(complex_diff(lhs.value(j), &product) < 1e-10);
        }
    }

    #[test]
    fn bartlett_auto_spectra_are_hermitian_psd_and_conjugate_symmetric() {
        let x = lcg_sample(3, 60, 3);
        let grid = FrequencyGrid::fourier(9).unwrap();
        let s = auto_spectral(&x, 4, &grid, Window::Bartlett).unwrap();
        for j in 0..grid.t() {
            let v = s.value(j);
            assert!(complex_diff(v, &v.adjoint()) < 1e-8);
            let eig = v.hermitian_eigendecompose().unwrap();
            let top = eig.eigenvalues[0].max(0.0);
            assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-10 * top.max(1.0)));
        }
        for j in 1..grid.t() {
            let mirrored = ComplexOperator::new(s.value(grid.t() - j).mat().map(|z| z.conj()))
                .unwrap();
            assert!(complex_diff(s.value(j), &mirrored) < 1e-10);
        }
    }

    #[test]
    fn degenerate_frequencies_are_flagged_not_fatal() {
        let grid = FrequencyGrid::fourier(3).unwrap();
        let zeros = vec![ComplexOperator::zero(2); 3];
        let fx = SpectralDensity::from_values(grid, zeros).unwrap();
        let fyx = SpectralDensity::from_values(
            grid,
            vec![ComplexOperator::from_real(&HsOperator::identity(2)); 3],
        )
        .unwrap();
        for k in [Truncation::Fixed(2), Truncation::default()] {
            let r = frequency_response(&fyx, &fx, k, DEFAULT_EIGEN_FLOOR).unwrap();
            assert_eq!(r.degenerate(), &[0, 1, 2]);
            assert!(r.k_used().iter().all(|&kj| kj == 0));
            assert!(r.values().iter().all(|v| v.hs_norm() == 0.0));
        }
    }

    #[test]
    fn response_rejects_bad_truncation_and_mismatched_grids() {
        let x = lcg_sample(2, 30, 5);
        let grid = FrequencyGrid::fourier(5).unwrap();
        let fx = auto_spectral(&x, 2, &grid, Window::Bartlett).unwrap();
        assert!(matches!(
            frequency_response(&fx, &fx, Truncation::Fixed(0), DEFAULT_EIGEN_FLOOR),
            Err(FtsError::InvalidArgument(_))
        ));
        assert!(matches!(
            frequency_response(&fx, &fx, Truncation::Fixed(3), DEFAULT_EIGEN_FLOOR),
            Err(FtsError::InvalidArgument(_))
        ));
        let other = auto_spectral(&x, 2, &FrequencyGrid::fourier(7).unwrap(), Window::Bartlett)
            .unwrap();
        assert!(matches!(
            frequency_response(&other, &fx, Truncation::Fixed(2), DEFAULT_EIGEN_FLOOR),
            Err(FtsError::FrequencyGridMismatch { left: 7, right: 5 })
        ));
    }

    #[test]
    fn asymmetric_response_fails_the_conjugate_symmetry_gate() {
        let grid = FrequencyGrid::fourier(4).unwrap();
        let ident = ComplexOperator::from_real(&HsOperator::identity(2));
        let values = vec![
            ident.clone(),
            ident.scale(Complex64::i()),
            ident.clone(),
            ident.clone(),
        ];
        let r = FrequencyResponse::from_parts(grid, values, vec![2; 4], vec![]).unwrap();
        assert!(matches!(
            filter_coefficients(&r, (0, 0)),
            Err(FtsError::ConjugateSymmetry { .. })
        ));
    }

    #[test]
    fn coefficient_support_must_fit_the_grid() {
        let filter = LinearFilter::causal(vec![HsOperator::identity(2)]).unwrap();
        let grid = FrequencyGrid::fourier(3).unwrap();
        let r = response_of_filter(&filter, &grid);
        assert!(filter_coefficients(&r, (1, 0)).is_err());
        assert!(filter_coefficients(&r, (-2, 2)).is_err());
        assert!(filter_coefficients(&r, (-1, 1)).is_ok());
    }

    #[test]
    fn default_parameters_follow_the_cube_root_rule() {
        assert_eq!(default_bandwidth(1), 1);
        assert_eq!(default_bandwidth(8), 2);
        assert_eq!(default_bandwidth(27), 3);
        assert_eq!(default_bandwidth(999), 10);
        assert_eq!(default_bandwidth(1000), 10);
        assert_eq!(default_bandwidth(1001), 11);
        assert_eq!(default_frequencies(16, (0, 3)), 39);
        assert_eq!(default_frequencies(16, (-1, 1)), 35);
        assert_eq!(default_frequencies(4, (0, 0)), 9);
    }

    #[test]
    fn spectral_fit_recovers_an_instantaneous_map() {
        // noiseless Y = A0 X keeps the factorization exact at any window, so
        // the fitted lag-0 coefficient matches to inversion roundoff
        let x = lcg_sample(2, 400, 21);
        let a0 = op2([0.8, 0.1, -0.2, 0.5]);
        let y = FtsSample::from_matrix(a0.mat() * x.data()).unwrap();
        let q = 4;
        let t = default_frequencies(q, (-1, 1));
        let filter =
            fit_lagged_spectral(&x, &y, q, t, (-1, 1), Truncation::Fixed(2)).unwrap();
        assert!(filter.op(0).unwrap().sub(&a0).unwrap().hs_norm() < 1e-10);
        assert!(filter.op(-1).unwrap().hs_norm() < 1e-10);
        assert!(filter.op(1).unwrap().hs_norm() < 1e-10);
    }

    #[test]
    fn spectral_types_round_trip_through_json() {
        let x = lcg_sample(2, 30, 9);
        let grid = FrequencyGrid::fourier(5).unwrap();
        let s = auto_spectral(&x, 2, &grid, Window::Bartlett).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: SpectralDensity = serde_json::from_str(&json).unwrap();
        assert_eq!(back.grid().t(), 5);
        for j in 0..5 {
            assert!(complex_diff(s.value(j), back.value(j)) == 0.0);
        }

        let fyx = cross_spectral(&x, &x, 2, &grid, Window::Bartlett).unwrap();
        let r = frequency_response(&fyx, &s, Truncation::default(), DEFAULT_EIGEN_FLOOR).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: FrequencyResponse = serde_json::from_str(&json).unwrap();
        assert_eq!(back.k_used(), r.k_used());
        assert_eq!(back.degenerate(), r.degenerate());

        // count mismatch must be rejected on read
        let corrupt = json.replacen("\"t\":5", "\"t\":4", 1);
        assert!(serde_json::from_str::<FrequencyResponse>(&corrupt).is_err());

        let wjson = serde_json::to_string(&Window::Bartlett).unwrap();
        assert_eq!(wjson, "\"bartlett\"");
        assert_eq!(
            serde_json::from_str::<Window>("\"rectangular\"").unwrap(),
            Window::Rectangular
        );
    }

    proptest! {
        #[test]
        fn round_trip_recovers_random_filters(
            entries in proptest::collection::vec(-1.0f64..1.0, 20),
            k_min in -2i64..=0,
        ) {
            let ops: Vec<HsOperator> = entries
                .chunks(4)
                .map(|c| HsOperator::from_row_slice(2, c).unwrap())
                .collect();
            let filter = LinearFilter::new(k_min, ops).unwrap();
            let reach = filter.support().0.unsigned_abs().max(filter.support().1.unsigned_abs());
            let grid = FrequencyGrid::fourier(2 * reach as usize + 1).unwrap();
            let r = response_of_filter(&filter, &grid);
            let back = filter_coefficients(&r, filter.support()).unwrap();
            prop_assert!(filter.hs_distance(&back).unwrap() < 1e-9);
        }
    }
}
