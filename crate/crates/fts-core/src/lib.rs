//! Functional time series analysis in a finite Fourier basis.
//!
//! The crate represents curves in L2[0,1] by their first d Fourier
//! coefficients and builds the layers of a functional regression pipeline on
//! top of that representation:
//!
//! * [`basis`]: grids, quadrature, projection and reconstruction.
//! * [`operators`]: Hilbert-Schmidt operators as d x d matrices, real and
//!   complex, with eigendecompositions and regularized inverses.
//! * [`moments`]: empirical means, lagged auto- and cross-covariance
//!   operators of a curve time series.
//! * [`regression`]: regularized functional linear regression, lagged
//!   regression through stacking, linear filters and prediction.
//! * [`spectral`]: spectral density operators, frequency-response estimation
//!   and filter recovery by inverse transform.
//! * [`simulate`]: seeded Gaussian processes used as simulation oracles.
//! * [`io`]: CSV and JSON interchange formats for curves, operators and fits.

pub mod basis;
pub mod error;
pub mod io;
pub mod moments;
pub mod regression;
pub mod simulate;
pub mod spectral;
pub mod operators;

pub use error::{FtsError, Result};
