//! Seeded generators for functional white noise, first-order functional
//! autoregressions, and linear-filter responses; the ground truth against
//! which the estimators are tested.
//!
//! Simulation happens directly in coefficient space, so the covariance
//! eigenstructure of the innovations is exact rather than subject to
//! quadrature error. Determinism contract: the stream is ChaCha8 keyed by
//! the 64-bit seed, and coefficients are drawn curve by curve (all d
//! coefficients of curve t before curve t+1), so identical specs give
//! bit-identical samples on every platform and thread count.

use nalgebra::DMatrix;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{FtsError, Result};
use crate::moments::FtsSample;
use crate::operators::HsOperator;
use crate::regression::LinearFilter;

/// Transient steps discarded before an autoregression is considered
/// stationary; at spectral radius 0.9 the zero-start bias is below 1e-9.
pub const DEFAULT_BURN_IN: usize = 200;

/// Innovation law: independent Gaussian coefficients with variances
/// `eigenvalues`, streamed from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseSpecRepr", into = "NoiseSpecRepr")]
pub struct NoiseSpec {
    eigenvalues: Vec<f64>,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct NoiseSpecRepr {
    eigenvalues: Vec<f64>,
    seed: u64,
}

impl TryFrom<NoiseSpecRepr> for NoiseSpec {
    type Error = FtsError;

    fn try_from(repr: NoiseSpecRepr) -> Result<Self> {
        NoiseSpec::new(repr.eigenvalues, repr.seed)
    }
}

impl From<NoiseSpec> for NoiseSpecRepr {
    fn from(spec: NoiseSpec) -> Self {
        Self {
            eigenvalues: spec.eigenvalues,
            seed: spec.seed,
        }
    }
}

impl NoiseSpec {
    pub fn new(eigenvalues: Vec<f64>, seed: u64) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(FtsError::invalid_argument(
                "noise spec needs at least one eigenvalue",
            ));
        }
        if eigenvalues.iter().any(|&l| !l.is_finite() || l <= 0.0) {
            return Err(FtsError::invalid_argument(
                "noise eigenvalues must be finite and positive",
            ));
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
            return Err(FtsError::invalid_argument(
                "noise eigenvalues must be nonincreasing",
            ));
        }
        Ok(Self { eigenvalues, seed })
    }

    /// Polynomial decay `lambda_i = i^{-2}`, the default innovation law:
    /// square summable, with enough spread that truncation choices matter.
    pub fn polynomial(d: usize, seed: u64) -> Result<Self> {
        Self::new(
            (1..=d).map(|i| 1.0 / (i * i) as f64).collect(),
            seed,
        )
    }

    /// Same eigenvalues scaled by `a > 0` (noise level control).
    pub fn scaled(&self, a: f64) -> Result<Self> {
        if !a.is_finite() || a <= 0.0 {
            return Err(FtsError::invalid_argument(
                "noise scale must be finite and positive",
            ));
        }
        Self::new(self.eigenvalues.iter().map(|l| l * a).collect(), self.seed)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            eigenvalues: self.eigenvalues.clone(),
            seed,
        }
    }

    pub fn d(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Total variance `sum_i lambda_i`.
    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

fn draw_noise_matrix(spec: &NoiseSpec, n: usize) -> DMatrix<f64> {
    let d = spec.d();
    let sds: Vec<f64> = spec.eigenvalues.iter().map(|l| l.sqrt()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data = DMatrix::zeros(d, n);
    for t in 0..n {
        for i in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            data[(i, t)] = sds[i] * z;
        }
    }
    data
}

/// N iid curves with independent Gaussian coefficients of variance
/// `lambda_i`.
pub fn gaussian_white_noise(spec: &NoiseSpec, n: usize) -> Result<FtsSample> {
    if n == 0 {
        return Err(FtsError::InsufficientData {
            what: "white noise sample",
            needed: 1,
            got: 0,
        });
    }
    FtsSample::from_matrix(draw_noise_matrix(spec, n))
}

/// Largest eigenvalue magnitude of the operator matrix.
pub fn spectral_radius(op: &HsOperator) -> f64 {
    op.mat()
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max)
}

/// First-order autoregression `X_t = Psi(X_{t-1}) + eps_t`, started at zero
/// with `burn_in` discarded transient steps.
pub fn simulate_far1(
    psi: &HsOperator,
    noise: &NoiseSpec,
    n: usize,
    burn_in: usize,
) -> Result<FtsSample> {
    if psi.d() != noise.d() {
        return Err(FtsError::DimensionMismatch {
            expected: noise.d(),
            got: psi.d(),
        });
    }
    if n == 0 {
        return Err(FtsError::InsufficientData {
            what: "autoregression sample",
            needed: 1,
            got: 0,
        });
    }
    let radius = spectral_radius(psi);
    if radius >= 1.0 {
        return Err(FtsError::UnstableAr {
            spectral_radius: radius,
        });
    }
    let d = noise.d();
    let total = n + burn_in;
    let eps = draw_noise_matrix(noise, total);
    let mut data = DMatrix::zeros(d, n);
    let mut prev = nalgebra::DVector::<f64>::zeros(d);
    for t in 0..total {
        let cur = psi.mat() * &prev + eps.column(t);
        if t >= burn_in {
            data.set_column(t - burn_in, &cur);
        }
        prev = cur;
    }
    FtsSample::from_matrix(data)
}

/// Filter response with optional additive innovations:
/// `Y_t = sum_k A_k(X_{t-k}) + eps_t` on the indices where the whole filter
/// support is observed.
///
/// Returns the trimmed input, the response, and the offset of the first
/// retained index into the original sample.
pub fn simulate_filtered(
    x: &FtsSample,
    filter: &LinearFilter,
    noise: Option<&NoiseSpec>,
) -> Result<(FtsSample, FtsSample, usize)> {
    let filtered = filter.apply(x)?;
    let start = filtered.start;
    let len = filtered.sample.len();
    let y = match noise {
        None => filtered.sample,
        Some(spec) => {
            if spec.d() != x.d() {
                return Err(FtsError::DimensionMismatch {
                    expected: x.d(),
                    got: spec.d(),
                });
            }
            FtsSample::from_matrix(filtered.sample.data() + draw_noise_matrix(spec, len))?
        }
    };
    let trimmed = x.slice(start, start + len)?;
    Ok((trimmed, y, start))
}

/// Which process the dispatcher generates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    /// iid innovations only.
    White,
    /// First-order autoregression driven by `ar_operator`.
    Far1,
    /// Filter response `Y` to an input series `X` (white, or FAR(1) when
    /// `ar_operator` is present), plus optional output noise.
    Filtered,
}

/// Serializable description of a simulated experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    /// Ground-truth filter, required for the filtered kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<LinearFilter>,
    /// Autoregression operator, required for far1, optional input dynamics
    /// for filtered.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ar_operator: Option<HsOperator>,
    /// Innovation law of the input series.
    pub x_noise: NoiseSpec,
    /// Additive output noise for the filtered kind; absent means noiseless.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_noise: Option<NoiseSpec>,
    /// Requested series length before filter-support trimming.
    pub len: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

/// Dispatcher output: the input series, the response when one exists, and
/// how many leading indices the filter support trimmed away.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub x: FtsSample,
    pub y: Option<FtsSample>,
    pub start: usize,
}

/// Generates the process a spec describes.
pub fn simulate(spec: &ProcessSpec) -> Result<Simulated> {
    match spec.kind {
        ProcessKind::White => Ok(Simulated {
            x: gaussian_white_noise(&spec.x_noise, spec.len)?,
            y: None,
            start: 0,
        }),
        ProcessKind::Far1 => {
            let psi = spec.ar_operator.as_ref().ok_or_else(|| {
                FtsError::invalid_argument("far1 process needs an ar_operator")
            })?;
            Ok(Simulated {
                x: simulate_far1(psi, &spec.x_noise, spec.len, spec.burn_in)?,
                y: None,
                start: 0,
            })
        }
        ProcessKind::Filtered => {
            let filter = spec.filter.as_ref().ok_or_else(|| {
                FtsError::invalid_argument("filtered process needs a filter")
            })?;
            let x = match &spec.ar_operator {
                Some(psi) => simulate_far1(psi, &spec.x_noise, spec.len, spec.burn_in)?,
                None => gaussian_white_noise(&spec.x_noise, spec.len)?,
            };
            let (x, y, start) = simulate_filtered(&x, filter, spec.y_noise.as_ref())?;
            Ok(Simulated {
                x,
                y: Some(y),
                start,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{autocov, crosscov};
    use approx::assert_abs_diff_eq;

    fn noise(d: usize, seed: u64) -> NoiseSpec {
        NoiseSpec::polynomial(d, seed).unwrap()
    }

    #[test]
    fn noise_spec_validates_its_eigenvalues() {
        assert!(NoiseSpec::new(vec![], 0).is_err());
        assert!(NoiseSpec::new(vec![1.0, -0.1], 0).is_err());
        assert!(NoiseSpec::new(vec![0.5, 1.0], 0).is_err());
        assert!(NoiseSpec::new(vec![1.0, 0.0], 0).is_err());
        let spec = noise(4, 7);
        assert_eq!(spec.d(), 4);
        assert_abs_diff_eq!(spec.eigenvalues()[2], 1.0 / 9.0);
        assert_abs_diff_eq!(spec.trace(), 1.0 + 0.25 + 1.0 / 9.0 + 1.0 / 16.0);
        let scaled = spec.scaled(0.05).unwrap();
        assert_abs_diff_eq!(scaled.eigenvalues()[0], 0.05);
        assert!(spec.scaled(0.0).is_err());
    }

    #[test]
    fn same_seed_gives_bit_identical_samples() {
        let spec = noise(3, 42);
        let a = gaussian_white_noise(&spec, 50).unwrap();
        let b = gaussian_white_noise(&spec, 50).unwrap();
        assert_eq!(a.data(), b.data());
        let c = gaussian_white_noise(&spec.with_seed(43), 50).unwrap();
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn draw_order_is_curve_major() {
        // the contract: all d coefficients of curve t come off the stream
        // before curve t+1, scaled by sqrt(lambda_i)
        let spec = NoiseSpec::new(vec![4.0, 0.25], 9).unwrap();
        let got = gaussian_white_noise(&spec, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
        let expect = [
            [2.0 * z(), 0.5 * z()],
            [2.0 * z(), 0.5 * z()],
        ];
        for (t, col) in expect.iter().enumerate() {
            for (i, &want) in col.iter().enumerate() {
                assert_eq!(got.data()[(i, t)], want);
            }
        }
    }

    #[test]
    fn empty_requests_are_rejected() {
        let spec = noise(2, 1);
        assert!(matches!(
            gaussian_white_noise(&spec, 0),
            Err(FtsError::InsufficientData { .. })
        ));
        let psi = HsOperator::from_diagonal(&[0.5, 0.5]).unwrap();
        assert!(simulate_far1(&psi, &spec, 0, 10).is_err());
    }

    #[test]
    fn white_noise_covariance_concentrates_on_the_eigenvalues() {
        let d = 5;
        let n = 10_000;
        let spec = noise(d, 2024);
        let x = gaussian_white_noise(&spec, n).unwrap();
        let c0 = autocov(&x, 0).unwrap();
        let tol = 5.0 * spec.eigenvalues()[0] / (n as f64).sqrt();
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { spec.eigenvalues()[i] } else { 0.0 };
                assert_abs_diff_eq!(c0.mat()[(i, j)], want, epsilon = tol);
            }
        }
    }

    #[test]
    fn zero_operator_autoregression_is_white_noise() {
        let spec = noise(3, 5);
        let x = simulate_far1(&HsOperator::zero(3), &spec, 40, 0).unwrap();
        let w = gaussian_white_noise(&spec, 40).unwrap();
        assert_eq!(x.data(), w.data());
    }

    #[test]
    fn unstable_operators_are_rejected_by_modulus() {
        let spec = noise(2, 1);
        let hot = HsOperator::from_diagonal(&[1.05, 0.2]).unwrap();
        match simulate_far1(&hot, &spec, 10, 0) {
            Err(FtsError::UnstableAr { spectral_radius }) => {
                assert_abs_diff_eq!(spectral_radius, 1.05, epsilon = 1e-12)
            }
            other => panic!("expected unstable error, got {other:?}"),
        }
        // rotation by 0.9: complex eigenvalues, modulus 0.9, stable
        let spin = HsOperator::from_row_slice(2, &[0.0, -0.9, 0.9, 0.0]).unwrap();
        assert_abs_diff_eq!(spectral_radius(&spin), 0.9, epsilon = 1e-12);
        assert!(simulate_far1(&spin, &spec, 10, 0).is_ok());
    }

    #[test]
    fn scalar_autoregression_has_the_closed_form_autocorrelation() {
        let spec = NoiseSpec::new(vec![1.0], 11).unwrap();
        let psi = HsOperator::from_diagonal(&[0.5]).unwrap();
        let x = simulate_far1(&psi, &spec, 10_000, DEFAULT_BURN_IN).unwrap();
        let c0 = autocov(&x, 0).unwrap().mat()[(0, 0)];
        let c1 = autocov(&x, 1).unwrap().mat()[(0, 0)];
        assert_abs_diff_eq!(c1 / c0, 0.5, epsilon = 0.05);
    }

    #[test]
    fn long_runs_look_stationary_between_halves() {
        let d = 3;
        let spec = noise(d, 77);
        let psi = HsOperator::from_diagonal(&[0.5, 0.5, 0.5]).unwrap();
        let x = simulate_far1(&psi, &spec, 10_000, DEFAULT_BURN_IN).unwrap();
        let first = x.slice(0, 5_000).unwrap();
        let second = x.slice(5_000, 10_000).unwrap();
        let c_first = autocov(&first, 0).unwrap();
        let c_second = autocov(&second, 0).unwrap();
        let rel = c_first.sub(&c_second).unwrap().hs_norm() / c_first.hs_norm();
        assert!(rel < 0.10, "halves differ by {rel}");
    }

    #[test]
    fn filtered_simulation_matches_hand_built_responses() {
        let spec = noise(2, 31);
        let x = gaussian_white_noise(&spec, 30).unwrap();

        let zero = LinearFilter::causal(vec![HsOperator::zero(2)]).unwrap();
        let (_, y, start) = simulate_filtered(&x, &zero, None).unwrap();
        assert_eq!(start, 0);
        assert!(y.data().iter().all(|&v| v == 0.0));

        let ident = LinearFilter::causal(vec![HsOperator::identity(2)]).unwrap();
        let (xt, y, _) = simulate_filtered(&x, &ident, None).unwrap();
        assert_eq!(y.data(), x.data());
        assert_eq!(xt.data(), x.data());

        let shift = LinearFilter::causal(vec![HsOperator::zero(2), HsOperator::identity(2)])
            .unwrap();
        let (xt, y, start) = simulate_filtered(&x, &shift, None).unwrap();
        assert_eq!(start, 1);
        assert_eq!(xt.len(), 29);
        for t in 0..29 {
            for i in 0..2 {
                // Y_t = X_{t-1} in original indexing
                assert_eq!(y.data()[(i, t)], x.data()[(i, t)]);
                assert_eq!(xt.data()[(i, t)], x.data()[(i, t + 1)]);
            }
        }
    }

    #[test]
    fn output_noise_is_the_seeded_innovation_stream() {
        let x = gaussian_white_noise(&noise(2, 8), 25).unwrap();
        let filter = LinearFilter::causal(vec![
            HsOperator::from_row_slice(2, &[0.5, 0.1, -0.2, 0.4]).unwrap(),
            HsOperator::from_diagonal(&[0.3, 0.3]).unwrap(),
        ])
        .unwrap();
        let y_noise = noise(2, 99).scaled(0.05).unwrap();
        let (_, y, start) = simulate_filtered(&x, &filter, Some(&y_noise)).unwrap();
        let clean = filter.apply(&x).unwrap();
        assert_eq!(start, clean.start);
        let want = gaussian_white_noise(&y_noise, y.len()).unwrap();
        assert_eq!(*y.data(), clean.sample.data() + want.data());
    }

    #[test]
    fn zero_noise_response_satisfies_the_model_exactly() {
        // cross-check the matrix convolution against per-curve operator sums
        let x = gaussian_white_noise(&noise(3, 13), 40).unwrap();
        let ops = vec![
            HsOperator::from_row_slice(3, &[0.5, 0.1, 0.0, -0.2, 0.4, 0.1, 0.0, 0.3, 0.2])
                .unwrap(),
            HsOperator::from_diagonal(&[0.3, 0.2, 0.1]).unwrap(),
        ];
        let filter = LinearFilter::causal(ops.clone()).unwrap();
        let (_, y, start) = simulate_filtered(&x, &filter, None).unwrap();
        for t in 0..y.len() {
            let orig = start + t;
            let mut residual = y.curve(t).unwrap().coeffs().clone();
            for (k, op) in filter.iter() {
                let xk = x.curve(orig - k as usize).unwrap();
                residual -= op.apply(&xk).unwrap().coeffs();
            }
            assert!(residual.norm() < 1e-12);
        }
    }

    #[test]
    fn short_samples_cannot_carry_the_filter_support() {
        let x = gaussian_white_noise(&noise(2, 3), 2).unwrap();
        let wide = LinearFilter::causal(vec![HsOperator::identity(2); 3]).unwrap();
        assert!(matches!(
            simulate_filtered(&x, &wide, None),
            Err(FtsError::InsufficientData { .. })
        ));
    }

    #[test]
    fn dispatcher_covers_the_three_kinds() {
        let base = ProcessSpec {
            kind: ProcessKind::White,
            filter: None,
            ar_operator: None,
            x_noise: noise(2, 1),
            y_noise: None,
            len: 30,
            burn_in: 10,
        };
        let white = simulate(&base).unwrap();
        assert_eq!(white.x.len(), 30);
        assert!(white.y.is_none());

        let far = ProcessSpec {
            kind: ProcessKind::Far1,
            ar_operator: Some(HsOperator::from_diagonal(&[0.5, 0.3]).unwrap()),
            ..base.clone()
        };
        let run = simulate(&far).unwrap();
        assert_eq!(run.x.len(), 30);
        assert!(matches!(
            simulate(&ProcessSpec {
                kind: ProcessKind::Far1,
                ..base.clone()
            }),
            Err(FtsError::InvalidArgument(_))
        ));

        let filt = ProcessSpec {
            kind: ProcessKind::Filtered,
            filter: Some(
                LinearFilter::causal(vec![
                    HsOperator::identity(2),
                    HsOperator::from_diagonal(&[0.5, 0.5]).unwrap(),
                ])
                .unwrap(),
            ),
            y_noise: Some(noise(2, 2).scaled(0.01).unwrap()),
            ..base.clone()
        };
        let run = simulate(&filt).unwrap();
        assert_eq!(run.start, 1);
        let y = run.y.unwrap();
        assert_eq!(run.x.len(), 29);
        assert_eq!(y.len(), 29);
        // identical spec, identical bits
        let again = simulate(&filt).unwrap();
        assert_eq!(run.x.data(), again.x.data());
        assert_eq!(y.data(), again.y.unwrap().data());
        assert!(matches!(
            simulate(&ProcessSpec {
                kind: ProcessKind::Filtered,
                ..base.clone()
            }),
            Err(FtsError::InvalidArgument(_))
        ));
    }

    #[test]
    fn filtered_cross_covariance_matches_the_truth_filter() {
        // for white X and Y = A_0 X + A_1 X_{-1}, C^{YX}_h ~ A_h C^X_0
        let d = 3;
        let x_noise = noise(d, 404);
        let a0 = HsOperator::from_diagonal(&[0.8, 0.8, 0.8]).unwrap();
        let a1 = HsOperator::from_row_slice(
            3,
            &[0.3, 0.15, 0.0, 0.15, 0.3, 0.15, 0.0, 0.15, 0.3],
        )
        .unwrap();
        let filter = LinearFilter::causal(vec![a0.clone(), a1.clone()]).unwrap();
        let x = gaussian_white_noise(&x_noise, 20_000).unwrap();
        let (xt, y, _) = simulate_filtered(&x, &filter, None).unwrap();
        let c0 = autocov(&xt, 0).unwrap();
        let tol = 8.0 / (xt.len() as f64).sqrt();
        for (h, truth) in [(0, &a0), (1, &a1)] {
            let got = crosscov(&y, &xt, h).unwrap();
            let want = truth.compose(&c0).unwrap();
            assert!(
                got.sub(&want).unwrap().hs_norm() < tol,
                "lag {h} off by {}",
                got.sub(&want).unwrap().hs_norm()
            );
        }
    }

    #[test]
    fn process_spec_round_trips_through_json() {
        let spec = ProcessSpec {
            kind: ProcessKind::Filtered,
            filter: Some(
                LinearFilter::causal(vec![HsOperator::from_diagonal(&[0.5, 0.25]).unwrap()])
                    .unwrap(),
            ),
            ar_operator: None,
            x_noise: noise(2, 42),
            y_noise: Some(noise(2, 43).scaled(0.05).unwrap()),
            len: 500,
            burn_in: DEFAULT_BURN_IN,
        };
        let json = serde_json::to_string_pretty(&spec).unwrap();
        let back: ProcessSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.kind, ProcessKind::Filtered);
        assert_eq!(back.x_noise, spec.x_noise);
        assert_eq!(back.len, 500);

        // burn_in falls back to the default when the field is absent
        let minimal = r#"{
            "kind": "white",
            "x_noise": { "eigenvalues": [1.0, 0.25], "seed": 7 },
            "len": 10
        }"#;
        let parsed: ProcessSpec = serde_json::from_str(minimal).unwrap();
        assert_eq!(parsed.burn_in, DEFAULT_BURN_IN);
        assert!(simulate(&parsed).is_ok());

        // nonpositive eigenvalues must fail on read
        let bad = minimal.replace("0.25", "-0.25");
        assert!(serde_json::from_str::<ProcessSpec>(&bad).is_err());
    }
}
