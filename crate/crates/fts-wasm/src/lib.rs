//! Browser demo bindings: JSON-in/JSON-out wrappers over the core library
//! so a single static page can drive simulation, spectral analysis and
//! filter recovery without a server.
//!
//! Every function takes plain numbers, clamps them to safe demo ranges and
//! returns a JSON string; failures come back as `{"error": "..."}` so the
//! page never has to unwind a wasm exception.

use fts_core::basis::{reconstruct, FourierBasis, Grid};
use fts_core::operators::HsOperator;
use fts_core::regression::{LinearFilter, Truncation};
use fts_core::simulate::{simulate, simulate_far1, NoiseSpec, ProcessKind, ProcessSpec};
use fts_core::spectral::{
    auto_spectral, default_bandwidth, default_frequencies, fit_lagged_spectral_with,
    FrequencyGrid, Window,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Basis dimension of the demo processes.
const DEMO_D: usize = 7;
/// Plot resolution.
const DEMO_GRID: usize = 101;

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).unwrap_or_else(|e| format!("{{\"error\":{:?}}}", e.to_string()))
}

fn err_json(msg: &str) -> String {
    to_json(&serde_json::json!({ "error": msg }))
}

/// Banded autoregression operator with spectral radius well below 1.
fn demo_ar() -> HsOperator {
    let d = DEMO_D;
    let mut entries = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            if i == j {
                entries[i * d + j] = 0.45;
            } else if i.abs_diff(j) == 1 {
                entries[i * d + j] = 0.15;
            }
        }
    }
    HsOperator::from_row_slice(d, &entries).expect("finite square entries")
}

/// Ground truth of the recovery demo: half identity at lag 0, a banded
/// operator at lag 1.
fn demo_truth() -> LinearFilter {
    let d = DEMO_D;
    let a0 = HsOperator::identity(d).scale(0.5);
    let mut entries = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            entries[i * d + j] = 0.3 * 0.5_f64.powi(i.abs_diff(j) as i32);
        }
    }
    let a1 = HsOperator::from_row_slice(d, &entries).expect("finite square entries");
    LinearFilter::new(0, vec![a0, a1]).expect("nonempty filter")
}

#[derive(Serialize)]
struct CurvesOut {
    grid: Vec<f64>,
    curves: Vec<Vec<f64>>,
}

/// Draws `count` consecutive curves of a first-order functional
/// autoregression and evaluates them on a plotting grid.
#[wasm_bindgen]
pub fn demo_simulate(seed: u32, count: u32) -> String {
    let count = count.clamp(1, 64) as usize;
    let run = || -> fts_core::Result<CurvesOut> {
        let noise = NoiseSpec::polynomial(DEMO_D, seed as u64)?;
        let sample = simulate_far1(&demo_ar(), &noise, count, 100)?;
        let basis = FourierBasis::new(DEMO_D, Grid::uniform(DEMO_GRID)?)?;
        let mut curves = Vec::with_capacity(count);
        for c in sample.curves() {
            curves.push(reconstruct(&c, &basis)?.values);
        }
        Ok(CurvesOut {
            grid: basis.grid().points().to_vec(),
            curves,
        })
    };
    match run() {
        Ok(out) => to_json(&out),
        Err(e) => err_json(&e.to_string()),
    }
}

#[derive(Serialize)]
struct SpectrumOut {
    theta: Vec<f64>,
    hs_norm: Vec<f64>,
    bandwidth: usize,
}

/// Smoothed auto-spectral density of the demo autoregression: HS norm per
/// frequency. Positive temporal dependence concentrates mass near zero.
#[wasm_bindgen]
pub fn demo_spectrum(seed: u32, n: u32, bandwidth: u32, rectangular: bool) -> String {
    let n = n.clamp(64, 8192) as usize;
    let q = (bandwidth as usize).clamp(1, n / 4);
    let window = if rectangular {
        Window::Rectangular
    } else {
        Window::Bartlett
    };
    let run = || -> fts_core::Result<SpectrumOut> {
        let noise = NoiseSpec::polynomial(DEMO_D, seed as u64)?;
        let x = simulate_far1(&demo_ar(), &noise, n, 200)?;
        let grid = FrequencyGrid::fourier(2 * q + 1)?;
        let fx = auto_spectral(&x, q, &grid, window)?;
        Ok(SpectrumOut {
            theta: grid.thetas(),
            hs_norm: fx.values().iter().map(|v| v.hs_norm()).collect(),
            bandwidth: q,
        })
    };
    match run() {
        Ok(out) => to_json(&out),
        Err(e) => err_json(&e.to_string()),
    }
}

#[derive(Serialize)]
struct RecoverOut {
    lags: Vec<i64>,
    truth_norm: Vec<f64>,
    estimate_norm: Vec<f64>,
    per_lag_error: Vec<f64>,
    total_error: f64,
    n_used: usize,
}

/// Simulates the filtered demo process and recovers its lag operators with
/// the frequency-domain estimator; reports truth vs estimate per lag.
#[wasm_bindgen]
pub fn demo_recover(seed: u32, n: u32) -> String {
    let n = n.clamp(256, 8192) as usize;
    let truth = demo_truth();
    let run = || -> fts_core::Result<RecoverOut> {
        let spec = ProcessSpec {
            kind: ProcessKind::Filtered,
            filter: Some(truth.clone()),
            ar_operator: None,
            x_noise: NoiseSpec::polynomial(DEMO_D, seed as u64)?,
            y_noise: Some(NoiseSpec::polynomial(DEMO_D, seed as u64 + 1)?.scaled(0.05)?),
            len: n,
            burn_in: 0,
        };
        let sim = simulate(&spec)?;
        let y = sim.y.as_ref().expect("filtered process has a response");
        let q = default_bandwidth(sim.x.len());
        let t = default_frequencies(q, (0, 1));
        let fit = fit_lagged_spectral_with(
            &sim.x,
            y,
            q,
            t,
            (0, 1),
            Truncation::Fixed(DEMO_D),
            Window::Bartlett,
            fts_core::operators::DEFAULT_EIGEN_FLOOR,
        )?;
        let lags = vec![0i64, 1];
        let mut truth_norm = Vec::new();
        let mut estimate_norm = Vec::new();
        let mut per_lag_error = Vec::new();
        for &k in &lags {
            let a = truth.op(k).expect("truth covers 0..=1");
            let b = fit.op(k).expect("fit covers 0..=1");
            truth_norm.push(a.hs_norm());
            estimate_norm.push(b.hs_norm());
            per_lag_error.push(a.sub(b)?.hs_norm());
        }
        Ok(RecoverOut {
            lags,
            truth_norm,
            estimate_norm,
            per_lag_error,
            total_error: fit.hs_distance(&truth)?,
            n_used: sim.x.len(),
        })
    };
    match run() {
        Ok(out) => to_json(&out),
        Err(e) => err_json(&e.to_string()),
    }
}
