//! The five subcommands: simulate, project, estimate, eval, sweep.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use fts_core::basis::{Curve, FourierBasis, Grid};
use fts_core::io as fio;
use fts_core::moments::FtsSample;
use fts_core::operators::{HsOperator, DEFAULT_EIGEN_FLOOR};
use fts_core::regression::{fit_lagged_timedomain, fit_linear, LaggedFit, LinearFilter};
use fts_core::simulate::simulate;
use fts_core::spectral::{
    auto_spectral, cross_spectral, filter_coefficients, frequency_response, response_of_filter,
    FrequencyGrid,
};

use crate::config::{Mode, RunConfig};
use crate::report::{
    fmt, read_json, summary_csv, write_atomic, write_json, ErrorReport, FitReport, LagError,
    Metadata,
};

/// Series lengths of the convergence sweep.
pub const SWEEP_LENGTHS: [usize; 3] = [250, 1000, 4000];
/// Replicates per length.
pub const SWEEP_REPLICATES: usize = 20;

fn write_csv_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> fts_core::Result<()>,
{
    let mut buf = Vec::new();
    fill(&mut buf)?;
    write_atomic(path, &buf)
}

fn read_sample(path: &Path, d: usize) -> Result<FtsSample> {
    let file = File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    let (_, sample) = fio::read_sample_curves_csv(BufReader::new(file), d)
        .with_context(|| format!("cannot parse {}", path.display()))?;
    Ok(sample)
}

/// Draws the configured process and writes curve CSVs plus metadata.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let sim = simulate(&cfg.process)?;
    let basis = FourierBasis::new(cfg.d, Grid::uniform(cfg.n)?)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    write_csv_atomic(&out.join("X.csv"), |w| {
        fio::write_sample_curves_csv(w, &basis, &sim.x)
    })?;
    if let Some(y) = &sim.y {
        write_csv_atomic(&out.join("Y.csv"), |w| {
            fio::write_sample_curves_csv(w, &basis, y)
        })?;
    }
    if let Some(filter) = &cfg.process.filter {
        write_json(&out.join("truth_filter.json"), filter)?;
    }
    write_json(&out.join("resolved_config.json"), cfg)?;
    let metadata = Metadata {
        seed: cfg.seed,
        config_sha256: cfg.sha256_hex()?,
        d: cfg.d,
        n: cfg.n,
        series_len: cfg.series_len,
        rows_x: sim.x.len(),
        rows_y: sim.y.as_ref().map(FtsSample::len),
        start: sim.start,
        kind: cfg.process.kind,
    };
    write_json(&out.join("metadata.json"), &metadata)?;
    println!(
        "simulate: {} rows of X{} in {}",
        metadata.rows_x,
        match metadata.rows_y {
            Some(r) => format!(", {r} rows of Y"),
            None => String::new(),
        },
        out.display()
    );
    Ok(())
}

/// Projects a curve CSV onto d basis coefficients.
pub fn cmd_project(cfg: &RunConfig, input: &Path, output: &Path) -> Result<()> {
    let sample = read_sample(input, cfg.d)?;
    if let Some(dir) = output.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        }
    }
    write_csv_atomic(output, |w| fio::write_coeffs_csv(w, &sample))?;
    println!(
        "project: {} rows x {} coefficients into {}",
        sample.len(),
        sample.d(),
        output.display()
    );
    Ok(())
}

/// Wraps a spectral filter with sample means and a training residual
/// variance so it predicts exactly like a time-domain fit.
fn lagged_fit_from_filter(
    filter: LinearFilter,
    k_used: usize,
    x: &FtsSample,
    y: &FtsSample,
) -> Result<LaggedFit> {
    let mut fit = LaggedFit {
        filter,
        k_used,
        residual_variance: 0.0,
        mean_x: Curve::new(x.data().column_mean())?,
        mean_y: Curve::new(y.data().column_mean())?,
    };
    fit.residual_variance = fts_core::regression::prediction_mse(&fit, x, y, 0, x.len())?;
    Ok(fit)
}

/// Runs the configured estimator on aligned samples.
pub fn fit_report(cfg: &RunConfig, x: &FtsSample, y: &FtsSample) -> Result<FitReport> {
    let trunc = cfg.truncation();
    match cfg.mode {
        Mode::Linear => Ok(FitReport::Linear(fit_linear(x, y, trunc)?)),
        Mode::LaggedTime => Ok(FitReport::LaggedTime(fit_lagged_timedomain(
            x, y, cfg.m, trunc,
        )?)),
        Mode::LaggedSpectral => {
            let support = cfg.spectral_support();
            let q = cfg.bandwidth_for(x.len());
            let t = cfg.frequency_count(q, support);
            let grid = FrequencyGrid::fourier(t)?;
            let fx = auto_spectral(x, q, &grid, cfg.window)?;
            let fyx = cross_spectral(y, x, q, &grid, cfg.window)?;
            let response = frequency_response(&fyx, &fx, trunc, DEFAULT_EIGEN_FLOOR)?;
            let filter = filter_coefficients(&response, support)?;
            let k_used = response.k_used().iter().copied().max().unwrap_or(0);
            Ok(FitReport::LaggedSpectral {
                fit: lagged_fit_from_filter(filter, k_used, x, y)?,
                degenerate_frequencies: response.degenerate().len(),
            })
        }
    }
}

/// Fits the configured mode to X.csv and Y.csv under `data`.
pub fn cmd_estimate(cfg: &RunConfig, data: &Path, out: &Path) -> Result<()> {
    let x = read_sample(&data.join("X.csv"), cfg.d)?;
    let y = read_sample(&data.join("Y.csv"), cfg.d)?;
    let report = fit_report(cfg, &x, &y)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    write_json(&out.join("fit.json"), &report)?;
    write_atomic(&out.join("summary.csv"), summary_csv(&report)?.as_bytes())?;
    println!(
        "estimate[{}]: K={} residual_variance={}",
        report.mode_name(),
        report.k_used(),
        fmt(report.residual_variance())
    );
    Ok(())
}

/// Scores a fit against the ground-truth filter and held-out data.
pub fn cmd_eval(
    cfg: &RunConfig,
    data: &Path,
    fit_path: &Path,
    truth_path: &Path,
    out: &Path,
) -> Result<()> {
    let report: FitReport = read_json(fit_path)?;
    let truth: LinearFilter = read_json(truth_path)?;
    let x = read_sample(&data.join("X.csv"), cfg.d)?;
    let y = read_sample(&data.join("Y.csv"), cfg.d)?;
    let estimate = report.filter()?;
    if estimate.d() != truth.d() {
        bail!(
            "estimate dimension {} does not match truth dimension {}",
            estimate.d(),
            truth.d()
        );
    }

    let (elo, ehi) = estimate.support();
    let (tlo, thi) = truth.support();
    let (lo, hi) = (elo.min(tlo), ehi.max(thi));
    let zero = HsOperator::zero(estimate.d());
    let mut per_lag = Vec::new();
    for k in lo..=hi {
        let a = estimate.op(k).unwrap_or(&zero);
        let b = truth.op(k).unwrap_or(&zero);
        per_lag.push(LagError {
            lag: k,
            hs_error: a.sub(b)?.hs_norm(),
        });
    }
    let total_hs_error = estimate.hs_distance(&truth)?;

    let n = x.len();
    let holdout_start = (0.8 * n as f64).floor() as usize;
    let prediction_mse = report.prediction_mse(&x, &y, holdout_start, n)?;
    let error = ErrorReport {
        per_lag,
        total_hs_error,
        prediction_mse,
        holdout_start,
        holdout_len: n - holdout_start,
        k_used: report.k_used(),
        residual_variance: report.residual_variance(),
    };

    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    write_json(&out.join("error_report.json"), &error)?;

    let mut lag_csv = String::from("lag,hs_error\n");
    for le in &error.per_lag {
        lag_csv.push_str(&format!("{},{}\n", le.lag, fmt(le.hs_error)));
    }
    write_atomic(&out.join("error_by_lag.csv"), lag_csv.as_bytes())?;

    let q = cfg.bandwidth_for(n);
    let t = cfg.frequency_count(q, (lo, hi));
    let grid = FrequencyGrid::fourier(t)?;
    let r_est = response_of_filter(&estimate, &grid);
    let r_truth = response_of_filter(&truth, &grid);
    let mut resp_csv = String::from("j,theta,estimate_norm,truth_norm\n");
    for j in 0..t {
        resp_csv.push_str(&format!(
            "{j},{},{},{}\n",
            fmt(grid.theta(j)),
            fmt(r_est.value(j).hs_norm()),
            fmt(r_truth.value(j).hs_norm())
        ));
    }
    write_atomic(&out.join("response_norm.csv"), resp_csv.as_bytes())?;

    println!(
        "eval: total_hs_error={} prediction_mse={}",
        fmt(total_hs_error),
        fmt(prediction_mse)
    );
    Ok(())
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Convergence sweep: simulates and refits across series lengths, writing
/// per-replicate errors and per-length medians.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<()> {
    let truth = cfg
        .process
        .filter
        .clone()
        .ok_or_else(|| anyhow!("sweep needs a filtered process with a ground-truth filter"))?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut rows = String::from("N,replicate,seed,hs_error\n");
    let mut medians = String::from("N,median_hs_error\n");
    for &len in &SWEEP_LENGTHS {
        let mut errors = Vec::with_capacity(SWEEP_REPLICATES);
        for rep in 0..SWEEP_REPLICATES {
            // disjoint seed pairs: x gets S+2i, y gets S+2i+1
            let seed = cfg.seed.wrapping_add(2 * rep as u64);
            let mut process = cfg.process.clone();
            process.len = len;
            process.x_noise = process.x_noise.with_seed(seed);
            process.y_noise = process
                .y_noise
                .as_ref()
                .map(|ns| ns.with_seed(seed.wrapping_add(1)));
            let sim = simulate(&process)?;
            let y = sim
                .y
                .as_ref()
                .ok_or_else(|| anyhow!("sweep process produced no response series"))?;
            let mut run_cfg = cfg.clone();
            run_cfg.series_len = len;
            run_cfg.process = process;
            let report = fit_report(&run_cfg, &sim.x, y)?;
            let err = report.filter()?.hs_distance(&truth)?;
            rows.push_str(&format!("{len},{rep},{seed},{}\n", fmt(err)));
            errors.push(err);
        }
        let med = median(&mut errors);
        medians.push_str(&format!("{len},{}\n", fmt(med)));
        println!("sweep: N={len} median_hs_error={}", fmt(med));
    }
    write_atomic(&out.join("sweep.csv"), rows.as_bytes())?;
    write_atomic(&out.join("sweep_summary.csv"), medians.as_bytes())?;
    Ok(())
}
