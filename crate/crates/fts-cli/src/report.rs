//! Output artifacts: fit reports, error reports, metadata, atomic writers.
//!
//! Every file goes through a temp-file-plus-rename so a crashed run never
//! leaves a half-written artifact. All floating-point table output uses 17
//! significant digits, which reproduces each f64 bit for bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use fts_core::moments::FtsSample;
use fts_core::regression::{prediction_mse, LaggedFit, LinearFilter, RegressionFit};
use fts_core::simulate::ProcessKind;
use serde::{Deserialize, Serialize};

/// 17 significant digits.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes bytes through a temp file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temp file in {}", dir.display()))?;
    tmp.write_all(bytes)
        .with_context(|| format!("cannot write {}", path.display()))?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    // temp files are created private (0600); artifacts should be readable
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(path, fs::Permissions::from_mode(0o644))
            .with_context(|| format!("cannot set permissions on {}", path.display()))?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))
}

/// What a `simulate` run produced, minus anything machine-specific, so two
/// runs with one seed emit identical bytes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metadata {
    pub seed: u64,
    pub config_sha256: String,
    pub d: usize,
    pub n: usize,
    /// Requested series length.
    #[serde(rename = "N")]
    pub series_len: usize,
    /// Rows written to X.csv after filter-support trimming.
    pub rows_x: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows_y: Option<usize>,
    /// Offset of the first written index into the untrimmed series.
    pub start: usize,
    pub kind: ProcessKind,
}

/// Everything `estimate` learned, tagged by the mode that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum FitReport {
    Linear(RegressionFit),
    LaggedTime(LaggedFit),
    LaggedSpectral {
        #[serde(flatten)]
        fit: LaggedFit,
        /// Frequencies where the input spectrum was degenerate and the
        /// response was zeroed instead of inverted.
        degenerate_frequencies: usize,
    },
}

impl FitReport {
    pub fn mode_name(&self) -> &'static str {
        match self {
            FitReport::Linear(_) => "linear",
            FitReport::LaggedTime(_) => "lagged-time",
            FitReport::LaggedSpectral { .. } => "lagged-spectral",
        }
    }

    /// The fitted filter; a concurrent fit is viewed as support {0}.
    pub fn filter(&self) -> Result<LinearFilter> {
        Ok(match self {
            FitReport::Linear(fit) => LinearFilter::new(0, vec![fit.a_hat.clone()])?,
            FitReport::LaggedTime(fit) => fit.filter.clone(),
            FitReport::LaggedSpectral { fit, .. } => fit.filter.clone(),
        })
    }

    pub fn k_used(&self) -> usize {
        match self {
            FitReport::Linear(fit) => fit.k_used,
            FitReport::LaggedTime(fit) | FitReport::LaggedSpectral { fit, .. } => fit.k_used,
        }
    }

    pub fn residual_variance(&self) -> f64 {
        match self {
            FitReport::Linear(fit) => fit.residual_variance,
            FitReport::LaggedTime(fit) | FitReport::LaggedSpectral { fit, .. } => {
                fit.residual_variance
            }
        }
    }

    /// Mean squared prediction error over time indices [from, to), clipped
    /// to the range the fit can predict.
    pub fn prediction_mse(
        &self,
        x: &FtsSample,
        y: &FtsSample,
        from: usize,
        to: usize,
    ) -> Result<f64> {
        match self {
            FitReport::Linear(fit) => {
                anyhow::ensure!(from < to && to <= y.len(), "empty prediction window");
                let pred = fit.predict(x)?;
                let mut acc = 0.0;
                for t in from..to {
                    acc += (y.data().column(t) - pred.data().column(t)).norm_squared();
                }
                Ok(acc / (to - from) as f64)
            }
            FitReport::LaggedTime(fit) | FitReport::LaggedSpectral { fit, .. } => {
                Ok(prediction_mse(fit, x, y, from, to)?)
            }
        }
    }
}

/// Key/value summary table for a fit.
pub fn summary_csv(report: &FitReport) -> Result<String> {
    let mut out = String::from("key,value\n");
    out.push_str(&format!("mode,{}\n", report.mode_name()));
    out.push_str(&format!("k_used,{}\n", report.k_used()));
    out.push_str(&format!(
        "residual_variance,{}\n",
        fmt(report.residual_variance())
    ));
    for (k, op) in report.filter()?.iter() {
        out.push_str(&format!("hs_norm_lag_{k},{}\n", fmt(op.hs_norm())));
    }
    if let FitReport::LaggedSpectral {
        degenerate_frequencies,
        ..
    } = report
    {
        out.push_str(&format!(
            "degenerate_frequencies,{degenerate_frequencies}\n"
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LagError {
    pub lag: i64,
    pub hs_error: f64,
}

/// How a fit compares against the ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReport {
    /// HS distance per lag over the union of the two supports.
    pub per_lag: Vec<LagError>,
    /// Root sum of squared per-lag errors.
    pub total_hs_error: f64,
    /// Mean squared prediction error on the held-out suffix.
    pub prediction_mse: f64,
    /// First held-out index (last 20% of the series).
    pub holdout_start: usize,
    pub holdout_len: usize,
    pub k_used: usize,
    pub residual_variance: f64,
}
