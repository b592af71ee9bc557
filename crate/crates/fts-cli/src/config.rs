//! Run configuration: a JSON file merged with command-line overrides.
//!
//! The resolved [`RunConfig`] is the single source of truth for a run. Every
//! command is deterministic given the resolved config; its SHA-256 hash is
//! recorded in output metadata so runs can be matched to their inputs.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use fts_core::operators::HsOperator;
use fts_core::regression::{LinearFilter, Truncation, DEFAULT_TAU};
use fts_core::simulate::{NoiseSpec, ProcessKind, ProcessSpec, DEFAULT_BURN_IN};
use fts_core::spectral::{default_bandwidth, default_frequencies, Window};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Which estimator `estimate`, `eval` and `sweep` run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Concurrent regression Y_t on X_t.
    Linear,
    /// Stacked causal filter fit over lags 0..=m.
    LaggedTime,
    /// Frequency-domain filter fit on the configured support.
    LaggedSpectral,
}

/// Resolved run parameters. JSON field names match the long flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Basis dimension d; must satisfy 2d < n.
    pub d: usize,
    /// Grid points per curve.
    pub n: usize,
    /// Series length.
    #[serde(rename = "N")]
    pub series_len: usize,
    /// Headline seed. `--seed S` rewrites the process noise seeds to S (input)
    /// and S+1 (output); a hand-written config may pick independent seeds.
    pub seed: u64,
    pub mode: Mode,
    /// Maximum lag of the causal fit; also the default spectral support 0:m.
    pub m: usize,
    /// Fixed truncation level; absent means the tau rule decides per fit.
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Eigenvalue mass fraction for automatic truncation.
    pub tau: f64,
    /// Lag-window bandwidth q; absent means ceil(N^(1/3)).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<usize>,
    /// Frequency count T; absent means 2(q + reach) + 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<usize>,
    pub window: Window,
    /// Spectral support "k_min:k_max"; absent means "0:m".
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "support_serde"
    )]
    pub support: Option<(i64, i64)>,
    /// The process `simulate` and `sweep` draw from.
    pub process: ProcessSpec,
}

mod support_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &Option<(i64, i64)>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match v {
            Some((lo, hi)) => s.serialize_str(&format!("{lo}:{hi}")),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<(i64, i64)>, D::Error> {
        let raw = Option::<String>::deserialize(d)?;
        raw.map(|s| super::parse_support(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Parses "k_min:k_max" with either end possibly negative.
pub fn parse_support(s: &str) -> Result<(i64, i64)> {
    let (lo, hi) = s
        .split_once(':')
        .with_context(|| format!("support must be k_min:k_max, got {s:?}"))?;
    let lo: i64 = lo
        .trim()
        .parse()
        .with_context(|| format!("bad k_min in support {s:?}"))?;
    let hi: i64 = hi
        .trim()
        .parse()
        .with_context(|| format!("bad k_max in support {s:?}"))?;
    if lo > hi {
        bail!("support k_min must not exceed k_max, got {s:?}");
    }
    Ok((lo, hi))
}

/// Accepts "bartlett", "rect" or "rectangular".
pub fn parse_window(s: &str) -> Result<Window> {
    match s {
        "bartlett" => Ok(Window::Bartlett),
        "rect" | "rectangular" => Ok(Window::Rectangular),
        other => bail!("window must be bartlett or rect, got {other:?}"),
    }
}

/// Ground truth of the default experiment: a half-strength identity at lag 0
/// plus a banded operator at lag 1.
pub fn default_truth_filter(d: usize) -> Result<LinearFilter> {
    let a0 = HsOperator::identity(d).scale(0.5);
    let mut a1 = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            a1.push(0.3 * 0.5_f64.powi((i as i32 - j as i32).abs()));
        }
    }
    Ok(LinearFilter::new(
        0,
        vec![a0, HsOperator::from_row_slice(d, &a1)?],
    )?)
}

/// The default filtered process: white input with polynomially decaying
/// coefficient variances and 5% additive output noise.
pub fn default_process(d: usize, len: usize, seed: u64) -> Result<ProcessSpec> {
    Ok(ProcessSpec {
        kind: ProcessKind::Filtered,
        filter: Some(default_truth_filter(d)?),
        ar_operator: None,
        x_noise: NoiseSpec::polynomial(d, seed)?,
        y_noise: Some(NoiseSpec::polynomial(d, seed.wrapping_add(1))?.scaled(0.05)?),
        len,
        burn_in: DEFAULT_BURN_IN,
    })
}

impl RunConfig {
    /// The built-in experiment: d=15 coefficients on a 1001-point grid,
    /// N=500 draws from the default filtered process, spectral estimation
    /// over lags 0..=1.
    ///
    /// K is pinned to d: with the steep default coefficient variances the
    /// tau rule would keep only a few modes and the fit error would sit on
    /// a truncation floor instead of shrinking with N.
    pub fn default_config(d: usize) -> Result<Self> {
        let seed = 42;
        let len = 500;
        Ok(Self {
            d,
            n: 1001,
            series_len: len,
            seed,
            mode: Mode::LaggedSpectral,
            m: 1,
            k: Some(d),
            tau: DEFAULT_TAU,
            bandwidth: None,
            frequencies: None,
            window: Window::Bartlett,
            support: None,
            process: default_process(d, len, seed)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            bail!("d must be at least 1");
        }
        if 2 * self.d >= self.n {
            bail!("basis needs 2d < n, got d={} n={}", self.d, self.n);
        }
        if self.process.x_noise.d() != self.d {
            bail!(
                "config process has dimension {} but d={} was requested; \
                 drop --d or regenerate the config",
                self.process.x_noise.d(),
                self.d
            );
        }
        if self.series_len != self.process.len {
            bail!(
                "N={} disagrees with the process length {}",
                self.series_len,
                self.process.len
            );
        }
        Ok(())
    }

    pub fn truncation(&self) -> Truncation {
        match self.k {
            Some(k) => Truncation::Fixed(k),
            None => Truncation::Auto { tau: self.tau },
        }
    }

    /// Bandwidth for a series of length `n_obs`.
    pub fn bandwidth_for(&self, n_obs: usize) -> usize {
        self.bandwidth.unwrap_or_else(|| default_bandwidth(n_obs))
    }

    pub fn spectral_support(&self) -> (i64, i64) {
        self.support.unwrap_or((0, self.m as i64))
    }

    pub fn frequency_count(&self, q: usize, support: (i64, i64)) -> usize {
        self.frequencies
            .unwrap_or_else(|| default_frequencies(q, support))
    }

    /// Hash of the resolved config JSON, recorded in metadata.
    pub fn sha256_hex(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        let digest = Sha256::digest(&bytes);
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// Flags shared by every subcommand; each one overrides the config field of
/// the same name.
#[derive(Debug, Clone, clap::Args)]
pub struct Overrides {
    /// JSON config file; the remaining flags override its fields.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Basis dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Grid points per curve.
    #[arg(long)]
    pub n: Option<usize>,
    /// Series length.
    #[arg(long = "N", value_name = "LEN")]
    pub series_len: Option<usize>,
    /// Maximum lag of the causal fit (and default spectral support 0:m).
    #[arg(long)]
    pub m: Option<usize>,
    /// Fixed eigenvalue truncation level.
    #[arg(long = "K", value_name = "K")]
    pub k: Option<usize>,
    /// Eigenvalue mass fraction in (0,1] for automatic truncation.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Lag-window bandwidth q.
    #[arg(long)]
    pub bandwidth: Option<usize>,
    /// Frequency grid size T.
    #[arg(long)]
    pub frequencies: Option<usize>,
    /// Lag window: bartlett or rect.
    #[arg(long, value_parser = parse_window)]
    pub window: Option<Window>,
    /// Filter support k_min:k_max; negative lags allowed.
    #[arg(long, value_parser = parse_support, allow_hyphen_values = true)]
    pub support: Option<(i64, i64)>,
    /// Seed: input noise uses S, output noise S+1.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Estimator to run.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
}

/// Loads the config (or builds the default) and applies flag overrides.
pub fn resolve(ov: &Overrides) -> Result<RunConfig> {
    let mut cfg = match &ov.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            serde_json::from_str::<RunConfig>(&text)
                .with_context(|| format!("invalid config {}", path.display()))?
        }
        None => RunConfig::default_config(ov.d.unwrap_or(15))?,
    };
    if let Some(d) = ov.d {
        cfg.d = d;
    }
    if let Some(n) = ov.n {
        cfg.n = n;
    }
    if let Some(len) = ov.series_len {
        cfg.series_len = len;
        cfg.process.len = len;
    }
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
        cfg.process.x_noise = cfg.process.x_noise.with_seed(seed);
        cfg.process.y_noise = cfg
            .process
            .y_noise
            .as_ref()
            .map(|ns| ns.with_seed(seed.wrapping_add(1)));
    }
    if let Some(m) = ov.m {
        cfg.m = m;
    }
    if let Some(k) = ov.k {
        cfg.k = Some(k);
    }
    if let Some(tau) = ov.tau {
        cfg.tau = tau;
    }
    if let Some(q) = ov.bandwidth {
        cfg.bandwidth = Some(q);
    }
    if let Some(t) = ov.frequencies {
        cfg.frequencies = Some(t);
    }
    if let Some(w) = ov.window {
        cfg.window = w;
    }
    if let Some(s) = ov.support {
        cfg.support = Some(s);
    }
    if let Some(mode) = ov.mode {
        cfg.mode = mode;
    }
    cfg.validate()?;
    Ok(cfg)
}
