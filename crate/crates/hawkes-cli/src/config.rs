//! TOML run configuration and command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataCfg,
    pub model: ModelCfg,
    pub grid: GridCfg,
    pub fit: FitCfg,
    pub simulate: SimulateCfg,
    pub eval: EvalCfg,
    pub diagnose: DiagnoseCfg,
    pub output: OutputCfg,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataCfg {
    pub events: Option<PathBuf>,
    pub covariate: Option<PathBuf>,
    pub polygon: Option<PathBuf>,
    pub specificity_max: Option<u8>,
    pub jitter_sd: Option<f64>,
    pub jitter_seed: u64,
    pub skip_bad_rows: bool,
    /// Horizon override in days; inferred from the data when absent.
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelCfg {
    pub preset: Option<String>,
    /// Natural-scale parameter values in reporting order; used by
    /// `simulate` and `eval`, which need a fully specified model.
    pub params: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridCfg {
    pub n_s: usize,
    pub n_t: usize,
}

impl Default for GridCfg {
    fn default() -> Self {
        Self { n_s: 400, n_t: 24 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitCfg {
    pub starts: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_rounds: usize,
    pub horizon: Option<f64>,
    pub ses: bool,
}

impl Default for FitCfg {
    fn default() -> Self {
        Self {
            starts: 3,
            seed: 0,
            tol: 1e-6,
            max_rounds: 8,
            horizon: None,
            ses: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateCfg {
    /// Window as [lon_min, lon_max, lat_min, lat_max] degrees.
    pub window_deg: Option<[f64; 4]>,
    pub t_end: f64,
    pub seed: u64,
    /// "clip" or "none".
    pub edge: String,
    /// "branching" or "thinning".
    pub sampler: String,
}

impl Default for SimulateCfg {
    fn default() -> Self {
        Self {
            window_deg: None,
            t_end: 365.0,
            seed: 1,
            edge: "clip".into(),
            sampler: "branching".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalCfg {
    pub t_split: Option<f64>,
    pub condition_on_history: bool,
}

impl Default for EvalCfg {
    fn default() -> Self {
        Self {
            t_split: None,
            condition_on_history: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseCfg {
    pub mark_from: usize,
    pub mark_to: usize,
    pub max_dt: f64,
    pub max_ds: f64,
    pub bins: [usize; 2],
}

impl Default for DiagnoseCfg {
    fn default() -> Self {
        Self {
            mark_from: 0,
            mark_to: 0,
            max_dt: 100.0,
            max_ds: 200.0,
            bins: [10, 10],
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputCfg {
    pub dir: Option<PathBuf>,
}

/// Parse a TOML config file; parse errors report the offending position.
pub fn load_config(path: &Path) -> CliResult<(RunConfig, Vec<u8>)> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|e| CliError::config(format!("config is not UTF-8: {e}")))?;
    let cfg: RunConfig = toml::from_str(&text)
        .map_err(|e| CliError::config(format!("config error in {}: {e}", path.display())))?;
    Ok((cfg, bytes))
}
