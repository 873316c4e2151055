//! Run configuration: a flat TOML file with model, state, time grid,
//! thresholds and output sections. Every run materializes the fully
//! resolved configuration (defaults included) into its manifest, so a
//! manifest can be fed back to `simulate` to reproduce the run.

use anyhow::{anyhow, bail, Context, Result};
use qlab::model::{DisorderedModel, HoppingModel};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    pub experiment: String,
    pub model: ModelConfig,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default)]
    pub time_grid: TimeGridConfig,
    #[serde(default)]
    pub thresholds: ThresholdConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelConfig {
    pub l: usize,
    /// hopping amplitudes J_0..J_R
    pub j: Vec<f64>,
    #[serde(default)]
    pub disorder: Option<DisorderConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DisorderConfig {
    #[serde(default)]
    pub w: f64,
    #[serde(default)]
    pub seed: u64,
    /// explicit on-site potentials override sampling
    #[serde(default)]
    pub xi: Option<Vec<f64>>,
    /// "symmetric" = uniform on [-w, w]; "one_sided" = uniform on [0, w]
    #[serde(default = "default_disorder_kind")]
    pub kind: String,
}

fn default_disorder_kind() -> String {
    "symmetric".into()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StateConfig {
    /// "thermal" | "occupations" | "file"
    pub kind: String,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub mu: f64,
    /// occupation pattern, cycled over the chain (e.g. [0, 1] for the CDW)
    #[serde(default)]
    pub pattern: Option<Vec<u8>>,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

fn default_beta() -> f64 {
    1.0
}

impl Default for StateConfig {
    fn default() -> Self {
        StateConfig {
            kind: "thermal".into(),
            beta: 1.0,
            mu: 0.0,
            pattern: None,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TimeGridConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub count: usize,
    /// "log" | "linear"
    #[serde(default = "default_spacing")]
    pub spacing: String,
}

fn default_spacing() -> String {
    "log".into()
}

impl Default for TimeGridConfig {
    fn default() -> Self {
        TimeGridConfig {
            t_min: 1.0,
            t_max: 50.0,
            count: 30,
            spacing: "log".into(),
        }
    }
}

impl TimeGridConfig {
    pub fn times(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.t_min];
        }
        (0..self.count)
            .map(|i| {
                let s = i as f64 / (self.count - 1) as f64;
                if self.spacing == "linear" {
                    self.t_min + (self.t_max - self.t_min) * s
                } else {
                    self.t_min * (self.t_max / self.t_min).powf(s)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ThresholdConfig {
    /// resilience threshold on C_#; 0 = model default
    #[serde(default)]
    pub c_th: f64,
    /// dephasing degeneracy tolerance; 0 = 1e-9 × spectral range
    #[serde(default)]
    pub dephase_tol: f64,
    /// numerator of the superlattice current tolerance c/L
    #[serde(default = "default_current_tol")]
    pub current_tol: f64,
    /// lower edge of the power-law fit window (upper edge is t_R/3)
    #[serde(default = "default_fit_lo")]
    pub fit_window_lo: f64,
}

fn default_current_tol() -> f64 {
    5.0
}

fn default_fit_lo() -> f64 {
    5.0
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            c_th: 0.0,
            dephase_tol: 0.0,
            current_tol: 5.0,
            fit_window_lo: 5.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CertifyConfig {
    /// "propagator" | "band"
    #[serde(default = "default_certify_mode")]
    pub mode: String,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub drift: i64,
    /// number of (t, bound, empirical) samples in the emitted CSV
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_certify_mode() -> String {
    "propagator".into()
}

fn default_samples() -> usize {
    20
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            mode: "propagator".into(),
            n: 0,
            drift: 0,
            samples: 20,
        }
    }
}

/// Wrapper written into every run directory; feeding it back to `simulate`
/// reproduces the run bit for bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub qlab_version: String,
    pub created_unix: u64,
    pub wall_clock_seconds: f64,
    pub config: RunConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        // a manifest is accepted wherever a config is: unwrap its [config]
        if let Ok(manifest) = toml::from_str::<Manifest>(&text) {
            return Ok(manifest.config);
        }
        let cfg: RunConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match self.experiment.as_str() {
            "anderson_quench" | "cdw" | "superlattice" | "custom" => {}
            other => bail!("unknown experiment '{other}'"),
        }
        if self.model.j.is_empty() {
            bail!("model.j must list J_0..J_R");
        }
        if self.model.l <= 2 * (self.model.j.len() - 1) {
            bail!("need L > 2R, got L = {}, R = {}", self.model.l, self.model.j.len() - 1);
        }
        match self.state.kind.as_str() {
            "thermal" => {
                if self.state.beta <= 0.0 {
                    bail!("state.beta must be positive");
                }
            }
            "occupations" => {
                let p = self
                    .state
                    .pattern
                    .as_ref()
                    .ok_or_else(|| anyhow!("state.kind = occupations needs state.pattern"))?;
                if p.is_empty() || p.iter().any(|&v| v > 1) {
                    bail!("state.pattern must be a nonempty 0/1 sequence");
                }
            }
            "file" => {
                if self.state.path.is_none() {
                    bail!("state.kind = file needs state.path");
                }
            }
            other => bail!("unknown state kind '{other}'"),
        }
        if !(self.time_grid.t_min > 0.0
            && self.time_grid.t_max >= self.time_grid.t_min
            && self.time_grid.count >= 1)
        {
            bail!("time grid must be positive and increasing");
        }
        if self.time_grid.spacing != "log" && self.time_grid.spacing != "linear" {
            bail!("time_grid.spacing must be 'log' or 'linear'");
        }
        if let Some(d) = &self.model.disorder {
            if d.w < 0.0 {
                bail!("disorder.w must be nonnegative");
            }
            if let Some(xi) = &d.xi {
                if xi.len() != self.model.l {
                    bail!("disorder.xi length {} != L = {}", xi.len(), self.model.l);
                }
            }
        }
        Ok(())
    }

    pub fn clean_model(&self) -> Result<HoppingModel> {
        HoppingModel::new(self.model.l, self.model.j.clone()).map_err(|e| anyhow!("{e}"))
    }

    pub fn disordered_model(&self) -> Result<Option<DisorderedModel>> {
        let Some(d) = &self.model.disorder else {
            return Ok(None);
        };
        let m = if let Some(xi) = &d.xi {
            DisorderedModel::from_onsite(self.clean_model()?, xi.clone())
        } else if d.kind == "one_sided" {
            DisorderedModel::sample_one_sided(self.model.l, d.w, self.model.j.clone(), d.seed)
        } else {
            DisorderedModel::sample_anderson(self.model.l, d.w, self.model.j.clone(), d.seed)
        }
        .map_err(|e| anyhow!("{e}"))?;
        Ok(Some(m))
    }

    /// Output directory with the QLAB_OUT_ROOT env prefix applied.
    pub fn out_dir(&self) -> PathBuf {
        let dir = self
            .output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("runs/{}", self.experiment)));
        match std::env::var_os("QLAB_OUT_ROOT") {
            Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
            _ => dir,
        }
    }

    pub fn dephase_tol(&self, model: &HoppingModel) -> f64 {
        if self.thresholds.dephase_tol > 0.0 {
            self.thresholds.dephase_tol
        } else {
            model.default_degeneracy_tol()
        }
    }

    pub fn c_th(&self) -> Option<f64> {
        if self.thresholds.c_th > 0.0 {
            Some(self.thresholds.c_th)
        } else {
            None
        }
    }
}
