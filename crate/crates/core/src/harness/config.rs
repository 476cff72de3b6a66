use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{LambdaStrategy, SupportMatch};

/// Random ensemble drawn fresh for every trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    BinaryLiteral,
    Stabilized,
    /// Random connected graph with maximum degree `k`, shifted by `m`.
    Laplacian,
}

impl EnsembleKind {
    pub fn name(&self) -> &'static str {
        match self {
            EnsembleKind::BinaryLiteral => "binary-literal",
            EnsembleKind::Stabilized => "stabilized",
            EnsembleKind::Laplacian => "laplacian",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [EnsembleKind::BinaryLiteral, EnsembleKind::Stabilized, EnsembleKind::Laplacian]
            .into_iter()
            .find(|e| e.name() == s)
    }
}

/// How trajectories are generated. Estimation always uses the sampled sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum SimulationMode {
    Discrete,
    /// Euler–Maruyama at inner step `delta`, subsampled at `eta`. Cells that differ only in
    /// `eta` share model, row and Brownian path.
    Continuous {
        delta: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub p: Vec<usize>,
    pub k: Vec<f64>,
    pub eta: Vec<f64>,
    /// Observation interval `T = n eta`.
    pub horizon: Vec<f64>,
    #[serde(default = "default_ensembles")]
    pub ensemble: Vec<EnsembleKind>,
    /// Laplacian shift; ignored by the binary ensembles.
    #[serde(default = "default_m")]
    pub m: Vec<f64>,
}

fn default_ensembles() -> Vec<EnsembleKind> {
    vec![EnsembleKind::Stabilized]
}

fn default_m() -> Vec<f64> {
    vec![1.0]
}

fn default_threshold() -> f64 {
    0.9
}

fn default_redraws() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub grid: Grid,
    pub trials: usize,
    pub lambda_strategy: LambdaStrategy,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    pub mode: SimulationMode,
    #[serde(default)]
    pub support_match: SupportMatch,
    /// Score every row instead of one uniformly drawn row.
    #[serde(default)]
    pub full_matrix: bool,
    /// Drop the driving noise (degenerate sanity configurations). Trials then succeed on
    /// sup-norm recovery within `NOISELESS_TOL`. A single orbit identifies the model only
    /// when it excites every mode, and its conditioning degrades like `eta^(2 - 2p)`.
    #[serde(default)]
    pub noiseless: bool,
    /// Model draws per trial before the cell is failed.
    #[serde(default = "default_redraws")]
    pub max_redraws: usize,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let g = &self.grid;
        if [g.p.len(), g.k.len(), g.eta.len(), g.horizon.len(), g.ensemble.len(), g.m.len()].contains(&0) {
            return bad("every grid axis needs at least one value".into());
        }
        if g.p.iter().any(|&p| p < 2) {
            return bad("grid p values must be at least 2".into());
        }
        let reals = g.k.iter().chain(&g.eta).chain(&g.horizon).chain(&g.m);
        if reals.into_iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("grid values must be positive".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.success_threshold > 0.0 && self.success_threshold < 1.0) {
            return bad(format!("success_threshold {} must lie in (0, 1)", self.success_threshold));
        }
        if self.max_redraws == 0 {
            return bad("max_redraws must be at least 1".into());
        }
        if let SimulationMode::Continuous { delta } = self.mode {
            if !(delta > 0.0) {
                return bad(format!("continuous delta {delta} must be positive"));
            }
        }
        Ok(())
    }
}
