//! Canned desk-scale reproductions and their pass/fail summaries.
//!
//! `fig1-left`: success rate against `T = n eta` in discrete mode.
//! `fig1-right`: sample complexity at the success threshold against `log2 p`.
//! `fig2`: success rate against `eta` at fixed `T` in continuous mode.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{LambdaGrid, LambdaStrategy, SupportMatch};
use crate::stats::{linear_fit, Interval, LinearFit};

use super::config::{EnsembleKind, ExperimentConfig, Grid, SimulationMode};
use super::plots::{emit_plots, PlotKind};
use super::sweep::{run_sweep_with_threads, CellResult, ExperimentResult};

pub const TRIALS_PER_CELL: usize = 256;

/// Horizon of the `eta` robustness study. The stabilized shift puts the slowest
/// time scale near `1/7` at `p = 16`, so `eta = 0.1` is not small: each sample
/// shrinks the signal by `exp(-eta c)`. At `T = 1000` that loss still separates
/// `eta = 0.1` from `0.05`; by `T = 3000` only `eta = 0.2` stays visibly apart.
pub const FIG2_HORIZON: f64 = 3000.0;

/// Inner Euler step; divides every `eta` of the `fig2` grid.
pub const FIG2_DELTA: f64 = 0.003125;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Figure {
    Fig1Left,
    Fig1Right,
    Fig2,
}

impl Figure {
    pub const ALL: [Figure; 3] = [Figure::Fig1Left, Figure::Fig1Right, Figure::Fig2];

    pub fn name(&self) -> &'static str {
        match self {
            Figure::Fig1Left => "fig1-left",
            Figure::Fig1Right => "fig1-right",
            Figure::Fig2 => "fig2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    pub fn default_seed(&self) -> u64 {
        match self {
            Figure::Fig1Left => 1,
            Figure::Fig1Right => 2,
            Figure::Fig2 => 3,
        }
    }

    pub fn plot_kind(&self) -> PlotKind {
        match self {
            Figure::Fig1Left => PlotKind::RateVsT,
            Figure::Fig1Right => PlotKind::ComplexityVsP,
            Figure::Fig2 => PlotKind::RateVsEta,
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn oracle() -> LambdaStrategy {
    LambdaStrategy::OracleGrid(LambdaGrid::default())
}

/// The canned configuration for `figure`, writing into `output_dir`.
pub fn canned_config(figure: Figure, base_seed: u64, output_dir: &Path) -> ExperimentConfig {
    let horizons = vec![20.0, 40.0, 60.0, 80.0, 100.0, 120.0, 150.0, 200.0, 250.0, 300.0, 400.0, 500.0];
    let (grid, mode) = match figure {
        Figure::Fig1Left => (
            Grid {
                p: vec![8, 16, 32],
                k: vec![5.0],
                eta: vec![0.1],
                horizon: horizons,
                ensemble: vec![EnsembleKind::Stabilized],
                m: vec![1.0],
            },
            SimulationMode::Discrete,
        ),
        Figure::Fig1Right => (
            Grid {
                p: vec![8, 16, 32, 64],
                k: vec![5.0],
                eta: vec![0.1],
                horizon: horizons,
                ensemble: vec![EnsembleKind::Stabilized],
                m: vec![1.0],
            },
            SimulationMode::Discrete,
        ),
        Figure::Fig2 => (
            Grid {
                p: vec![16],
                k: vec![4.0],
                eta: vec![0.2, 0.1, 0.05],
                horizon: vec![FIG2_HORIZON],
                ensemble: vec![EnsembleKind::Stabilized],
                m: vec![1.0],
            },
            SimulationMode::Continuous { delta: FIG2_DELTA },
        ),
    };
    ExperimentConfig {
        name: figure.name().into(),
        grid,
        trials: TRIALS_PER_CELL,
        lambda_strategy: oracle(),
        success_threshold: 0.9,
        base_seed,
        output_dir: output_dir.to_path_buf(),
        mode,
        support_match: SupportMatch::Signed,
        full_matrix: false,
        noiseless: false,
        max_redraws: 100,
    }
}

/// One rate curve against `T` for a fixed `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurveCheck {
    pub p: usize,
    /// `(T, rate, wilson)` sorted by `T`.
    pub points: Vec<(f64, f64, Interval)>,
    /// No adjacent decrease whose Wilson intervals are disjoint.
    pub monotone: bool,
    pub max_rate: f64,
    pub reaches_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "figure")]
pub enum Summary {
    RateVsHorizon {
        threshold: f64,
        curves: Vec<RateCurveCheck>,
    },
    ComplexityVsP {
        threshold: f64,
        /// `(p, sample complexity)`; `None` when the threshold was never reached.
        points: Vec<(usize, Option<f64>)>,
        fit: Option<LinearFit>,
        min_r_squared: f64,
    },
    RateVsEta {
        horizon: f64,
        /// `(eta, rate, wilson)` sorted by decreasing `eta`.
        points: Vec<(f64, f64, Interval)>,
        /// Rate gap between the two smallest `eta`.
        small_eta_gap: f64,
        /// Sum of the Wilson half-widths of those two cells.
        half_width_sum: f64,
        /// Rate at the smallest `eta` minus rate at the largest.
        largest_to_smallest: f64,
    },
}

pub const MIN_R_SQUARED: f64 = 0.9;

impl Summary {
    pub fn passed(&self) -> bool {
        match self {
            Summary::RateVsHorizon { curves, .. } => {
                !curves.is_empty() && curves.iter().all(|c| c.monotone && c.reaches_threshold)
            }
            Summary::ComplexityVsP { points, fit, min_r_squared, .. } => {
                points.iter().all(|(_, c)| c.is_some()) && fit.is_some_and(|f| f.r_squared >= *min_r_squared)
            }
            Summary::RateVsEta { points, small_eta_gap, half_width_sum, .. } => {
                points.len() >= 2 && small_eta_gap < half_width_sum
            }
        }
    }

    /// Human-readable lines, one per curve or point.
    pub fn lines(&self) -> Vec<String> {
        match self {
            Summary::RateVsHorizon { threshold, curves } => curves
                .iter()
                .map(|c| {
                    format!(
                        "p = {}: max rate {:.3}, reaches {threshold}: {}, monotone within Wilson overlap: {}",
                        c.p, c.max_rate, c.reaches_threshold, c.monotone
                    )
                })
                .collect(),
            Summary::ComplexityVsP { threshold, points, fit, .. } => {
                let mut out: Vec<String> = points
                    .iter()
                    .map(|(p, c)| match c {
                        Some(v) => format!("p = {p}: T at {threshold} = {v:.2}"),
                        None => format!("p = {p}: threshold not reached"),
                    })
                    .collect();
                out.push(match fit {
                    Some(f) => format!(
                        "fit vs log2 p: slope {:.3}, intercept {:.3}, R^2 {:.4}",
                        f.slope, f.intercept, f.r_squared
                    ),
                    None => "fit vs log2 p: unavailable".into(),
                });
                out
            }
            Summary::RateVsEta { horizon, points, small_eta_gap, half_width_sum, largest_to_smallest } => {
                let mut out: Vec<String> = points
                    .iter()
                    .map(|(eta, r, w)| format!("T = {horizon}, eta = {eta}: rate {r:.3} [{:.3}, {:.3}]", w.lo, w.hi))
                    .collect();
                out.push(format!(
                    "gap between the two smallest eta: {small_eta_gap:.4} (half-width sum {half_width_sum:.4})"
                ));
                out.push(format!("rate change from largest to smallest eta: {largest_to_smallest:+.4}"));
                out
            }
        }
    }
}

fn usable(cells: &[CellResult]) -> impl Iterator<Item = &CellResult> {
    cells.iter().filter(|c| c.failure.is_none() && c.trials > 0)
}

/// Rate curves against `T`, one per `p`.
pub fn rate_curves(cells: &[CellResult], threshold: f64) -> Vec<RateCurveCheck> {
    let mut ps: Vec<usize> = usable(cells).map(|c| c.key.p).collect();
    ps.sort_unstable();
    ps.dedup();
    ps.into_iter()
        .map(|p| {
            let mut points: Vec<(f64, f64, Interval)> =
                usable(cells).filter(|c| c.key.p == p).map(|c| (c.key.horizon, c.rate, c.wilson)).collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            let monotone = points.windows(2).all(|w| w[1].1 >= w[0].1 || w[1].2.overlaps(&w[0].2));
            let max_rate = points.iter().map(|q| q.1).fold(0.0, f64::max);
            RateCurveCheck { p, points, monotone, max_rate, reaches_threshold: max_rate >= threshold }
        })
        .collect()
}

pub fn summarize(figure: Figure, result: &ExperimentResult) -> Summary {
    let threshold = result.manifest.config.success_threshold;
    match figure {
        Figure::Fig1Left => Summary::RateVsHorizon { threshold, curves: rate_curves(&result.cells, threshold) },
        Figure::Fig1Right => {
            let mut points: Vec<(usize, Option<f64>)> =
                result.complexity.iter().map(|c| (c.p, c.sample_complexity)).collect();
            points.sort_by_key(|q| q.0);
            let reached: Vec<(f64, f64)> =
                points.iter().filter_map(|(p, c)| c.map(|v| ((*p as f64).log2(), v))).collect();
            let (x, y): (Vec<f64>, Vec<f64>) = reached.into_iter().unzip();
            Summary::ComplexityVsP { threshold, points, fit: linear_fit(&x, &y), min_r_squared: MIN_R_SQUARED }
        }
        Figure::Fig2 => {
            let mut points: Vec<(f64, f64, Interval)> =
                usable(&result.cells).map(|c| (c.key.eta, c.rate, c.wilson)).collect();
            points.sort_by(|a, b| b.0.total_cmp(&a.0));
            let horizon = usable(&result.cells).next().map_or(f64::NAN, |c| c.key.horizon);
            let (small_eta_gap, half_width_sum, largest_to_smallest) = match points.as_slice() {
                [.., a, b] => {
                    ((a.1 - b.1).abs(), a.2.half_width() + b.2.half_width(), points[points.len() - 1].1 - points[0].1)
                }
                _ => (f64::NAN, f64::NAN, f64::NAN),
            };
            Summary::RateVsEta { horizon, points, small_eta_gap, half_width_sum, largest_to_smallest }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reproduction {
    pub figure: Figure,
    pub result: ExperimentResult,
    pub plots: Vec<PathBuf>,
    pub summary: Summary,
}

impl Reproduction {
    pub fn passed(&self) -> bool {
        self.summary.passed()
    }
}

/// Runs the canned sweep for `figure` into `output_dir`, emits its plot, and
/// writes `summary.json` next to the sweep outputs.
pub fn reproduce(figure: Figure, base_seed: u64, output_dir: &Path, threads: Option<usize>) -> Result<Reproduction> {
    let cfg = canned_config(figure, base_seed, output_dir);
    let result = run_sweep_with_threads(&cfg, threads)?;
    if let Some(c) = result.cells.iter().find(|c| c.failure.is_some()) {
        log::warn!("{figure}: cell {} failed: {}", c.index, c.failure.as_deref().unwrap_or(""));
    }
    let plots = emit_plots(&result, figure.plot_kind(), output_dir)?;
    let summary = summarize(figure, &result);
    let json = serde_json::to_string_pretty(&summary).map_err(Error::from)?;
    std::fs::write(output_dir.join("summary.json"), json)?;
    Ok(Reproduction { figure, result, plots, summary })
}
