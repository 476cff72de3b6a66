//! Seeded success-rate sweeps over a parameter grid.
//!
//! Trial seeds are `derive_seed(base_seed, [p, k, eta, T, ensemble, m indices..., trial])`;
//! in continuous mode the `eta` index is left out so that cells differing only in
//! `eta` observe the same model and Brownian path. Model, trajectory and row
//! draws use separate streams of the trial seed.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, graph, BinaryVariant, ContinuousParams, SystemModel, Trajectory};
use crate::error::{Error, Result};
use crate::estimator::{recover_row, LossMode, Moments, RecoveryContext};
use crate::rng::{derive_seed, stream, stream_rng};
use crate::stats::{wilson, Interval, Z95};

use super::config::{EnsembleKind, ExperimentConfig, SimulationMode};

pub const TRIALS_FILE: &str = "trials.csv";
pub const CELLS_FILE: &str = "cells.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
const TRIALS_HEADER: &str = "cell,trial,seed,row,redraws,success,lambda";

/// One point of the Cartesian grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub p: usize,
    pub k: f64,
    pub eta: f64,
    pub horizon: f64,
    pub ensemble: EnsembleKind,
    pub m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub key: CellKey,
    /// Per-axis positions in the grid, in the order `p, k, eta, T, ensemble, m`.
    pub axes: [usize; 6],
}

/// Enumerates grid cells; `p` varies slowest and `m` fastest.
pub fn grid_cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let g = &cfg.grid;
    let mut out = Vec::new();
    for (ip, &p) in g.p.iter().enumerate() {
        for (ik, &k) in g.k.iter().enumerate() {
            for (ie, &eta) in g.eta.iter().enumerate() {
                for (it, &horizon) in g.horizon.iter().enumerate() {
                    for (ien, &ensemble) in g.ensemble.iter().enumerate() {
                        for (im, &m) in g.m.iter().enumerate() {
                            out.push(Cell {
                                index: out.len(),
                                key: CellKey { p, k, eta, horizon, ensemble, m },
                                axes: [ip, ik, ie, it, ien, im],
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn trial_seed(cfg: &ExperimentConfig, cell: &Cell, trial: usize) -> u64 {
    let a = cell.axes.map(|v| v as u64);
    match cfg.mode {
        SimulationMode::Discrete => derive_seed(cfg.base_seed, &[a[0], a[1], a[2], a[3], a[4], a[5], trial as u64]),
        SimulationMode::Continuous { .. } => derive_seed(cfg.base_seed, &[a[0], a[1], a[3], a[4], a[5], trial as u64]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub cell: usize,
    pub trial: usize,
    pub seed: u64,
    pub row: usize,
    /// Rejected model draws before an admissible one.
    pub redraws: usize,
    pub success: bool,
    pub lambda: f64,
}

impl TrialRecord {
    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.cell,
            self.trial,
            self.seed,
            self.row,
            self.redraws,
            u8::from(self.success),
            dynamics::io::fmt_real(self.lambda)
        )
    }

    fn from_csv(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 7 {
            return None;
        }
        Some(Self {
            cell: f[0].parse().ok()?,
            trial: f[1].parse().ok()?,
            seed: f[2].parse().ok()?,
            row: f[3].parse().ok()?,
            redraws: f[4].parse().ok()?,
            success: match f[5] {
                "0" => false,
                "1" => true,
                _ => return None,
            },
            lambda: f[6].parse().ok()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub index: usize,
    pub key: CellKey,
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub wilson: Interval,
    /// Set when model draws were exhausted; the cell then has no rate.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityPoint {
    pub p: usize,
    pub k: f64,
    pub eta: f64,
    pub ensemble: EnsembleKind,
    pub m: f64,
    /// Smallest `T` reaching the threshold, interpolated linearly; `None` when never reached.
    pub sample_complexity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub crate_version: String,
    pub config: crate::harness::ExperimentConfig,
    pub seed_rule: String,
    /// `seeds[cell][trial]`.
    pub seeds: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub cells: Vec<CellResult>,
    pub complexity: Vec<ComplexityPoint>,
    pub trials: Vec<TrialRecord>,
    pub manifest: Manifest,
}

fn seed_rule(cfg: &ExperimentConfig) -> String {
    match cfg.mode {
        SimulationMode::Discrete => "derive_seed(base_seed, [ip, ik, ieta, iT, iensemble, im, trial])".into(),
        SimulationMode::Continuous { .. } => "derive_seed(base_seed, [ip, ik, iT, iensemble, im, trial])".into(),
    }
}

fn admissible(model: &SystemModel, cfg: &ExperimentConfig, eta: f64) -> bool {
    if !model.is_stable() {
        return false;
    }
    match cfg.mode {
        SimulationMode::Discrete => model.sigma_max(eta) < 1.0,
        SimulationMode::Continuous { .. } => true,
    }
}

/// Draws an admissible model; returns it with the number of rejected draws.
fn draw_model(cfg: &ExperimentConfig, key: &CellKey, seed: u64) -> Result<(SystemModel, usize)> {
    let mut rng = stream_rng(seed, stream::MODEL);
    for attempt in 0..cfg.max_redraws {
        let model = match key.ensemble {
            EnsembleKind::BinaryLiteral => {
                dynamics::random_binary_with(key.p, key.k, &mut rng, BinaryVariant::BinaryLiteral)?
            }
            EnsembleKind::Stabilized => {
                dynamics::random_binary_with(key.p, key.k, &mut rng, BinaryVariant::Stabilized)?
            }
            EnsembleKind::Laplacian => {
                let adj = graph::random_bounded_degree_graph(key.p, key.k.round() as usize, &mut rng)?;
                dynamics::make_laplacian_model(&adj, key.m)?
            }
        };
        if admissible(&model, cfg, key.eta) {
            return Ok((model, attempt));
        }
        log::debug!("rejected model draw {attempt} for seed {seed}");
    }
    Err(Error::EmptyResult("no admissible model within the redraw cap"))
}

fn simulate(cfg: &ExperimentConfig, key: &CellKey, model: &SystemModel, seed: u64) -> Result<Trajectory> {
    match cfg.mode {
        SimulationMode::Discrete => {
            let n = dynamics::whole_ratio(key.horizon, key.eta)
                .ok_or_else(|| Error::Config(format!("eta = {} does not divide T = {}", key.eta, key.horizon)))?;
            let scale = if cfg.noiseless { 0.0 } else { 1.0 };
            dynamics::simulate_discrete_scaled(model, key.eta, n, seed, scale)
        }
        SimulationMode::Continuous { delta } => {
            if cfg.noiseless {
                return Err(Error::Config("noiseless runs are only available in discrete mode".into()));
            }
            let params = ContinuousParams { horizon: key.horizon, delta, eta: key.eta, keep_inner: false };
            dynamics::simulate_continuous(model, params, seed)
        }
    }
}

/// Sup-norm tolerance for exact recovery in noiseless configurations, which judge
/// the estimate itself rather than its signed support.
pub const NOISELESS_TOL: f64 = 1e-8;

/// Runs one trial from scratch; identical inputs give an identical record.
pub fn run_trial(cfg: &ExperimentConfig, cell: &Cell, trial: usize) -> Result<TrialRecord> {
    let seed = trial_seed(cfg, cell, trial);
    let key = &cell.key;
    let (model, redraws) = draw_model(cfg, key, seed)?;
    let traj = simulate(cfg, key, &model, seed)?;
    let row = stream_rng(seed, stream::ROW).random_range(0..key.p);
    let moments = Moments::compute(&traj, LossMode::Discrete)?;
    let ctx =
        RecoveryContext { support_match: cfg.support_match, ..RecoveryContext::new(LossMode::Discrete, Some(&model)) };
    let rows: Vec<usize> = if cfg.full_matrix { (0..key.p).collect() } else { vec![row] };
    let mut success = true;
    let mut lambda = f64::NAN;
    for r in rows {
        let out = recover_row(&moments, &traj, r, &cfg.lambda_strategy, &ctx)?;
        if r == row {
            lambda = out.estimate.lambda;
        }
        success &= if cfg.noiseless {
            // a dense least-squares fit has rounding-level entries off the support
            (out.estimate.a_hat_vector() - model.row(r)).amax() <= NOISELESS_TOL
        } else {
            out.success.unwrap_or(false)
        };
    }
    Ok(TrialRecord { cell: cell.index, trial, seed, row, redraws, success, lambda })
}

/// Re-runs one `(cell, trial)` from a manifest's configuration.
pub fn replay_trial(cfg: &ExperimentConfig, cell_index: usize, trial: usize) -> Result<TrialRecord> {
    let cells = grid_cells(cfg);
    let cell = cells.get(cell_index).ok_or_else(|| Error::InvalidArgument(format!("no cell {cell_index}")))?;
    if trial >= cfg.trials {
        return Err(Error::InvalidArgument(format!("trial {trial} out of range")));
    }
    run_trial(cfg, cell, trial)
}

/// Completed trials found in an earlier (possibly interrupted) run.
fn load_existing(path: &Path, cfg: &ExperimentConfig) -> Result<BTreeMap<(usize, usize), TrialRecord>> {
    let mut done = BTreeMap::new();
    let Ok(text) = fs::read_to_string(path) else {
        return Ok(done);
    };
    let cells = grid_cells(cfg);
    for line in text.lines().skip(1) {
        // a torn final line from an interrupted write is simply redone
        if let Some(rec) = TrialRecord::from_csv(line) {
            let valid = cells.get(rec.cell).is_some_and(|c| trial_seed(cfg, c, rec.trial) == rec.seed);
            if valid && rec.trial < cfg.trials {
                done.insert((rec.cell, rec.trial), rec);
            }
        }
    }
    Ok(done)
}

fn write_trials(path: &Path, records: &BTreeMap<(usize, usize), TrialRecord>) -> Result<()> {
    let mut text = String::from(TRIALS_HEADER);
    text.push('\n');
    for rec in records.values() {
        text.push_str(&rec.to_csv());
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Runs every missing trial, appending to `trials.csv` as trials finish, then
/// rewrites it in `(cell, trial)` order and writes `cells.csv` and `manifest.json`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let trials_path = cfg.output_dir.join(TRIALS_FILE);
    let mut done = load_existing(&trials_path, cfg)?;
    write_trials(&trials_path, &done)?;

    let cells = grid_cells(cfg);
    let todo: Vec<(usize, usize)> = cells
        .iter()
        .flat_map(|c| (0..cfg.trials).map(move |t| (c.index, t)))
        .filter(|key| !done.contains_key(key))
        .collect();
    log::info!("{}: {} of {} trials to run", cfg.name, todo.len(), cells.len() * cfg.trials);

    let sink = Mutex::new(OpenOptions::new().append(true).open(&trials_path)?);
    let outcomes: Vec<((usize, usize), std::result::Result<TrialRecord, String>)> = todo
        .par_iter()
        .map(|&(ci, t)| {
            let res = run_trial(cfg, &cells[ci], t).map_err(|e| e.to_string());
            if let Ok(rec) = &res {
                let mut f = sink.lock().unwrap_or_else(|e| e.into_inner());
                let _ = writeln!(f, "{}", rec.to_csv());
            }
            ((ci, t), res)
        })
        .collect();
    drop(sink);

    let mut failures: BTreeMap<usize, String> = BTreeMap::new();
    for (key, res) in outcomes {
        match res {
            Ok(rec) => {
                done.insert(key, rec);
            }
            Err(msg) => {
                failures.entry(key.0).or_insert(format!("trial {}: {msg}", key.1));
            }
        }
    }
    write_trials(&trials_path, &done)?;
    let result = aggregate(cfg, &cells, &done, &failures);
    fs::write(cfg.output_dir.join(CELLS_FILE), cells_csv(&result.cells))?;
    fs::write(cfg.output_dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&result.manifest)?)?;
    Ok(result)
}

/// Runs the sweep on a dedicated pool of `threads` workers.
pub fn run_sweep_with_threads(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentResult> {
    match threads {
        None => run_sweep(cfg),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| run_sweep(cfg)),
    }
}

fn aggregate(
    cfg: &ExperimentConfig,
    cells: &[Cell],
    done: &BTreeMap<(usize, usize), TrialRecord>,
    failures: &BTreeMap<usize, String>,
) -> ExperimentResult {
    let mut results = Vec::with_capacity(cells.len());
    for c in cells {
        let recs: Vec<&TrialRecord> = done.range((c.index, 0)..(c.index + 1, 0)).map(|(_, r)| r).collect();
        let trials = recs.len() as u64;
        let successes = recs.iter().filter(|r| r.success).count() as u64;
        let rate = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
        results.push(CellResult {
            index: c.index,
            key: c.key,
            successes,
            trials,
            rate,
            wilson: wilson(successes, trials, Z95),
            failure: failures.get(&c.index).cloned(),
        });
    }
    let complexity = sample_complexity(&results, cfg.success_threshold);
    let seeds = cells.iter().map(|c| (0..cfg.trials).map(|t| trial_seed(cfg, c, t)).collect()).collect();
    let manifest = Manifest {
        crate_version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        seed_rule: seed_rule(cfg),
        seeds,
    };
    ExperimentResult { cells: results, complexity, trials: done.values().cloned().collect(), manifest }
}

/// Linear interpolation in `T` between the last grid point below the threshold and the first at or above it.
pub fn interpolate_crossing(points: &[(f64, f64)], threshold: f64) -> Option<f64> {
    let mut prev: Option<(f64, f64)> = None;
    for &(x, y) in points {
        if y >= threshold {
            return Some(match prev {
                None => x,
                Some((x0, y0)) => x0 + (threshold - y0) / (y - y0) * (x - x0),
            });
        }
        prev = Some((x, y));
    }
    None
}

pub fn sample_complexity(cells: &[CellResult], threshold: f64) -> Vec<ComplexityPoint> {
    let mut groups: Vec<(CellKey, Vec<(f64, f64)>)> = Vec::new();
    for c in cells.iter().filter(|c| c.failure.is_none() && c.trials > 0) {
        let same = |k: &CellKey| {
            k.p == c.key.p && k.k == c.key.k && k.eta == c.key.eta && k.ensemble == c.key.ensemble && k.m == c.key.m
        };
        match groups.iter_mut().find(|(k, _)| same(k)) {
            Some((_, pts)) => pts.push((c.key.horizon, c.rate)),
            None => groups.push((c.key, vec![(c.key.horizon, c.rate)])),
        }
    }
    groups
        .into_iter()
        .map(|(k, mut pts)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            ComplexityPoint {
                p: k.p,
                k: k.k,
                eta: k.eta,
                ensemble: k.ensemble,
                m: k.m,
                sample_complexity: interpolate_crossing(&pts, threshold),
            }
        })
        .collect()
}

pub fn cells_csv(cells: &[CellResult]) -> String {
    let mut out = String::from("cell,p,k,eta,horizon,ensemble,m,successes,trials,rate,wilson_lo,wilson_hi,status\n");
    for c in cells {
        let k = &c.key;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            c.index,
            k.p,
            k.k,
            k.eta,
            k.horizon,
            k.ensemble.name(),
            k.m,
            c.successes,
            c.trials,
            c.rate,
            c.wilson.lo,
            c.wilson.hi,
            c.failure.as_deref().map_or("ok".to_string(), |f| format!("failed: {}", f.replace(',', ";")))
        ));
    }
    out
}
