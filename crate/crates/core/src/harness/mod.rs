//! Experiment sweeps, persistence, plotting, canned reproductions and the
//! appendix audit suite.

pub mod appendix;
mod config;
pub mod plots;
pub mod reproduce;
pub mod sweep;

pub use config::{EnsembleKind, ExperimentConfig, Grid, SimulationMode};
pub use plots::{emit_plots, PlotKind};
pub use sweep::{
    grid_cells, replay_trial, run_sweep, run_sweep_with_threads, CellKey, CellResult, ComplexityPoint,
    ExperimentResult, Manifest, TrialRecord,
};
