use std::fs;
use std::path::Path;

use sdenet::estimator::{LambdaGrid, LambdaStrategy, SupportMatch};
use sdenet::harness::plots::{curves, render_svg};
use sdenet::harness::sweep::{
    replay_trial, run_sweep_with_threads, CellKey, CellResult, ExperimentResult, Manifest, MANIFEST_FILE, TRIALS_FILE,
};
use sdenet::harness::{emit_plots, run_sweep, EnsembleKind, ExperimentConfig, Grid, PlotKind, SimulationMode};
use sdenet::stats::{wilson, Z95};
use sdenet::Error;

fn config(dir: &Path) -> ExperimentConfig {
    ExperimentConfig {
        name: "test".into(),
        grid: Grid {
            p: vec![5, 8],
            k: vec![2.0],
            eta: vec![0.1],
            horizon: vec![10.0, 40.0],
            ensemble: vec![EnsembleKind::Stabilized],
            m: vec![1.0],
        },
        trials: 12,
        lambda_strategy: LambdaStrategy::OracleGrid(LambdaGrid::default()),
        success_threshold: 0.9,
        base_seed: 5,
        output_dir: dir.to_path_buf(),
        mode: SimulationMode::Discrete,
        support_match: SupportMatch::Signed,
        full_matrix: false,
        noiseless: false,
        max_redraws: 100,
    }
}

fn aggregates(r: &ExperimentResult) -> Vec<(u64, u64, u64, u64)> {
    r.cells.iter().map(|c| (c.successes, c.trials, c.wilson.lo.to_bits(), c.wilson.hi.to_bits())).collect()
}

#[test]
fn noiseless_unregularized_trial_always_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    // one noiseless orbit has condition number growing like eta^(2 - 2p), so exact
    // recovery needs a small dense model and a coarse step
    cfg.grid.p = vec![4];
    cfg.grid.k = vec![3.0];
    cfg.grid.eta = vec![0.2];
    cfg.grid.horizon = vec![2.0];
    cfg.trials = 1;
    cfg.noiseless = true;
    cfg.lambda_strategy = LambdaStrategy::Fixed(0.0);
    let res = run_sweep(&cfg).unwrap();
    assert_eq!(res.cells.len(), 1);
    assert_eq!(res.cells[0].rate, 1.0);
}

#[test]
fn resumed_sweep_matches_an_uninterrupted_one() {
    let full_dir = tempfile::tempdir().unwrap();
    let full = run_sweep(&config(full_dir.path())).unwrap();

    let part_dir = tempfile::tempdir().unwrap();
    let cfg = config(part_dir.path());
    run_sweep(&cfg).unwrap();
    // keep the header and the first third of the records, then a torn line
    let text = fs::read_to_string(part_dir.path().join(TRIALS_FILE)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let keep = 1 + (lines.len() - 1) / 3;
    let mut cut = lines[..keep].join("\n");
    cut.push('\n');
    cut.push_str(&lines[keep][..lines[keep].len() / 2]);
    fs::write(part_dir.path().join(TRIALS_FILE), cut).unwrap();

    let resumed = run_sweep(&cfg).unwrap();
    assert_eq!(aggregates(&resumed), aggregates(&full));
    assert_eq!(resumed.trials, full.trials);
    assert_eq!(
        fs::read_to_string(part_dir.path().join(TRIALS_FILE)).unwrap(),
        fs::read_to_string(full_dir.path().join(TRIALS_FILE)).unwrap()
    );
}

#[test]
fn thread_count_does_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let one = run_sweep_with_threads(&config(a.path()), Some(1)).unwrap();
    let three = run_sweep_with_threads(&config(b.path()), Some(3)).unwrap();
    assert_eq!(aggregates(&one), aggregates(&three));
    assert_eq!(one.trials, three.trials);
}

#[test]
fn every_trial_replays_from_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_sweep(&config(dir.path())).unwrap();
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest, res.manifest);
    for rec in &res.trials {
        assert_eq!(manifest.seeds[rec.cell][rec.trial], rec.seed);
        assert_eq!(&replay_trial(&manifest.config, rec.cell, rec.trial).unwrap(), rec);
    }
    assert!(replay_trial(&manifest.config, 99, 0).is_err());
}

#[test]
fn continuous_mode_shares_paths_across_eta() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.grid.p = vec![6];
    cfg.grid.eta = vec![0.2, 0.1];
    cfg.grid.horizon = vec![20.0];
    cfg.trials = 4;
    cfg.mode = SimulationMode::Continuous { delta: 0.025 };
    let res = run_sweep(&cfg).unwrap();
    let seeds = &res.manifest.seeds;
    assert_eq!(seeds[0], seeds[1]);
    assert!(res.cells.iter().all(|c| c.trials == 4 && c.failure.is_none()));
}

fn cell(index: usize, horizon: f64, successes: u64, trials: u64) -> CellResult {
    CellResult {
        index,
        key: CellKey { p: 8, k: 2.0, eta: 0.1, horizon, ensemble: EnsembleKind::Stabilized, m: 1.0 },
        successes,
        trials,
        rate: successes as f64 / trials as f64,
        wilson: wilson(successes, trials, Z95),
        failure: None,
    }
}

fn result_with(cells: Vec<CellResult>) -> ExperimentResult {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    ExperimentResult {
        complexity: sdenet::harness::sweep::sample_complexity(&cells, cfg.success_threshold),
        cells,
        trials: Vec::new(),
        manifest: Manifest { crate_version: "test".into(), config: cfg, seed_rule: String::new(), seeds: Vec::new() },
    }
}

#[test]
fn single_cell_gives_one_point_csv_and_valid_svg() {
    let dir = tempfile::tempdir().unwrap();
    let res = result_with(vec![cell(0, 50.0, 7, 10)]);
    let paths = emit_plots(&res, PlotKind::RateVsT, dir.path()).unwrap();
    let csv = paths.iter().find(|p| p.extension().is_some_and(|e| e == "csv")).unwrap();
    let text = fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,rate,wilson_lo,wilson_hi,trials");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("50,0.7,"));
    let svg = fs::read_to_string(dir.path().join("rate-vs-T.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<polyline").count(), 1);
}

#[test]
fn monotone_rates_draw_a_monotone_polyline() {
    let res = result_with((0..6).map(|i| cell(i, 10.0 * (i + 1) as f64, 2 * i as u64, 10)).collect());
    let svg = render_svg(&curves(&res, PlotKind::RateVsT), PlotKind::RateVsT);
    let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    let ys: Vec<f64> = pts.split(' ').map(|xy| xy.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(ys.len(), 6);
    // svg y grows downwards
    assert!(ys.windows(2).all(|w| w[1] < w[0]), "{ys:?}");
    let again = render_svg(&curves(&res, PlotKind::RateVsT), PlotKind::RateVsT);
    assert_eq!(svg, again);
}

#[test]
fn empty_result_cannot_be_plotted() {
    let dir = tempfile::tempdir().unwrap();
    let err = emit_plots(&result_with(Vec::new()), PlotKind::RateVsEta, dir.path()).unwrap_err();
    assert!(matches!(err, Error::EmptyResult(_)));
}

#[test]
fn config_json_round_trips_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let text = cfg.to_json().unwrap();
    assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["colour"] = serde_json::json!("blue");
    assert!(matches!(ExperimentConfig::from_json(&v.to_string()), Err(Error::Config(_))));

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["success_threshold"] = serde_json::json!(1.5);
    assert!(matches!(ExperimentConfig::from_json(&v.to_string()), Err(Error::Config(_))));
}

#[test]
fn documented_example_config_parses() {
    let text = r#"{
      "name": "rate-vs-T",
      "grid": { "p": [8, 16], "k": [2.0], "eta": [0.1], "horizon": [20, 60, 180],
                "ensemble": ["stabilized"], "m": [1.0] },
      "trials": 64,
      "lambda_strategy": { "oracle_grid": { "relative": { "points": 50, "lo": 0.001, "hi": 1.0 } } },
      "success_threshold": 0.9,
      "base_seed": 1,
      "output_dir": "out/rate-vs-T",
      "mode": { "kind": "discrete" }
    }"#;
    let cfg = ExperimentConfig::from_json(text).unwrap();
    assert_eq!(cfg.lambda_strategy, LambdaStrategy::OracleGrid(LambdaGrid::default()));
    assert_eq!(cfg.mode, SimulationMode::Discrete);
    assert_eq!(cfg.max_redraws, 100);
}
