//! A small resumable sweep, its plots, and a bit-identical replay of one trial.

use sdenet::harness::{emit_plots, replay_trial, run_sweep, ExperimentConfig, PlotKind};

fn main() -> sdenet::Result<()> {
    let dir = std::env::temp_dir().join("sdenet-sweep-example");
    let cfg = ExperimentConfig::from_json(&format!(
        r#"{{
            "name": "example",
            "grid": {{ "p": [8, 16], "k": [3], "eta": [0.1], "horizon": [25, 50, 100, 200] }},
            "trials": 32,
            "lambda_strategy": {{ "oracle_grid": {{ "relative": {{ "points": 30, "lo": 0.001, "hi": 1.0 }} }} }},
            "base_seed": 5,
            "output_dir": {:?},
            "mode": {{ "kind": "discrete" }}
        }}"#,
        dir
    ))?;
    let result = run_sweep(&cfg)?;
    for c in &result.cells {
        println!("p = {:>2}, T = {:>3}: rate {:.3}", c.key.p, c.key.horizon, c.rate);
    }
    for c in &result.complexity {
        println!("p = {}: sample complexity {:?}", c.p, c.sample_complexity);
    }
    let files = emit_plots(&result, PlotKind::RateVsT, &dir)?;
    println!("wrote {} files under {}", files.len(), dir.display());
    let again = replay_trial(&cfg, 3, 7)?;
    let stored = result.trials.iter().find(|t| t.cell == 3 && t.trial == 7);
    println!("replay matches stored record: {}", stored == Some(&again));
    Ok(())
}
