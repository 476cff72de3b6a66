//! Whole-matrix recovery under fixed, theorem and oracle-grid regularization.

use sdenet::dynamics::{self, BinaryVariant};
use sdenet::estimator::{recover_network, LambdaGrid, LambdaStrategy, LossMode, RecoveryContext, Theorem};

fn main() -> sdenet::Result<()> {
    let model = dynamics::make_random_binary_model(12, 3.0, 11, BinaryVariant::Stabilized)?;
    let traj = dynamics::simulate_discrete(&model, 0.1, 5_000, 11)?;
    let ctx = RecoveryContext::new(LossMode::Discrete, Some(&model));
    let strategies = [
        ("fixed 0.2", LambdaStrategy::Fixed(0.2)),
        ("theorem", LambdaStrategy::Theorem { which: Theorem::Discrete, delta: 0.05 }),
        ("oracle grid", LambdaStrategy::OracleGrid(LambdaGrid::default())),
    ];
    for (name, s) in &strategies {
        let net = recover_network(&traj, s, &ctx)?;
        let ok = net.rows.iter().filter(|r| r.success == Some(true)).count();
        println!("{name:>12}: {ok}/{} rows with exact signed support", net.rows.len());
    }
    Ok(())
}
