//! Hypothesis quantities, theorem bounds and the four sufficient conditions
//! evaluated on one trajectory.

use sdenet::conditions::{check_prop3, compute_condition_report, restricted, Prop3Inputs};
use sdenet::dynamics::{self, lyapunov::DEFAULT_TOL, BinaryVariant};
use sdenet::estimator::{GradientSource, LossMode, Moments};

fn main() -> sdenet::Result<()> {
    let (row, eta, n) = (0, 0.1, 200_000);
    let model = dynamics::make_random_binary_model(5, 1.5, 2, BinaryVariant::Stabilized)?;
    let traj = dynamics::simulate_discrete(&model, eta, n, 2)?;
    let gh = Moments::compute(&traj, LossMode::Discrete)?.for_row(row, GradientSource::GroundTruth(&model))?;
    let q0 = dynamics::solve_lyapunov_discrete(&model, eta, DEFAULT_TOL)?.q;
    let support = model.support(row).to_vec();
    let r = restricted(&q0, &support)?;
    let a_min = model.a_min(row).unwrap_or(0.0);
    let k = support.len() as f64;
    let inputs = Prop3Inputs { support, lambda: a_min * r.c_min / (8.0 * k), a_min, c_min: r.c_min, alpha: r.alpha, k };
    let prop3 = check_prop3(&gh, &q0, &inputs)?;
    let report = compute_condition_report(&model, row, Some(eta), Some(n as f64 * eta), 0.05)?.with_prop3(prop3);
    print!("{}", report.to_kv()?);
    Ok(())
}
