//! One row by coordinate descent, with its optimality certificate and the
//! dual bound on the off-support subgradient.

use sdenet::dynamics::{self, BinaryVariant};
use sdenet::estimator::{
    kkt_dual_check, signed_support_string, GradientSource, LassoOptions, LossMode, Moments, RowProblem,
};

fn main() -> sdenet::Result<()> {
    let model = dynamics::make_random_binary_model(10, 2.0, 3, BinaryVariant::Stabilized)?;
    let traj = dynamics::simulate_discrete(&model, 0.1, 20_000, 3)?;
    let row = 2;
    let problem = RowProblem { trajectory: &traj, row, lambda: 0.1, mode: LossMode::Discrete };
    let est = sdenet::estimator::lasso_solve(&problem, &LassoOptions::default())?;
    println!("truth    {}", signed_support_string(&model.signed_support(row)));
    println!("estimate {}", est.support_string());
    println!("KKT residual {:.2e} after {} sweeps", est.kkt_residual, est.iterations);

    let gh = Moments::compute(&traj, LossMode::Discrete)?.for_row(row, GradientSource::GroundTruth(&model))?;
    let dual = kkt_dual_check(&est, &gh, &model.row(row))?;
    println!(
        "off-support dual {:.3} <= bound {:.3}: {}",
        dual.dual_off_support,
        dual.dual_bound,
        dual.dual_holds(1e-9)
    );
    Ok(())
}
