//! Stationary covariances from both Lyapunov routes, and the small-step limit.

use sdenet::dynamics::lyapunov::{solve_continuous_with, solve_discrete_with, LyapunovMethod, DEFAULT_TOL};
use sdenet::dynamics::{self, BinaryVariant};
use sdenet::linalg;

fn main() -> sdenet::Result<()> {
    let model = dynamics::make_random_binary_model(12, 3.0, 4, BinaryVariant::Stabilized)?;
    let fast = solve_continuous_with(&model, DEFAULT_TOL, LyapunovMethod::Doubling)?;
    let direct = solve_continuous_with(&model, DEFAULT_TOL, LyapunovMethod::Kronecker)?;
    println!(
        "continuous residual {:.2e}, routes differ by {:.2e}",
        fast.residual,
        linalg::max_abs(&(&fast.q - &direct.q))
    );
    for eta in [0.1, 0.01, 0.001] {
        let q = solve_discrete_with(&model, eta, DEFAULT_TOL, LyapunovMethod::Auto)?;
        println!(
            "eta = {eta}: residual {:.2e}, |Q0(eta) - Q0| = {:.3e}",
            q.residual,
            linalg::max_abs(&(&q.q - &fast.q))
        );
    }
    Ok(())
}
