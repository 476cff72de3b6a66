//! Empirical tail probabilities of the gradient and covariance estimates
//! against their exponential bounds, with Wilson intervals.

use sdenet::conditions::{empirical_tail_covariance, empirical_tail_gradient, TailOptions};
use sdenet::dynamics::SystemModel;
use sdenet::linalg::Matrix;

fn main() -> sdenet::Result<()> {
    let model = SystemModel::from_matrix(Matrix::from_element(1, 1, -1.0))?;
    let opts = TailOptions { trials: 2_000, ..Default::default() };
    for n in [100, 400] {
        let g = empirical_tail_gradient(&model, 0.1, n, 0, &[0], 0.3, &opts)?;
        let c = empirical_tail_covariance(&model, 0.1, n, 0, 0, 0.5, &opts)?;
        println!(
            "n = {n}: gradient {:.4} [{:.4}, {:.4}] vs {:.4}; covariance {:.4} vs {:.4}",
            g.rate.rate, g.rate.interval.lo, g.rate.interval.hi, g.bound, c.rate.rate, c.bound
        );
    }
    Ok(())
}
