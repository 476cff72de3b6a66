//! Discrete chain, subsampled diffusion, and a coupled pair on shared noise.

use sdenet::dynamics::{self, io, BinaryVariant, ContinuousParams};

fn main() -> sdenet::Result<()> {
    let model = dynamics::make_random_binary_model(6, 2.0, 7, BinaryVariant::Stabilized)?;
    println!("A0 =\n{}", io::matrix_to_string(model.matrix()));

    let disc = dynamics::simulate_discrete(&model, 0.1, 500, 1)?;
    println!("discrete: n = {}, T = {}, x(500) = {:.3}", disc.n(), disc.horizon(), disc.state(500).transpose());

    let params = ContinuousParams { horizon: 50.0, delta: 0.1 / 32.0, eta: 0.1, keep_inner: true };
    let cont = dynamics::simulate_continuous(&model, params, 1)?;
    let inner = cont.inner().map_or(0, |p| p.samples.ncols());
    println!("continuous: {} samples at eta, {inner} inner states", cont.n() + 1);

    let pair = dynamics::simulate_coupled(&model, 50.0, 500, 1, 0.1 / 32.0)?;
    let gap = (pair.discrete.samples() - pair.continuous.samples()).amax();
    println!("coupled pair: max |x_disc - x_cont| = {gap:.3}");
    Ok(())
}
