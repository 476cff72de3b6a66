//! System matrices, stationary covariances, and trajectory simulation for
//! `dx = A0 x dt + db` and its Euler discretization
//! `x(t) = x(t-1) + eta A0 x(t-1) + w(t)`.

pub mod graph;
pub mod io;
pub mod lyapunov;
mod model;
mod simulate;

pub use lyapunov::{
    solve_lyapunov_continuous, solve_lyapunov_discrete, CovarianceKind, LyapunovMethod, StationaryCovariance,
};
pub(crate) use model::random_binary_with;
pub use model::{make_laplacian_model, make_random_binary_model, sign, BinaryVariant, Ensemble, SystemModel};
pub(crate) use simulate::whole_ratio;
pub use simulate::{
    simulate_continuous, simulate_coupled, simulate_discrete, simulate_discrete_scaled, ContinuousParams, CoupledPair,
    InnerPath, Provenance, Trajectory,
};
