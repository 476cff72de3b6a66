//! Monte Carlo tail probabilities of `G_hat` and `Q_hat` against the
//! closed-form concentration bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, lyapunov::DEFAULT_TOL, SystemModel};
use crate::error::{Error, Result};
use crate::estimator::{GradientSource, LossMode, Moments};
use crate::linalg::{self, Matrix};
use crate::rng::derive_seed;
use crate::stats::{RateEstimate, Z95};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailOptions {
    pub trials: usize,
    pub base_seed: u64,
    /// Normal quantile for the Wilson interval.
    pub z: f64,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self { trials: 10_000, base_seed: 0, z: Z95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub n: usize,
    pub epsilon: f64,
    pub rate: RateEstimate,
    pub bound: f64,
    /// Lower Wilson limit above the bound.
    pub violation: bool,
    /// Matrix variant only: sum over entries of the rate at threshold `epsilon / |S|` on the same samples.
    pub entrywise_rate_sum: Option<f64>,
}

fn contractive_sigma(model: &SystemModel, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("eta = {eta} must be positive")));
    }
    let sigma = model.sigma_max(eta);
    if sigma < 1.0 {
        Ok(sigma)
    } else {
        Err(Error::NotContractive { sigma_max: sigma })
    }
}

fn check_indices(p: usize, idx: &[usize]) -> Result<()> {
    if idx.is_empty() || idx.iter().any(|&i| i >= p) {
        return Err(Error::InvalidArgument(format!("index set {idx:?} must be nonempty and within 0..{p}")));
    }
    Ok(())
}

/// Runs `trials` stationary simulations in parallel and collects `stat` per trial.
fn monte_carlo<T: Send>(
    model: &SystemModel,
    eta: f64,
    n: usize,
    opts: &TailOptions,
    stat: impl Fn(&Moments) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    if opts.trials == 0 || n == 0 {
        return Err(Error::InvalidArgument("need at least one trial and one transition".into()));
    }
    (0..opts.trials as u64)
        .into_par_iter()
        .map(|t| {
            let traj = dynamics::simulate_discrete(model, eta, n, derive_seed(opts.base_seed, &[t]))?;
            stat(&Moments::compute(&traj, LossMode::Discrete)?)
        })
        .collect()
}

fn report(n: usize, epsilon: f64, events: usize, opts: &TailOptions, bound: f64) -> TailReport {
    let rate = RateEstimate::new(events as u64, opts.trials as u64, opts.z);
    TailReport { n, epsilon, violation: rate.violates(bound), rate, bound, entrywise_rate_sum: None }
}

/// `P{|G_S|_inf > eps}` for row `row` versus `2|S| exp(-n (1 - sigma_max) eps^2 / 4)`.
pub fn empirical_tail_gradient(
    model: &SystemModel,
    eta: f64,
    n: usize,
    row: usize,
    support: &[usize],
    epsilon: f64,
    opts: &TailOptions,
) -> Result<TailReport> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::OutOfRegime(format!("gradient tail needs 0 < eps < 1/2, got {epsilon}")));
    }
    let sigma = contractive_sigma(model, eta)?;
    check_indices(model.p(), support)?;
    check_indices(model.p(), &[row])?;
    let exceed = monte_carlo(model, eta, n, opts, |mom| {
        let gh = mom.for_row(row, GradientSource::GroundTruth(model))?;
        let g = gh.g_hat()?;
        Ok(support.iter().any(|&j| g[j].abs() > epsilon))
    })?;
    let events = exceed.into_iter().filter(|e| *e).count();
    let bound = 2.0 * support.len() as f64 * (-(n as f64) * (1.0 - sigma) * epsilon * epsilon / 4.0).exp();
    Ok(report(n, epsilon, events, opts, bound))
}

fn covariance_regime(n: usize, eta: f64, d: f64, epsilon: f64, eps_cap: f64) -> Result<()> {
    if !(n as f64 * eta > 3.0 / d) {
        return Err(Error::OutOfRegime(format!("need n eta > 3/D = {}, got {}", 3.0 / d, n as f64 * eta)));
    }
    if !(epsilon > 0.0 && epsilon < eps_cap) {
        return Err(Error::OutOfRegime(format!("need 0 < eps < {eps_cap}, got {epsilon}")));
    }
    Ok(())
}

/// `P{|Q_hat_ij - Q0_ij| > eps}` versus `2 exp(-(n / 32 eta^2)(1 - sigma_max)^3 eps^2)`.
pub fn empirical_tail_covariance(
    model: &SystemModel,
    eta: f64,
    n: usize,
    i: usize,
    j: usize,
    epsilon: f64,
    opts: &TailOptions,
) -> Result<TailReport> {
    let sigma = contractive_sigma(model, eta)?;
    check_indices(model.p(), &[i, j])?;
    let d = (1.0 - sigma) / eta;
    covariance_regime(n, eta, d, epsilon, 2.0 / d)?;
    let q0 = dynamics::solve_lyapunov_discrete(model, eta, DEFAULT_TOL)?.q;
    let exceed = monte_carlo(model, eta, n, opts, |mom| Ok((mom.q_hat[(i, j)] - q0[(i, j)]).abs() > epsilon))?;
    let events = exceed.into_iter().filter(|e| *e).count();
    let bound = 2.0 * (-(n as f64) / (32.0 * eta * eta) * (1.0 - sigma).powi(3) * epsilon * epsilon).exp();
    Ok(report(n, epsilon, events, opts, bound))
}

/// `P{|||Q_hat_JS - Q0_JS|||_inf > eps}` versus `2|J|k exp(-n (1 - sigma_max)^3 eps^2 / (32 k^2 eta^2))`, `k = |S|`.
pub fn empirical_tail_matrix(
    model: &SystemModel,
    eta: f64,
    n: usize,
    rows: &[usize],
    cols: &[usize],
    epsilon: f64,
    opts: &TailOptions,
) -> Result<TailReport> {
    let sigma = contractive_sigma(model, eta)?;
    check_indices(model.p(), rows)?;
    check_indices(model.p(), cols)?;
    let k = cols.len() as f64;
    let d = (1.0 - sigma) / eta;
    covariance_regime(n, eta, d, epsilon, 2.0 * k / d)?;
    let q0 = dynamics::solve_lyapunov_discrete(model, eta, DEFAULT_TOL)?.q;
    let q0_js = linalg::submatrix(&q0, rows, cols);
    let entry_eps = epsilon / k;
    let per_trial = monte_carlo(model, eta, n, opts, |mom| {
        let diff: Matrix = linalg::submatrix(&mom.q_hat, rows, cols) - &q0_js;
        let entries: Vec<bool> = diff.iter().map(|v| v.abs() > entry_eps).collect();
        Ok((linalg::inf_norm(&diff) > epsilon, entries))
    })?;
    let events = per_trial.iter().filter(|(m, _)| *m).count();
    let mut entry_counts = vec![0usize; rows.len() * cols.len()];
    for (_, entries) in &per_trial {
        for (c, e) in entry_counts.iter_mut().zip(entries) {
            *c += usize::from(*e);
        }
    }
    let entry_sum = entry_counts.iter().map(|&c| c as f64 / opts.trials as f64).sum();
    let bound = 2.0
        * rows.len() as f64
        * k
        * (-(n as f64) * (1.0 - sigma).powi(3) * epsilon * epsilon / (32.0 * k * k * eta * eta)).exp();
    let mut rep = report(n, epsilon, events, opts, bound);
    rep.entrywise_rate_sum = Some(entry_sum);
    Ok(rep)
}
