//! Small-scale numerical audits of the lemmas behind the recovery theorems.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, graph, lyapunov::DEFAULT_TOL, SystemModel};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::rng::{derive_seed, standard_normal_vector, stream_rng};

/// Relative slack allowed when comparing a computed quantity with its bound.
const BOUND_RTOL: f64 = 1e-9;

fn within(value: f64, bound: f64) -> bool {
    value <= bound + BOUND_RTOL * bound.abs().max(1.0)
}

// ---------------------------------------------------------------------------
// Incoherence decomposition

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub k: usize,
    pub c_min: f64,
    /// Max-abs residual of `Q_hat_{Sc,S} Q_hat_SS^-1 - (T1 + T2 + T3 + Q0_{Sc,S} Q0_SS^-1)`.
    pub identity_residual: f64,
    /// `lambda_min(Q_hat_SS) >= C_min / 2` and population incoherence below one.
    pub precondition: bool,
    pub t_norms: [f64; 3],
    pub t_bounds: [f64; 3],
    pub bounds_hold: bool,
}

pub fn verify_decomposition(q_hat: &Matrix, q0: &Matrix, support: &[usize]) -> Result<DecompositionReport> {
    let p = q0.nrows();
    if q_hat.shape() != q0.shape() || q0.ncols() != p {
        return Err(Error::Dimension { expected: p, got: q_hat.nrows() });
    }
    if support.is_empty() || support.iter().any(|&s| s >= p) {
        return Err(Error::InvalidArgument("support must be a nonempty subset of 0..p".into()));
    }
    let off = linalg::complement(p, support);
    let k = support.len();
    let q0_ss = linalg::submatrix(q0, support, support);
    let qh_ss = linalg::submatrix(q_hat, support, support);
    let q0_cs = linalg::submatrix(q0, &off, support);
    let qh_cs = linalg::submatrix(q_hat, &off, support);
    let q0_inv = linalg::inverse(&q0_ss, "Q0 restricted to S")?;
    let qh_inv = linalg::inverse(&qh_ss, "Q_hat restricted to S")?;
    let inv_diff = &qh_inv - &q0_inv;
    let cs_diff = &qh_cs - &q0_cs;
    let t1 = &q0_cs * &inv_diff;
    let t2 = &cs_diff * &q0_inv;
    let t3 = &cs_diff * &inv_diff;
    let lhs = &qh_cs * &qh_inv;
    let rhs = &t1 + &t2 + &t3 + &q0_cs * &q0_inv;
    let identity_residual = if off.is_empty() { 0.0 } else { linalg::max_abs(&(lhs - rhs)) };

    let c_min = linalg::lambda_min(&q0_ss);
    let pop_incoherence = if off.is_empty() { 0.0 } else { linalg::inf_norm(&(&q0_cs * &q0_inv)) };
    let precondition = c_min > 0.0 && linalg::lambda_min(&qh_ss) >= c_min / 2.0 && pop_incoherence < 1.0;
    let sk = (k as f64).sqrt();
    let d_ss = linalg::inf_norm(&(&qh_ss - &q0_ss));
    let d_cs = if off.is_empty() { 0.0 } else { linalg::inf_norm(&cs_diff) };
    let norm = |m: &Matrix| if off.is_empty() { 0.0 } else { linalg::inf_norm(m) };
    let t_norms = [norm(&t1), norm(&t2), norm(&t3)];
    let t_bounds = [2.0 * sk / c_min * d_ss, sk / c_min * d_cs, 2.0 * sk / (c_min * c_min) * d_cs * d_ss];
    let bounds_hold = !precondition || t_norms.iter().zip(&t_bounds).all(|(v, b)| within(*v, *b));
    Ok(DecompositionReport { k, c_min, identity_residual, precondition, t_norms, t_bounds, bounds_hold })
}

// ---------------------------------------------------------------------------
// Spectra of the quadratic-form matrices

/// Largest admissible dimension of the explicit block matrices.
pub const SPECTRAL_DIM_CAP: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub sigma_max: f64,
    /// Gradient form `R(j)`, dimension `p(n+m+1)`.
    pub grad_dim: usize,
    pub grad_trace: f64,
    pub grad_max_abs: f64,
    pub grad_max_abs_bound: f64,
    pub grad_sum_sq: f64,
    pub grad_sum_sq_bound: f64,
    /// Covariance form `R(i,j)`, dimension `p(n+m)`.
    pub cov_dim: usize,
    pub cov_max_abs: f64,
    pub cov_max_abs_bound: f64,
    pub cov_mean_sq: f64,
    pub cov_mean_sq_bound: f64,
    pub all_hold: bool,
}

fn step_powers(model: &SystemModel, eta: f64, count: usize) -> Vec<Matrix> {
    let step = model.step_matrix(eta);
    let mut out = Vec::with_capacity(count);
    let mut cur = Matrix::identity(model.p(), model.p());
    for _ in 0..count {
        let next = &cur * &step;
        out.push(cur);
        cur = next;
    }
    out
}

/// `R(j)` with only row `r` of each block populated by row `j` of `(I + eta A0)^tau`.
fn gradient_form(powers: &[Matrix], p: usize, n: usize, m: usize, r: usize, j: usize) -> Matrix {
    let dim = p * (n + m + 1);
    let mut lower = Matrix::zeros(dim, dim);
    for s in 0..n {
        let block_row = m + 1 + s;
        for c in 0..=(m + s) {
            let pw = &powers[m + s - c];
            for q in 0..p {
                lower[(block_row * p + r, c * p + q)] = pw[(j, q)];
            }
        }
    }
    (&lower + lower.transpose()) * 0.5
}

/// `Phi_j`: row `s` holds row `j` of `(I + eta A0)^(m+s-c)` at block column `c`.
fn phi(powers: &[Matrix], p: usize, n: usize, m: usize, j: usize) -> Matrix {
    let mut out = Matrix::zeros(n, p * (n + m));
    for s in 0..n {
        for c in 0..=(m + s) {
            let pw = &powers[m + s - c];
            for q in 0..p {
                out[(s, c * p + q)] = pw[(j, q)];
            }
        }
    }
    out
}

pub fn verify_spectral_lemmas(
    model: &SystemModel,
    eta: f64,
    n: usize,
    m: usize,
    r: usize,
    j: usize,
    i: usize,
) -> Result<SpectralReport> {
    let p = model.p();
    if n == 0 || [r, j, i].iter().any(|&x| x >= p) {
        return Err(Error::InvalidArgument("need n >= 1 and indices within 0..p".into()));
    }
    let grad_dim = p * (n + m + 1);
    if grad_dim > SPECTRAL_DIM_CAP {
        return Err(Error::TooLarge { dim: grad_dim, cap: SPECTRAL_DIM_CAP });
    }
    let sigma = model.sigma_max(eta);
    if !(sigma < 1.0) {
        return Err(Error::NotContractive { sigma_max: sigma });
    }
    let powers = step_powers(model, eta, n + m + 1);
    let gap = 1.0 - sigma;
    let nf = n as f64;

    let rg = gradient_form(&powers, p, n, m, r, j);
    let nu = linalg::sym_eigenvalues(&rg);
    let grad_trace = rg.trace();
    let grad_max_abs = nu.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let grad_sum_sq: f64 = nu.iter().map(|v| v * v).sum();

    let phi_i = phi(&powers, p, n, m, i);
    let phi_j = phi(&powers, p, n, m, j);
    let cross = phi_j.transpose() * &phi_i;
    let rij = (&cross + cross.transpose()) * 0.5;
    let mu = linalg::sym_eigenvalues(&rij);
    let cov_max_abs = mu.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let cov_mean_sq = mu.iter().map(|v| v * v).sum::<f64>() / nf;

    let grad_max_abs_bound = 1.0 / gap;
    let grad_sum_sq_bound = 0.5 * nf / gap;
    let cov_max_abs_bound = 1.0 / (gap * gap);
    let cov_mean_sq_bound = 2.0 / gap.powi(3) * (1.0 + 1.5 / (nf * gap));
    let all_hold = grad_trace.abs() <= 1e-12
        && within(grad_max_abs, grad_max_abs_bound)
        && within(grad_sum_sq, grad_sum_sq_bound)
        && within(cov_max_abs, cov_max_abs_bound)
        && within(cov_mean_sq, cov_mean_sq_bound);
    Ok(SpectralReport {
        sigma_max: sigma,
        grad_dim,
        grad_trace,
        grad_max_abs,
        grad_max_abs_bound,
        grad_sum_sq,
        grad_sum_sq_bound,
        cov_dim: p * (n + m),
        cov_max_abs,
        cov_max_abs_bound,
        cov_mean_sq,
        cov_mean_sq_bound,
        all_hold,
    })
}

// ---------------------------------------------------------------------------
// Finite-start bias of E Q_hat

const SERIES_TERM_TOL: f64 = 1e-16;
const SERIES_MAX_TERMS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloCheck {
    pub trials: usize,
    pub mean: f64,
    pub std_err: f64,
    /// `|mean - closed form| / std_err`.
    pub z_score: f64,
    pub within_3_sigma: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub n: usize,
    pub m: usize,
    pub expected_q_hat: f64,
    pub q0: f64,
    pub series_terms: usize,
    pub bias: f64,
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
    pub monte_carlo: Option<MonteCarloCheck>,
}

/// Options for the Monte Carlo cross-check of the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasMonteCarlo {
    pub trials: usize,
    pub seed: u64,
}

/// The expectation averages `x_i x_j` over all `n + m` states `x(-m), ..., x(n-1)`
/// of a path started at `x(-m) = w(-m)`; this window gives weights `(n+m-l)/(n+m)`.
pub fn verify_bias_bound(
    model: &SystemModel,
    eta: f64,
    n: usize,
    m: usize,
    i: usize,
    j: usize,
    mc: Option<BiasMonteCarlo>,
) -> Result<BiasReport> {
    let p = model.p();
    if n == 0 || i >= p || j >= p {
        return Err(Error::InvalidArgument("need n >= 1 and indices within 0..p".into()));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("eta = {eta} must be positive")));
    }
    let sigma = model.sigma_max(eta);
    if !(sigma < 1.0) {
        return Err(Error::NotContractive { sigma_max: sigma });
    }
    let step = model.step_matrix(eta);
    let window = n + m;
    let mut pw = Matrix::identity(p, p);
    let mut q0 = 0.0;
    let mut expected = 0.0;
    let mut terms = 0;
    for l in 0..SERIES_MAX_TERMS {
        let term = &pw * pw.transpose();
        q0 += eta * term[(i, j)];
        if l < window {
            expected += eta * (window - l) as f64 / window as f64 * term[(i, j)];
        }
        terms = l + 1;
        if linalg::max_abs(&term) < SERIES_TERM_TOL && l + 1 >= window {
            break;
        }
        pw = &step * &pw;
    }
    let bias = (expected - q0).abs();
    let bound = eta / (window as f64 * (1.0 - sigma).powi(2));

    let monte_carlo = match mc {
        None => None,
        Some(opts) => {
            if opts.trials < 2 {
                return Err(Error::InvalidArgument("Monte Carlo check needs at least two trials".into()));
            }
            let sd = eta.sqrt();
            let samples: Vec<f64> = (0..opts.trials as u64)
                .into_par_iter()
                .map(|t| {
                    let mut rng = stream_rng(derive_seed(opts.seed, &[t]), crate::rng::stream::TRAJECTORY);
                    let mut x = standard_normal_vector(&mut rng, p) * sd;
                    let mut acc = x[i] * x[j];
                    for _ in 1..window {
                        x = &step * &x + standard_normal_vector(&mut rng, p) * sd;
                        acc += x[i] * x[j];
                    }
                    acc / window as f64
                })
                .collect();
            let cnt = samples.len() as f64;
            let mean = samples.iter().sum::<f64>() / cnt;
            let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (cnt - 1.0);
            let std_err = (var / cnt).sqrt();
            let z_score = if std_err > 0.0 { (mean - expected).abs() / std_err } else { 0.0 };
            Some(MonteCarloCheck { trials: opts.trials, mean, std_err, z_score, within_3_sigma: z_score <= 3.0 })
        }
    };
    Ok(BiasReport {
        n,
        m,
        expected_q_hat: expected,
        q0,
        series_terms: terms,
        bias,
        bound,
        slack: bound - bias,
        holds: within(bias, bound),
        monte_carlo,
    })
}

// ---------------------------------------------------------------------------
// Small-step limit of D

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DLimitReport {
    pub etas: Vec<f64>,
    pub d: Vec<f64>,
    /// `-lambda_max(sym A0)`.
    pub rho_min: f64,
    /// `-lambda_min(sym A0)`.
    pub upper: f64,
    /// `2 eta_min |A0|_2^2`.
    pub tol_bracket: f64,
    pub final_in_bracket: bool,
    /// `|D(eta_l) - D(eta_{l+1})|` along the grid.
    pub increments: Vec<f64>,
    pub increments_non_increasing: bool,
}

pub fn verify_d_limit(model: &SystemModel, eta_grid: &[f64]) -> Result<DLimitReport> {
    if eta_grid.is_empty() || eta_grid.iter().any(|e| !(*e > 0.0)) || eta_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("eta grid must be positive and strictly decreasing".into()));
    }
    let a = model.matrix();
    let sym = linalg::sym_part(a);
    let rho_min = -linalg::lambda_max(&sym);
    let upper = -linalg::lambda_min(&sym);
    let norm = linalg::sigma_max(a);
    let eta_min = *eta_grid.last().unwrap_or(&0.0);
    let tol_bracket = 2.0 * eta_min * norm * norm;
    let d: Vec<f64> = eta_grid.iter().map(|&e| (1.0 - model.sigma_max(e)) / e).collect();
    let last = *d.last().unwrap_or(&f64::NAN);
    let final_in_bracket = last >= rho_min - tol_bracket && last <= upper + tol_bracket;
    let increments: Vec<f64> = d.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
    // rounding in 1 - sigma_max is amplified by 1/eta
    let noise = 64.0 * f64::EPSILON / eta_min;
    let increments_non_increasing = increments.windows(2).all(|w| w[1] <= w[0] + noise);
    Ok(DLimitReport {
        etas: eta_grid.to_vec(),
        d,
        rho_min,
        upper,
        tol_bracket,
        final_in_bracket,
        increments,
        increments_non_increasing,
    })
}

// ---------------------------------------------------------------------------
// Laplacian incoherence

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplacianIncoherenceReport {
    pub row: usize,
    pub max_degree: usize,
    pub m: f64,
    pub support: Vec<usize>,
    /// `|||Q0_{Sc,S} Q0_SS^-1|||_inf` with `Q0` from the Lyapunov solver.
    pub via_covariance: f64,
    /// `|||(A0_{Sc,Sc})^-1 A0_{Sc,S}|||_inf`.
    pub via_dynamics: f64,
    /// Largest first-passage generating function, by fixed-point iteration.
    pub via_hitting: f64,
    /// Random-walk estimate of the same generating function (mean, std error), when requested.
    pub hitting_walks: Option<(f64, f64)>,
    /// `max |Q0 + A0^-1 / 2|`.
    pub half_inverse_gap: f64,
    pub bound: f64,
    pub routes_agree: bool,
    pub holds: bool,
}

/// `walks > 0` adds a random-walk estimate of the hitting-time route.
pub fn verify_laplacian_incoherence(
    adjacency: &Matrix,
    m: f64,
    row: usize,
    walks: usize,
    seed: u64,
) -> Result<LaplacianIncoherenceReport> {
    let model = dynamics::make_laplacian_model(adjacency, m)?;
    let p = model.p();
    if row >= p {
        return Err(Error::InvalidArgument(format!("row {row} out of range for p = {p}")));
    }
    let degrees = graph::validate_adjacency(adjacency)?;
    let max_degree = degrees.iter().copied().max().unwrap_or(0);
    let a = model.matrix();
    let support = model.support(row).to_vec();
    let off = linalg::complement(p, &support);
    let q0 = dynamics::solve_lyapunov_continuous(&model, DEFAULT_TOL)?.q;
    let a_inv = linalg::inverse(a, "laplacian dynamics matrix")?;
    let half_inverse_gap = linalg::max_abs(&(&q0 + &a_inv * 0.5));
    let bound = max_degree as f64 / (max_degree as f64 + m);

    let (via_covariance, via_dynamics, via_hitting, hitting_walks) = if off.is_empty() {
        (0.0, 0.0, 0.0, None)
    } else {
        let cov = super::restricted(&q0, &support)?.incoherence;
        let a_cc = linalg::submatrix(a, &off, &off);
        let a_cs = linalg::submatrix(a, &off, &support);
        let dynm = linalg::inf_norm(&(linalg::inverse(&a_cc, "A0 off-support block")? * a_cs));
        let in_support: Vec<bool> = (0..p).map(|v| support.binary_search(&v).is_ok()).collect();
        let hit = hitting_generating(adjacency, &degrees, m, &in_support, &off);
        let walks =
            (walks > 0).then(|| hitting_walk_estimate(adjacency, &degrees, m, &in_support, &off, &hit, walks, seed));
        (cov, dynm, hit.iter().copied().fold(0.0, f64::max), walks)
    };
    let routes_agree = (via_covariance - via_dynamics).abs() <= 1e-10 && (via_dynamics - via_hitting).abs() <= 1e-10;
    Ok(LaplacianIncoherenceReport {
        row,
        max_degree,
        m,
        support,
        via_covariance,
        via_dynamics,
        via_hitting,
        hitting_walks,
        half_inverse_gap,
        bound,
        routes_agree,
        holds: within(via_covariance, bound) && within(via_dynamics, bound),
    })
}

/// `u_v = (1/(m + d_v)) sum_{w ~ v} (1 if w in S else u_w)` for `v` off the support.
fn hitting_generating(adj: &Matrix, deg: &[usize], m: f64, in_s: &[bool], off: &[usize]) -> Vec<f64> {
    let p = adj.nrows();
    let mut u = vec![0.0; p];
    for _ in 0..SERIES_MAX_TERMS {
        let mut change = 0.0_f64;
        let prev = u.clone();
        for &v in off {
            let mut acc = 0.0;
            for w in graph::neighbors(adj, v) {
                acc += if in_s[w] { 1.0 } else { prev[w] };
            }
            u[v] = acc / (m + deg[v] as f64);
            change = change.max((u[v] - prev[v]).abs());
        }
        if change < SERIES_TERM_TOL {
            break;
        }
    }
    u
}

/// Walks from the off-support vertex with the largest generating function; each step out of `v`
/// multiplies the weight by `d_v / (m + d_v)` until the support is hit.
#[allow(clippy::too_many_arguments)]
fn hitting_walk_estimate(
    adj: &Matrix,
    deg: &[usize],
    m: f64,
    in_s: &[bool],
    off: &[usize],
    exact: &[f64],
    walks: usize,
    seed: u64,
) -> (f64, f64) {
    let start = off.iter().copied().max_by(|&a, &b| exact[a].total_cmp(&exact[b])).unwrap_or(0);
    let nbrs: Vec<Vec<usize>> = (0..adj.nrows()).map(|v| graph::neighbors(adj, v)).collect();
    let mut rng = stream_rng(seed, crate::rng::stream::MODEL);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..walks {
        let mut v = start;
        let mut weight = 1.0;
        while !in_s[v] && weight > 1e-18 {
            weight *= deg[v] as f64 / (m + deg[v] as f64);
            v = nbrs[v][rng.random_range(0..nbrs[v].len())];
        }
        let w = if in_s[v] { weight } else { 0.0 };
        sum += w;
        sum_sq += w * w;
    }
    let cnt = walks as f64;
    let mean = sum / cnt;
    let var = (sum_sq / cnt - mean * mean).max(0.0);
    (mean, (var / cnt).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_covariance_has_zero_terms() {
        let q0 = Matrix::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.0]);
        let r = verify_decomposition(&q0, &q0, &[0]).unwrap();
        assert_eq!(r.t_norms, [0.0, 0.0, 0.0]);
        assert!(r.identity_residual < 1e-15 && r.precondition && r.bounds_hold);
    }

    #[test]
    fn scalar_spectral_bounds() {
        let m = SystemModel::from_matrix(-Matrix::identity(1, 1)).unwrap();
        let r = verify_spectral_lemmas(&m, 0.1, 8, 4, 0, 0, 0).unwrap();
        assert_eq!(r.grad_trace, 0.0);
        assert!((r.grad_max_abs_bound - 10.0).abs() < 1e-9);
        assert!(r.all_hold);
        assert!(matches!(verify_spectral_lemmas(&m, 0.1, 150, 60, 0, 0, 0), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn bias_vanishes_for_long_burn_in() {
        let m = SystemModel::from_matrix(-Matrix::identity(1, 1)).unwrap();
        let short = verify_bias_bound(&m, 0.1, 20, 0, 0, 0, None).unwrap();
        let long = verify_bias_bound(&m, 0.1, 20, 2000, 0, 0, None).unwrap();
        assert!(short.holds && long.holds);
        assert!(long.bias < short.bias / 10.0);
    }

    #[test]
    fn d_limit_for_negative_identity() {
        let m = SystemModel::from_matrix(-Matrix::identity(2, 2)).unwrap();
        let r = verify_d_limit(&m, &[0.5, 0.25, 0.125]).unwrap();
        assert!(r.d.iter().all(|d| (d - 1.0).abs() < 1e-12));
        assert!(r.final_in_bracket);
        assert!(verify_d_limit(&m, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn cycle_incoherence() {
        let adj = graph::cycle_graph(6);
        let r = verify_laplacian_incoherence(&adj, 2.0, 0, 2000, 1).unwrap();
        assert!(r.holds && r.routes_agree);
        assert!(r.via_covariance <= 0.5);
        let (mean, se) = r.hitting_walks.unwrap();
        assert!((mean - r.via_hitting).abs() <= 4.0 * se + 1e-12);
    }
}
