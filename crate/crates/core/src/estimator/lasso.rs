//! Cyclic coordinate descent for `min_a 1/2 a^T Q a - b^T a + lambda |a|_1`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{sign, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

use super::loss::{gradient_hessian, GradientSource, LossMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoOptions {
    /// Target for the KKT residual `|grad L(a) + lambda z|_inf`.
    pub tol: f64,
    /// Maximum number of full coordinate sweeps.
    pub max_iter: usize,
    /// Record the objective after every sweep.
    pub trace_objective: bool,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 100_000, trace_objective: false }
    }
}

/// One row of the network estimation problem.
#[derive(Debug, Clone, Copy)]
pub struct RowProblem<'a> {
    pub trajectory: &'a Trajectory,
    pub row: usize,
    pub lambda: f64,
    pub mode: LossMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowEstimate {
    pub row: usize,
    pub a_hat: Vec<f64>,
    pub signed_support: Vec<i8>,
    pub lambda: f64,
    /// Subgradient `z` of `|.|_1` at `a_hat` certifying optimality.
    pub dual: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_trace: Vec<f64>,
}

impl RowEstimate {
    pub fn a_hat_vector(&self) -> Vector {
        Vector::from_column_slice(&self.a_hat)
    }

    /// Support as a string over `{+, -, 0}`.
    pub fn support_string(&self) -> String {
        signed_support_string(&self.signed_support)
    }
}

pub fn signed_support_string(s: &[i8]) -> String {
    s.iter()
        .map(|&v| match v {
            1 => '+',
            -1 => '-',
            _ => '0',
        })
        .collect()
}

pub fn signed_support_of(a: &[f64]) -> Vec<i8> {
    a.iter().map(|&x| sign(x)).collect()
}

fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

pub fn objective(q: &Matrix, b: &Vector, lambda: f64, a: &Vector) -> f64 {
    0.5 * a.dot(&(q * a)) - b.dot(a) + lambda * a.lp_norm(1)
}

/// Dual vector and KKT residual at `a` for gradient `g = Q a - b`.
///
/// On the support `z_j = sign(a_j)`; elsewhere `z_j = clamp(-g_j / lambda, -1, 1)`.
pub fn kkt_certificate(g: &Vector, a: &Vector, lambda: f64) -> (Vector, f64) {
    let mut z = Vector::zeros(a.len());
    let mut resid = 0.0_f64;
    for j in 0..a.len() {
        z[j] = if a[j] != 0.0 {
            a[j].signum()
        } else if lambda > 0.0 {
            (-g[j] / lambda).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        resid = resid.max((g[j] + lambda * z[j]).abs());
    }
    (z, resid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSolution {
    pub a: Vector,
    pub dual: Vector,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

/// Solves the quadratic lasso with warm start `start`.
pub fn solve_quadratic(
    q: &Matrix,
    b: &Vector,
    lambda: f64,
    start: Option<&Vector>,
    opts: &LassoOptions,
) -> Result<QuadraticSolution> {
    let p = b.len();
    if q.nrows() != p || q.ncols() != p {
        return Err(Error::Dimension { expected: p, got: q.nrows() });
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be a nonnegative number")));
    }
    if q.iter().chain(b.iter()).any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite data in lasso problem".into()));
    }
    let mut a = match start {
        Some(s) if s.len() == p => s.clone(),
        Some(s) => return Err(Error::Dimension { expected: p, got: s.len() }),
        None => Vector::zeros(p),
    };
    let mut g = q * &a - b;
    let mut trace = Vec::new();
    if opts.trace_objective {
        trace.push(objective(q, b, lambda, &a));
    }
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let (_, resid) = kkt_certificate(&g, &a, lambda);
        if resid <= opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;
        let mut max_change = 0.0_f64;
        for j in 0..p {
            let qjj = q[(j, j)];
            let old = a[j];
            let new = if qjj > 0.0 { soft_threshold(qjj * old - g[j], lambda) / qjj } else { 0.0 };
            let change = new - old;
            if change != 0.0 {
                a[j] = new;
                g.axpy(change, &q.column(j), 1.0);
                max_change = max_change.max(change.abs());
            }
        }
        // refresh the incrementally updated gradient to avoid drift
        g = q * &a - b;
        if opts.trace_objective {
            trace.push(objective(q, b, lambda, &a));
        }
        if max_change == 0.0 {
            let (_, resid) = kkt_certificate(&g, &a, lambda);
            converged = resid <= opts.tol;
            break;
        }
    }
    if let Some((a_pol, g_pol)) = polish(q, b, lambda, &a, &g) {
        converged = converged || kkt_certificate(&g_pol, &a_pol, lambda).1 <= opts.tol;
        a = a_pol;
        g = g_pol;
        if opts.trace_objective {
            trace.push(objective(q, b, lambda, &a));
        }
    }
    let (dual, kkt_residual) = kkt_certificate(&g, &a, lambda);
    Ok(QuadraticSolution { a, dual, kkt_residual, iterations, converged, objective_trace: trace })
}

/// Exact re-solve on the active set with its signs fixed.
///
/// Coordinate descent leaves an error of order `tol / lambda_min(Q_SS)`, which is large
/// on ill-conditioned data. Accepted only if signs survive, the KKT residual drops and
/// the objective does not rise.
fn polish(q: &Matrix, b: &Vector, lambda: f64, a: &Vector, g: &Vector) -> Option<(Vector, Vector)> {
    let active: Vec<usize> = (0..a.len()).filter(|&j| a[j] != 0.0).collect();
    if active.is_empty() {
        return None;
    }
    let q_ss = crate::linalg::submatrix(q, &active, &active);
    let rhs = Vector::from_iterator(active.len(), active.iter().map(|&j| b[j] - lambda * a[j].signum()));
    let a_s = q_ss.cholesky()?.solve(&rhs);
    // without the l1 term the signs carry no constraint
    let flipped = |j: usize, v: f64| lambda > 0.0 && (v.signum() != a[j].signum() || v == 0.0);
    if active.iter().zip(a_s.iter()).any(|(&j, &v)| !v.is_finite() || flipped(j, v)) {
        return None;
    }
    let mut cand = Vector::zeros(a.len());
    for (&j, &v) in active.iter().zip(a_s.iter()) {
        cand[j] = v;
    }
    let g_cand = q * &cand - b;
    let old_obj = objective(q, b, lambda, a);
    let better = kkt_certificate(&g_cand, &cand, lambda).1 < kkt_certificate(g, a, lambda).1
        && objective(q, b, lambda, &cand) <= old_obj + 1e-15 * old_obj.abs().max(1.0);
    better.then_some((cand, g_cand))
}

pub(crate) fn estimate_from_quadratic(
    row: usize,
    q: &Matrix,
    b: &Vector,
    lambda: f64,
    start: Option<&Vector>,
    opts: &LassoOptions,
) -> Result<RowEstimate> {
    let sol = solve_quadratic(q, b, lambda, start, opts)?;
    let a_hat: Vec<f64> = sol.a.iter().copied().collect();
    Ok(RowEstimate {
        row,
        signed_support: signed_support_of(&a_hat),
        a_hat,
        lambda,
        dual: sol.dual.iter().copied().collect(),
        kkt_residual: sol.kkt_residual,
        iterations: sol.iterations,
        converged: sol.converged,
        objective_trace: sol.objective_trace,
    })
}

/// Row-wise l1-regularized least squares on a trajectory.
pub fn lasso_solve(problem: &RowProblem<'_>, opts: &LassoOptions) -> Result<RowEstimate> {
    let gh = gradient_hessian(problem.trajectory, problem.row, problem.mode, GradientSource::ModelFree)?;
    estimate_from_quadratic(problem.row, &gh.q_hat, &gh.b, problem.lambda, None, opts)
}
