//! Independent oracles shared by the integration tests. Nothing here calls
//! the estimator or solver code it is used to check.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use sdenet::dynamics::Trajectory;

/// `Q_hat = (1/n) sum x(t) x(t)^T` and `b = (1/(n eta)) sum x(t) (x_r(t+1) - x_r(t))`, by explicit loops.
pub fn direct_moments(traj: &Trajectory, row: usize) -> (DMatrix<f64>, DVector<f64>) {
    let x = traj.samples();
    let (p, n) = (traj.p(), traj.n());
    let mut q = DMatrix::zeros(p, p);
    let mut b = DVector::zeros(p);
    for t in 0..n {
        let dx = x[(row, t + 1)] - x[(row, t)];
        for i in 0..p {
            b[i] += x[(i, t)] * dx;
            for j in 0..p {
                q[(i, j)] += x[(i, t)] * x[(j, t)];
            }
        }
    }
    (q / n as f64, b / (n as f64 * traj.eta()))
}

/// `1/2 a^T Q a - b^T a + lambda |a|_1`.
pub fn lasso_objective(q: &DMatrix<f64>, b: &DVector<f64>, lambda: f64, a: &DVector<f64>) -> f64 {
    0.5 * a.dot(&(q * a)) - b.dot(a) + lambda * a.iter().map(|v| v.abs()).sum::<f64>()
}

/// Exhaustive search over the `3^p` sign patterns. For each pattern the
/// sign-fixed problem is a plain quadratic on the support with closed-form
/// minimizer `Q_SS^{-1}(b_S - lambda s_S)`; it is admissible only if the refit
/// keeps every sign. The admissible refit of least objective is the lasso
/// solution when `Q` is positive definite.
pub fn sign_pattern_oracle(q: &DMatrix<f64>, b: &DVector<f64>, lambda: f64) -> (Vec<i8>, DVector<f64>) {
    let p = b.len();
    let mut best: Option<(f64, Vec<i8>, DVector<f64>)> = None;
    for code in 0..3usize.pow(p as u32) {
        let mut c = code;
        let signs: Vec<i8> = (0..p)
            .map(|_| {
                let s = (c % 3) as i8 - 1;
                c /= 3;
                s
            })
            .collect();
        let support: Vec<usize> = (0..p).filter(|&j| signs[j] != 0).collect();
        let mut a = DVector::zeros(p);
        if !support.is_empty() {
            let k = support.len();
            let q_ss = DMatrix::from_fn(k, k, |i, j| q[(support[i], support[j])]);
            let rhs = DVector::from_fn(k, |i, _| b[support[i]] - lambda * signs[support[i]] as f64);
            let Some(sol) = q_ss.lu().solve(&rhs) else { continue };
            if support.iter().zip(sol.iter()).any(|(&j, &v)| v * signs[j] as f64 <= 0.0) {
                continue;
            }
            for (&j, &v) in support.iter().zip(sol.iter()) {
                a[j] = v;
            }
        }
        let f = lasso_objective(q, b, lambda, &a);
        if best.as_ref().is_none_or(|(bf, _, _)| f < *bf) {
            best = Some((f, signs, a));
        }
    }
    let (_, s, a) = best.expect("the zero pattern is always admissible");
    (s, a)
}

/// `A Q + Q A^T + eta A Q A^T + I`, max-abs, written out entrywise.
pub fn lyapunov_residual(a: &DMatrix<f64>, q: &DMatrix<f64>, eta: f64) -> f64 {
    let p = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..p {
        for j in 0..p {
            let mut v = if i == j { 1.0 } else { 0.0 };
            for l in 0..p {
                v += a[(i, l)] * q[(l, j)] + q[(i, l)] * a[(j, l)];
                if eta != 0.0 {
                    for m in 0..p {
                        v += eta * a[(i, l)] * q[(l, m)] * a[(j, m)];
                    }
                }
            }
            worst = worst.max(v.abs());
        }
    }
    worst
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).iter().fold(0.0, |m, v| m.max(v.abs()))
}
