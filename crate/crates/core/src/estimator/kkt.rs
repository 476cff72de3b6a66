use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Vector};

use super::lasso::RowEstimate;
use super::loss::GradientHessian;

/// Both sides of the off-support dual inequality and the sup-norm error condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktDualReport {
    /// `|z_{Sc}|_inf` measured from the solver.
    pub dual_off_support: f64,
    /// `|||Q_hat_{Sc,S} Q_hat_{SS}^-1|||_inf`.
    pub empirical_incoherence: f64,
    /// `incoherence (1 + |G_S|_inf / lambda) + |G_Sc|_inf / lambda`.
    pub dual_bound: f64,
    pub dual_slack: f64,
    /// `lambda_min(Q_hat_SS)`.
    pub q_hat_ss_min_eig: f64,
    /// `A_min lambda_min(Q_hat_SS) / 2k - lambda - |G_S|_inf`; the error bound applies when nonnegative.
    pub gradient_condition_slack: f64,
    /// `|A0_r - A_hat_r|_inf`.
    pub sup_error: f64,
    /// `A_min / 2 - sup_error`.
    pub sup_slack: f64,
}

impl KktDualReport {
    pub fn dual_holds(&self, tol: f64) -> bool {
        self.dual_slack >= -tol
    }

    /// The sup-norm conclusion holds whenever its premise does. Meaningful only when
    /// `supp(A_hat_r)` lies inside the true support.
    pub fn sup_implication_holds(&self, tol: f64) -> bool {
        self.gradient_condition_slack < 0.0 || self.sup_slack >= -tol
    }
}

/// Audits a solved row against the true row `truth` (support and `A_min` are read from it).
pub fn kkt_dual_check(estimate: &RowEstimate, gh: &GradientHessian, truth: &Vector) -> Result<KktDualReport> {
    let p = gh.q_hat.nrows();
    if truth.len() != p || estimate.a_hat.len() != p {
        return Err(Error::Dimension { expected: p, got: truth.len() });
    }
    let lambda = estimate.lambda;
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument("dual bound divides by lambda; need lambda > 0".into()));
    }
    let support: Vec<usize> = (0..p).filter(|&j| truth[j] != 0.0).collect();
    let off = linalg::complement(p, &support);
    let g = gh.g_hat()?;
    let k = support.len();
    let a_min = support.iter().map(|&j| truth[j].abs()).fold(f64::INFINITY, f64::min);

    let q_ss = linalg::submatrix(&gh.q_hat, &support, &support);
    let q_ss_min = if k == 0 { f64::INFINITY } else { linalg::lambda_min(&q_ss) };
    if k > 0 && !(q_ss_min > 0.0) {
        return Err(Error::Singular("Q_hat restricted to the true support"));
    }
    let incoherence = if k == 0 || off.is_empty() {
        0.0
    } else {
        let inv = linalg::inverse(&q_ss, "Q_hat restricted to the true support")?;
        linalg::inf_norm(&(linalg::submatrix(&gh.q_hat, &off, &support) * inv))
    };
    let g_s = linalg::vec_max_abs(&linalg::subvector(g, &support));
    let g_off = linalg::vec_max_abs(&linalg::subvector(g, &off));
    let dual_off = off.iter().map(|&j| estimate.dual[j].abs()).fold(0.0, f64::max);
    let dual_bound = incoherence * (1.0 + g_s / lambda) + g_off / lambda;

    let sup_error = (0..p).map(|j| (truth[j] - estimate.a_hat[j]).abs()).fold(0.0, f64::max);
    let (gradient_condition_slack, sup_slack) = if k == 0 {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (a_min * q_ss_min / (2.0 * k as f64) - lambda - g_s, a_min / 2.0 - sup_error)
    };
    Ok(KktDualReport {
        dual_off_support: dual_off,
        empirical_incoherence: incoherence,
        dual_bound,
        dual_slack: dual_bound - dual_off,
        q_hat_ss_min_eig: q_ss_min,
        gradient_condition_slack,
        sup_error,
        sup_slack,
    })
}
