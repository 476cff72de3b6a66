//! Hypothesis quantities, sample-complexity bounds, sufficient-condition
//! checks and numerical audits of the supporting lemmas.
//!
//! Hypothesis failures (`alpha <= 0`, `C_min <= 0`, `D <= 0`) are reported as
//! data; bounds that need them come back as `None`.

mod bounds;
pub mod lemmas;
mod prop3;
mod report;
pub mod tails;

pub use bounds::{horizon_bound_continuous, horizon_bound_discrete, horizon_bound_laplacian};
pub use lemmas::{
    verify_bias_bound, verify_d_limit, verify_decomposition, verify_laplacian_incoherence, verify_spectral_lemmas,
    BiasMonteCarlo, BiasReport, DLimitReport, DecompositionReport, LaplacianIncoherenceReport, SpectralReport,
};
pub use prop3::{
    audit_prop3, check_prop3, prop3_instance, Prop3Audit, Prop3AuditOptions, Prop3Counterexample, Prop3Inputs,
    Prop3Report,
};
pub use report::{
    compute_condition_report, ConditionReport, DiscreteConditions, LaplacianConditions, TheoremBounds,
    DEFAULT_CONFIDENCE,
};
pub use tails::{empirical_tail_covariance, empirical_tail_gradient, empirical_tail_matrix, TailOptions, TailReport};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{self, Matrix};

/// Restricted eigenvalue and incoherence of a covariance for a support set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Restricted {
    /// `lambda_min(Q_SS)`.
    pub c_min: f64,
    /// `|||Q_{Sc,S} Q_SS^-1|||_inf`.
    pub incoherence: f64,
    /// `1 - incoherence`.
    pub alpha: f64,
}

/// Empty supports give `C_min = +inf` and `alpha = 1`; a singular block gives `alpha = -inf`.
pub fn restricted(q: &Matrix, support: &[usize]) -> Result<Restricted> {
    let p = q.nrows();
    if support.is_empty() {
        return Ok(Restricted { c_min: f64::INFINITY, incoherence: 0.0, alpha: 1.0 });
    }
    let q_ss = linalg::submatrix(q, support, support);
    let c_min = linalg::lambda_min(&q_ss);
    let off = linalg::complement(p, support);
    let incoherence = if off.is_empty() {
        0.0
    } else {
        match linalg::inverse(&q_ss, "Q restricted to the support") {
            Ok(inv) => linalg::inf_norm(&(linalg::submatrix(q, &off, support) * inv)),
            Err(_) => f64::INFINITY,
        }
    };
    Ok(Restricted { c_min, incoherence, alpha: 1.0 - incoherence })
}
