use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions;
use crate::dynamics::{self, Ensemble, SystemModel, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{self, Vector};

use super::lasso::{estimate_from_quadratic, LassoOptions, RowEstimate};
use super::loss::{GradientSource, LossMode, Moments};

/// Regularization prescribed by the recovery theorems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "theorem")]
pub enum LambdaRule {
    /// `sqrt(36 log(4p/delta) / (T alpha^2 rho_min))`.
    Continuous { p: usize, delta: f64, horizon: f64, alpha: f64, rho_min: f64 },
    /// `sqrt(36 (k+m)^2 log(4p/delta) / (T m^3))`.
    Laplacian { p: usize, delta: f64, horizon: f64, k: f64, m: f64 },
    /// `sqrt(36 log(4p/delta) / (D alpha^2 n eta))`.
    Discrete { p: usize, delta: f64, n_eta: f64, alpha: f64, d: f64 },
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} = {v} must be strictly positive")))
    }
}

fn confidence_log(p: usize, delta: f64) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must lie in (0, 1)")));
    }
    Ok((4.0 * p as f64 / delta).ln())
}

pub fn theorem_lambda(rule: &LambdaRule) -> Result<f64> {
    match *rule {
        LambdaRule::Continuous { p, delta, horizon, alpha, rho_min } => {
            let log = confidence_log(p, delta)?;
            require_positive("T", horizon)?;
            require_positive("alpha", alpha)?;
            require_positive("rho_min", rho_min)?;
            Ok((36.0 * log / (horizon * alpha * alpha * rho_min)).sqrt())
        }
        LambdaRule::Laplacian { p, delta, horizon, k, m } => {
            let log = confidence_log(p, delta)?;
            require_positive("T", horizon)?;
            require_positive("k", k)?;
            require_positive("m", m)?;
            Ok((36.0 * (k + m).powi(2) * log / (horizon * m.powi(3))).sqrt())
        }
        LambdaRule::Discrete { p, delta, n_eta, alpha, d } => {
            let log = confidence_log(p, delta)?;
            require_positive("n eta", n_eta)?;
            require_positive("alpha", alpha)?;
            require_positive("D", d)?;
            Ok((36.0 * log / (d * alpha * alpha * n_eta)).sqrt())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    Continuous,
    Laplacian,
    Discrete,
}

/// Candidate regularization values for the oracle strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaGrid {
    /// `points` log-spaced values spanning `[lo, hi] * |grad L(0)|_inf`.
    Relative {
        points: usize,
        lo: f64,
        hi: f64,
    },
    Explicit(Vec<f64>),
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::Relative { points: 50, lo: 1e-3, hi: 1.0 }
    }
}

impl LambdaGrid {
    /// Grid values in decreasing order for a problem with `|grad L(0)|_inf = scale`.
    pub fn values(&self, scale: f64) -> Vec<f64> {
        let mut v = match self {
            LambdaGrid::Relative { points, lo, hi } => {
                let points = (*points).max(1);
                if scale <= 0.0 {
                    return vec![0.0];
                }
                if points == 1 {
                    vec![hi * scale]
                } else {
                    let (llo, lhi) = (lo.ln(), hi.ln());
                    (0..points).map(|i| scale * (llo + (lhi - llo) * i as f64 / (points - 1) as f64).exp()).collect()
                }
            }
            LambdaGrid::Explicit(values) => values.clone(),
        };
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaStrategy {
    Fixed(f64),
    Theorem {
        which: Theorem,
        delta: f64,
    },
    /// Succeeds if any grid value recovers the true signed support (needs ground truth).
    OracleGrid(LambdaGrid),
}

/// Whether recovery compares signs or only the zero pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportMatch {
    #[default]
    Signed,
    Unsigned,
}

impl SupportMatch {
    pub fn matches(&self, estimated: &[i8], truth: &[i8]) -> bool {
        match self {
            SupportMatch::Signed => estimated == truth,
            SupportMatch::Unsigned => estimated.iter().zip(truth).all(|(a, b)| (*a == 0) == (*b == 0)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowOutcome {
    pub estimate: RowEstimate,
    /// Present when ground truth was supplied.
    pub success: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkEstimate {
    pub rows: Vec<RowOutcome>,
}

impl NetworkEstimate {
    /// Every row recovered (only meaningful with ground truth).
    pub fn full_success(&self) -> Option<bool> {
        self.rows.iter().map(|r| r.success).collect::<Option<Vec<bool>>>().map(|v| v.into_iter().all(|s| s))
    }

    pub fn estimates(&self) -> impl Iterator<Item = &RowEstimate> {
        self.rows.iter().map(|r| &r.estimate)
    }
}

/// Per-trajectory settings for [`recover_row`] and [`recover_network`].
#[derive(Debug, Clone, Copy)]
pub struct RecoveryContext<'a> {
    pub mode: LossMode,
    pub truth: Option<&'a SystemModel>,
    pub support_match: SupportMatch,
    pub lasso: LassoOptions,
}

impl<'a> RecoveryContext<'a> {
    pub fn new(mode: LossMode, truth: Option<&'a SystemModel>) -> Self {
        Self { mode, truth, support_match: SupportMatch::Signed, lasso: LassoOptions::default() }
    }
}

fn hamming(a: &[i8], b: &[i8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Theorem-prescribed lambda for one row, computed from the true model.
pub fn theorem_lambda_for_row(
    model: &SystemModel,
    row: usize,
    eta: f64,
    horizon: f64,
    which: Theorem,
    delta: f64,
) -> Result<f64> {
    let p = model.p();
    let rule = match which {
        Theorem::Continuous => {
            let q0 = dynamics::solve_lyapunov_continuous(model, dynamics::lyapunov::DEFAULT_TOL)?;
            let alpha = conditions::restricted(&q0.q, model.support(row))?.alpha;
            LambdaRule::Continuous { p, delta, horizon, alpha, rho_min: model.rho_min() }
        }
        Theorem::Discrete => {
            let q0 = dynamics::solve_lyapunov_discrete(model, eta, dynamics::lyapunov::DEFAULT_TOL)?;
            let alpha = conditions::restricted(&q0.q, model.support(row))?.alpha;
            let d = (1.0 - model.sigma_max(eta)) / eta;
            LambdaRule::Discrete { p, delta, n_eta: horizon, alpha, d }
        }
        Theorem::Laplacian => match model.ensemble() {
            Ensemble::Laplacian { m, max_degree } => {
                LambdaRule::Laplacian { p, delta, horizon, k: max_degree as f64, m }
            }
            _ => return Err(Error::InvalidArgument("laplacian lambda rule needs a laplacian model".into())),
        },
    };
    theorem_lambda(&rule)
}

/// Solves one row with the given strategy using precomputed moments.
pub fn recover_row(
    moments: &Moments,
    traj: &Trajectory,
    row: usize,
    strategy: &LambdaStrategy,
    ctx: &RecoveryContext<'_>,
) -> Result<RowOutcome> {
    let gh = moments.for_row(row, GradientSource::ModelFree)?;
    let truth_support = ctx.truth.map(|m| m.signed_support(row));
    let judge = |est: &RowEstimate| truth_support.as_ref().map(|t| ctx.support_match.matches(&est.signed_support, t));
    match strategy {
        LambdaStrategy::Fixed(lambda) => {
            let estimate = estimate_from_quadratic(row, &gh.q_hat, &gh.b, *lambda, None, &ctx.lasso)?;
            Ok(RowOutcome { success: judge(&estimate), estimate })
        }
        LambdaStrategy::Theorem { which, delta } => {
            let model = ctx.truth.ok_or(Error::NeedsGroundTruth("theorem lambda is computed from the true model"))?;
            let lambda = theorem_lambda_for_row(model, row, traj.eta(), traj.horizon(), *which, *delta)?;
            let estimate = estimate_from_quadratic(row, &gh.q_hat, &gh.b, lambda, None, &ctx.lasso)?;
            Ok(RowOutcome { success: judge(&estimate), estimate })
        }
        LambdaStrategy::OracleGrid(grid) => {
            let truth =
                truth_support.ok_or(Error::NeedsGroundTruth("oracle-grid compares against the true support"))?;
            let scale = linalg::vec_max_abs(&gh.b);
            let mut warm: Option<Vector> = None;
            let mut best: Option<(usize, RowEstimate)> = None;
            for lambda in grid.values(scale) {
                let est = estimate_from_quadratic(row, &gh.q_hat, &gh.b, lambda, warm.as_ref(), &ctx.lasso)?;
                if ctx.support_match.matches(&est.signed_support, &truth) {
                    return Ok(RowOutcome { estimate: est, success: Some(true) });
                }
                let dist = hamming(&est.signed_support, &truth);
                warm = Some(est.a_hat_vector());
                if best.as_ref().is_none_or(|(d, _)| dist < *d) {
                    best = Some((dist, est));
                }
            }
            let (_, estimate) = best.ok_or(Error::InvalidArgument("empty lambda grid".into()))?;
            Ok(RowOutcome { estimate, success: Some(false) })
        }
    }
}

/// Estimates every row independently (rows run in parallel).
pub fn recover_network(
    traj: &Trajectory,
    strategy: &LambdaStrategy,
    ctx: &RecoveryContext<'_>,
) -> Result<NetworkEstimate> {
    if let Some(m) = ctx.truth {
        if m.p() != traj.p() {
            return Err(Error::Dimension { expected: traj.p(), got: m.p() });
        }
    }
    let moments = Moments::compute(traj, ctx.mode)?;
    let rows = (0..traj.p())
        .into_par_iter()
        .map(|r| recover_row(&moments, traj, r, strategy, ctx))
        .collect::<Result<Vec<_>>>()?;
    Ok(NetworkEstimate { rows })
}
