use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, lyapunov::DEFAULT_TOL, SystemModel};
use crate::error::{Error, Result};
use crate::estimator::lasso::estimate_from_quadratic;
use crate::estimator::{GradientHessian, GradientSource, LassoOptions, LossMode, Moments};
use crate::linalg::{self, Matrix};
use crate::rng::{derive_seed, stream_rng};

/// Ground-truth constants entering the sufficient conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop3Inputs {
    pub support: Vec<usize>,
    pub lambda: f64,
    pub a_min: f64,
    pub c_min: f64,
    pub alpha: f64,
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    pub holds: bool,
}

impl Inequality {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, slack: rhs - lhs, holds: lhs <= rhs }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop3Report {
    /// `|G|_inf <= lambda alpha / 3`.
    pub gradient_all: Inequality,
    /// `|G_S|_inf <= A_min C_min / 4k - lambda`.
    pub gradient_support: Inequality,
    /// `|||Q_hat_{Sc,S} - Q0_{Sc,S}|||_inf <= alpha C_min / (12 sqrt k)`.
    pub hessian_off_support: Inequality,
    /// `|||Q_hat_{S,S} - Q0_{S,S}|||_inf <= alpha C_min / (12 sqrt k)`.
    pub hessian_support: Inequality,
    pub all_hold: bool,
}

/// Evaluates the four sufficient conditions; needs `G_hat`, so `gh` must carry ground truth.
pub fn check_prop3(gh: &GradientHessian, q0: &Matrix, inputs: &Prop3Inputs) -> Result<Prop3Report> {
    let p = gh.q_hat.nrows();
    if q0.nrows() != p || q0.ncols() != p {
        return Err(Error::Dimension { expected: p, got: q0.nrows() });
    }
    if inputs.support.iter().any(|&j| j >= p) {
        return Err(Error::InvalidArgument("support index out of range".into()));
    }
    let g = gh.g_hat()?;
    let s = &inputs.support;
    let off = linalg::complement(p, s);
    let diff = &gh.q_hat - q0;
    let q_bound = inputs.alpha * inputs.c_min / (12.0 * inputs.k.sqrt());

    let gradient_all = Inequality::new(linalg::vec_max_abs(g), inputs.lambda * inputs.alpha / 3.0);
    let gradient_support = Inequality::new(
        linalg::vec_max_abs(&linalg::subvector(g, s)),
        inputs.a_min * inputs.c_min / (4.0 * inputs.k) - inputs.lambda,
    );
    let hessian_off_support = Inequality::new(linalg::inf_norm(&linalg::submatrix(&diff, &off, s)), q_bound);
    let hessian_support = Inequality::new(linalg::inf_norm(&linalg::submatrix(&diff, s, s)), q_bound);
    let all_hold = gradient_all.holds && gradient_support.holds && hessian_off_support.holds && hessian_support.holds;
    Ok(Prop3Report { gradient_all, gradient_support, hessian_off_support, hessian_support, all_hold })
}

/// Settings of the implication audit: qualifying instances imply recovery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop3AuditOptions {
    /// Instances on which all four conditions must hold.
    pub qualifying: usize,
    /// Give up after this many drawn instances.
    pub max_attempts: usize,
    pub n: usize,
    pub eta: f64,
    pub seed: u64,
}

impl Default for Prop3AuditOptions {
    fn default() -> Self {
        Self { qualifying: 10_000, max_attempts: 40_000, n: 150_000, eta: 0.1, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop3Counterexample {
    pub seed: u64,
    pub lambda: f64,
    pub truth: Vec<i8>,
    pub estimate: Vec<i8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop3Audit {
    pub attempted: usize,
    pub qualifying: usize,
    pub recovered: usize,
    /// Smallest slack of any condition over the qualifying instances.
    pub min_slack: f64,
    pub counterexamples: Vec<Prop3Counterexample>,
}

impl Prop3Audit {
    pub fn passed(&self, target: usize) -> bool {
        self.qualifying >= target && self.counterexamples.is_empty()
    }
}

/// Row 0 of a `4 x 4` model: diagonal `-d`, one coupling of magnitude `d/2`
/// with random sign. The other rows are diagonally dominant with at most one
/// weak coupling each, which keeps `alpha` near one.
pub fn prop3_instance(seed: u64) -> Result<SystemModel> {
    const P: usize = 4;
    let mut rng = stream_rng(seed, crate::rng::stream::MODEL);
    let mut a = Matrix::zeros(P, P);
    for i in 0..P {
        let d = rng.random_range(4.0..6.0);
        a[(i, i)] = -d;
        let j = (i + rng.random_range(1..P)) % P;
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        if i == 0 {
            a[(i, j)] = sign * d / 2.0;
        } else if rng.random::<bool>() {
            a[(i, j)] = sign * rng.random_range(0.2..0.8);
        }
    }
    SystemModel::from_matrix(a)
}

enum Outcome {
    Skipped,
    Qualified { slack: f64, counterexample: Option<Prop3Counterexample> },
}

fn audit_one(seed: u64, opts: &Prop3AuditOptions) -> Result<Outcome> {
    const ROW: usize = 0;
    let model = prop3_instance(seed)?;
    if !(model.sigma_max(opts.eta) < 1.0) {
        return Ok(Outcome::Skipped);
    }
    let q0 = dynamics::solve_lyapunov_discrete(&model, opts.eta, DEFAULT_TOL)?.q;
    let support = model.support(ROW).to_vec();
    let r = super::restricted(&q0, &support)?;
    let a_min = model.a_min(ROW).unwrap_or(0.0);
    if !(r.alpha > 0.0 && r.c_min > 0.0) {
        return Ok(Outcome::Skipped);
    }
    let k = support.len() as f64;
    let lambda = a_min * r.c_min / (8.0 * k);
    let traj = dynamics::simulate_discrete(&model, opts.eta, opts.n, seed)?;
    let gh = Moments::compute(&traj, LossMode::Discrete)?.for_row(ROW, GradientSource::GroundTruth(&model))?;
    let inputs = Prop3Inputs { support, lambda, a_min, c_min: r.c_min, alpha: r.alpha, k };
    let rep = check_prop3(&gh, &q0, &inputs)?;
    if !rep.all_hold {
        return Ok(Outcome::Skipped);
    }
    let slack = [rep.gradient_all, rep.gradient_support, rep.hessian_off_support, rep.hessian_support]
        .iter()
        .map(|i| i.slack)
        .fold(f64::INFINITY, f64::min);
    let opts_lasso = LassoOptions { tol: 1e-12, ..Default::default() };
    let est = estimate_from_quadratic(ROW, &gh.q_hat, &gh.b, lambda, None, &opts_lasso)?;
    let truth = model.signed_support(ROW);
    let counterexample = (est.signed_support != truth).then(|| Prop3Counterexample {
        seed,
        lambda,
        truth,
        estimate: est.signed_support.clone(),
    });
    Ok(Outcome::Qualified { slack, counterexample })
}

/// Draws seeded instances in batches until `qualifying` of them satisfy all
/// four conditions with `lambda = A_min C_min / 8k`, and records every
/// qualifying instance whose signed support is not recovered.
pub fn audit_prop3(opts: &Prop3AuditOptions) -> Result<Prop3Audit> {
    let mut audit =
        Prop3Audit { attempted: 0, qualifying: 0, recovered: 0, min_slack: f64::INFINITY, counterexamples: Vec::new() };
    let batch = 256;
    while audit.qualifying < opts.qualifying && audit.attempted < opts.max_attempts {
        let start = audit.attempted;
        let end = (start + batch).min(opts.max_attempts);
        let outcomes: Vec<Outcome> = (start..end)
            .into_par_iter()
            .map(|i| audit_one(derive_seed(opts.seed, &[i as u64]), opts))
            .collect::<Result<_>>()?;
        for o in outcomes {
            audit.attempted += 1;
            if audit.qualifying >= opts.qualifying {
                break;
            }
            if let Outcome::Qualified { slack, counterexample } = o {
                audit.qualifying += 1;
                audit.min_slack = audit.min_slack.min(slack);
                match counterexample {
                    Some(c) => audit.counterexamples.push(c),
                    None => audit.recovered += 1,
                }
            }
        }
    }
    Ok(audit)
}
