//! The appendix audit suite behind `verify-appendix`.
//!
//! Each audit runs one verifier from [`crate::conditions`] over a seeded batch
//! of small instances and counts violations. The suite passes only when every
//! audit has zero violations and checked at least one instance.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::{
    verify_bias_bound, verify_d_limit, verify_decomposition, verify_laplacian_incoherence, verify_spectral_lemmas,
    BiasMonteCarlo,
};
use crate::dynamics::{self, graph, lyapunov::DEFAULT_TOL, SystemModel};
use crate::error::Result;
use crate::linalg::{self, Matrix};
use crate::rng::{derive_seed, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixOptions {
    pub seed: u64,
    /// Perturbations satisfying the eigenvalue precondition.
    pub decomposition_trials: usize,
    pub spectral_models: usize,
    pub bias_mc_trials: usize,
    pub laplacian_graphs: usize,
    /// Random walks per graph for the hitting-time cross-check; 0 disables it.
    pub hitting_walks: usize,
}

impl Default for AppendixOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            decomposition_trials: 1000,
            spectral_models: 100,
            bias_mc_trials: 100_000,
            laplacian_graphs: 100,
            hitting_walks: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub name: String,
    pub checked: usize,
    pub violations: usize,
    /// Worst observed value of the audited quantity (largest residual or smallest slack).
    pub worst: f64,
    pub detail: String,
}

impl Audit {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.violations == 0
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {} checked, {} violations, worst {:.3e}; {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.checked,
            self.violations,
            self.worst,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixReport {
    pub options: AppendixOptions,
    pub audits: Vec<Audit>,
    pub all_passed: bool,
}

pub fn verify_appendix(opts: &AppendixOptions) -> Result<AppendixReport> {
    let audits = vec![
        audit_decomposition(opts)?,
        audit_spectral(opts)?,
        audit_bias(opts)?,
        audit_d_limit()?,
        audit_laplacian(opts)?,
    ];
    let all_passed = audits.iter().all(Audit::passed);
    Ok(AppendixReport { options: *opts, audits, all_passed })
}

fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, p: usize) -> Matrix {
    let v = crate::rng::standard_normal_vector(rng, p * p);
    Matrix::from_column_slice(p, p, v.as_slice())
}

/// Incoherence decomposition on `p = 6`, `|S| = 2`: random stable covariances
/// with incoherence below one, perturbed by symmetric Gaussian noise.
pub fn audit_decomposition(opts: &AppendixOptions) -> Result<Audit> {
    const P: usize = 6;
    let mut rng = stream_rng(derive_seed(opts.seed, &[5]), 0);
    let (mut checked, mut within_pre, mut violations) = (0, 0, 0);
    let mut worst_residual = 0.0_f64;
    let mut worst_slack = f64::INFINITY;
    let cap = 50 * opts.decomposition_trials.max(1);
    while within_pre < opts.decomposition_trials && checked < cap {
        let model = dynamics::random_binary_with(P, 2.0, &mut rng, dynamics::BinaryVariant::Stabilized)?;
        let q0 = dynamics::solve_lyapunov_continuous(&model, DEFAULT_TOL)?.q;
        let mut support: Vec<usize> = sample(&mut rng, P, 2).into_vec();
        support.sort_unstable();
        let scale = rng.random_range(0.0..0.5) * linalg::lambda_min(&q0);
        let q_hat = &q0 + linalg::sym_part(&gaussian_matrix(&mut rng, P)) * scale;
        let rep = verify_decomposition(&q_hat, &q0, &support)?;
        checked += 1;
        worst_residual = worst_residual.max(rep.identity_residual);
        let mut bad = rep.identity_residual > 1e-10;
        if rep.precondition {
            within_pre += 1;
            for (v, b) in rep.t_norms.iter().zip(&rep.t_bounds) {
                worst_slack = worst_slack.min(b - v);
            }
            bad |= !rep.bounds_hold;
        }
        violations += bad as usize;
    }
    if within_pre < opts.decomposition_trials {
        violations += 1;
    }
    Ok(Audit {
        name: "incoherence decomposition".into(),
        checked,
        violations,
        worst: worst_residual,
        detail: format!("{within_pre} within the eigenvalue precondition, smallest bound slack {worst_slack:.3e}"),
    })
}

/// Quadratic-form spectra on random contractive `2 x 2` models at `(n, m) = (8, 4)`.
pub fn audit_spectral(opts: &AppendixOptions) -> Result<Audit> {
    const ETA: f64 = 0.1;
    let mut rng = stream_rng(derive_seed(opts.seed, &[7]), 0);
    let (mut checked, mut violations, mut draws) = (0, 0, 0);
    let mut worst = 0.0_f64;
    while checked < opts.spectral_models && draws < 100 * opts.spectral_models.max(1) {
        draws += 1;
        let a = gaussian_matrix(&mut rng, 2) - Matrix::identity(2, 2) * rng.random_range(1.0..4.0);
        let model = SystemModel::from_matrix(a)?;
        if !(model.sigma_max(ETA) < 1.0) {
            continue;
        }
        let [r, j, i] = [0, 0, 0].map(|_: usize| rng.random_range(0..2));
        let rep = verify_spectral_lemmas(&model, ETA, 8, 4, r, j, i)?;
        checked += 1;
        violations += !rep.all_hold as usize;
        let ratios = [
            rep.grad_max_abs / rep.grad_max_abs_bound,
            rep.grad_sum_sq / rep.grad_sum_sq_bound,
            rep.cov_max_abs / rep.cov_max_abs_bound,
            rep.cov_mean_sq / rep.cov_mean_sq_bound,
        ];
        worst = ratios.into_iter().fold(worst, f64::max);
    }
    Ok(Audit {
        name: "quadratic-form spectra".into(),
        checked,
        violations,
        worst,
        detail: "worst is the largest value/bound ratio".into(),
    })
}

/// Finite-start bias on an `(n, m)` grid for a scalar and a `3 x 3` model,
/// plus the Monte Carlo cross-check at `(n, m) = (50, 10)`.
pub fn audit_bias(opts: &AppendixOptions) -> Result<Audit> {
    const ETA: f64 = 0.1;
    let scalar = SystemModel::from_matrix(Matrix::from_element(1, 1, -1.0))?;
    let three =
        SystemModel::from_matrix(Matrix::from_row_slice(3, 3, &[-2.0, 0.5, 0.0, 0.0, -1.5, 0.7, 0.4, 0.0, -1.0]))?;
    let (mut checked, mut violations) = (0, 0);
    let mut worst = f64::INFINITY;
    for (model, pairs) in [(&scalar, vec![(0, 0)]), (&three, vec![(0, 0), (0, 1), (1, 2)])] {
        for &n in &[1, 5, 20, 50, 200] {
            for &m in &[0, 1, 10, 100] {
                for &(i, j) in &pairs {
                    let rep = verify_bias_bound(model, ETA, n, m, i, j, None)?;
                    checked += 1;
                    violations += !rep.holds as usize;
                    worst = worst.min(rep.slack);
                }
            }
        }
    }
    let mc = BiasMonteCarlo { trials: opts.bias_mc_trials, seed: derive_seed(opts.seed, &[10]) };
    let rep = verify_bias_bound(&scalar, ETA, 50, 10, 0, 0, Some(mc))?;
    checked += 1;
    let z = rep.monte_carlo.map_or(f64::NAN, |c| c.z_score);
    violations += (!rep.holds || !rep.monte_carlo.is_some_and(|c| c.within_3_sigma)) as usize;
    Ok(Audit {
        name: "finite-start bias".into(),
        checked,
        violations,
        worst,
        detail: format!(
            "worst is the smallest bound slack; Monte Carlo z-score {z:.3} over {} trials",
            opts.bias_mc_trials
        ),
    })
}

/// Small-step limit of `D` on a decade grid for a non-normal and two normal models.
pub fn audit_d_limit() -> Result<Audit> {
    let grid = [1e-1, 1e-2, 1e-3, 1e-4];
    let models = [
        Matrix::from_row_slice(2, 2, &[-1.0, 4.0, 0.0, -1.0]),
        -Matrix::identity(2, 2),
        Matrix::from_row_slice(2, 2, &[-2.0, 1.0, 1.0, -2.0]),
    ];
    let (mut checked, mut violations) = (0, 0);
    let mut worst = 0.0_f64;
    let mut finals = Vec::new();
    for a in models {
        let rep = verify_d_limit(&SystemModel::from_matrix(a)?, &grid)?;
        checked += 1;
        violations += !(rep.final_in_bracket && rep.increments_non_increasing) as usize;
        let last = *rep.d.last().unwrap_or(&f64::NAN);
        worst = worst.max((rep.rho_min - last).max(0.0));
        finals.push(format!("{last:.6}"));
    }
    Ok(Audit {
        name: "small-step limit of D".into(),
        checked,
        violations,
        worst,
        detail: format!("D at the smallest step: {}", finals.join(", ")),
    })
}

/// Laplacian incoherence on random connected graphs with `p = 12`, degree at most 4, `m = 1`.
pub fn audit_laplacian(opts: &AppendixOptions) -> Result<Audit> {
    const P: usize = 12;
    const K: usize = 4;
    const M: f64 = 1.0;
    let mut rng = stream_rng(derive_seed(opts.seed, &[12]), 0);
    let (mut checked, mut violations) = (0, 0);
    let mut worst = f64::INFINITY;
    let mut walk_z = 0.0_f64;
    for g in 0..opts.laplacian_graphs {
        let adj = graph::random_bounded_degree_graph(P, K, &mut rng)?;
        let row = rng.random_range(0..P);
        let rep =
            verify_laplacian_incoherence(&adj, M, row, opts.hitting_walks, derive_seed(opts.seed, &[12, g as u64]))?;
        checked += 1;
        let mut bad = !(rep.holds && rep.routes_agree);
        if let Some((mean, se)) = rep.hitting_walks {
            let z = if se > 0.0 { (mean - rep.via_hitting).abs() / se } else { (mean - rep.via_hitting).abs() * 1e12 };
            walk_z = walk_z.max(z);
            bad |= z > 4.0;
        }
        violations += bad as usize;
        worst = worst.min(rep.bound - rep.via_covariance);
    }
    Ok(Audit {
        name: "laplacian incoherence".into(),
        checked,
        violations,
        worst,
        detail: format!("worst is the smallest slack to k/(k+m); largest random-walk z-score {walk_z:.2}"),
    })
}
