mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

use sdenet::dynamics::{
    self, lyapunov::DEFAULT_TOL, make_random_binary_model, BinaryVariant, ContinuousParams, InnerPath, Provenance,
    SystemModel, Trajectory,
};
use sdenet::estimator::{
    continuous_loss, discrete_loss, gradient_hessian, kkt_dual_check, lasso_solve, recover_network, solve_quadratic,
    theorem_lambda, GradientSource, LambdaGrid, LambdaRule, LambdaStrategy, LassoOptions, LossMode, RecoveryContext,
    RowProblem,
};
use sdenet::rng::{derive_seed, stream_rng};
use sdenet::Error;

use common::{direct_moments, max_abs_diff, sign_pattern_oracle};

fn three_by_three() -> SystemModel {
    SystemModel::from_matrix(DMatrix::from_row_slice(3, 3, &[-2.0, 0.5, 0.0, 0.0, -1.5, 0.7, 0.4, 0.0, -1.0])).unwrap()
}

fn contractive(p: usize, k: f64, seed: u64) -> (SystemModel, f64) {
    let m = make_random_binary_model(p, k, seed, BinaryVariant::Stabilized).unwrap();
    let eta = [0.1, 0.05, 0.02, 0.01].into_iter().find(|&e| m.sigma_max(e) < 1.0).unwrap();
    (m, eta)
}

#[test]
fn continuous_loss_at_zero_is_zero() {
    let params = ContinuousParams { horizon: 2.0, delta: 0.01, eta: 0.1, keep_inner: true };
    let traj = dynamics::simulate_continuous(&three_by_three(), params, 1).unwrap();
    assert_eq!(continuous_loss(&DVector::zeros(3), &traj, 1).unwrap(), 0.0);
}

#[test]
fn continuous_loss_needs_inner_samples() {
    let traj = dynamics::simulate_discrete(&three_by_three(), 0.1, 10, 1).unwrap();
    assert!(matches!(continuous_loss(&DVector::zeros(3), &traj, 0), Err(Error::NoInnerResolution)));
}

#[test]
fn completing_the_square_links_the_two_losses() {
    let eta = 0.1;
    let params = ContinuousParams { horizon: 30.0, delta: eta, eta, keep_inner: true };
    let traj = dynamics::simulate_continuous(&three_by_three(), params, 2).unwrap();
    let x = traj.samples();
    let n = traj.n();
    let mut rng = stream_rng(3, 0);
    for row in 0..3 {
        let sq: f64 = (0..n).map(|t| (x[(row, t + 1)] - x[(row, t)]).powi(2)).sum();
        let constant = sq / (2.0 * eta * eta * n as f64);
        for _ in 0..10 {
            let a = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
            let disc = discrete_loss(&a, &traj, row).unwrap();
            let cont = continuous_loss(&a, &traj, row).unwrap();
            let scale = disc.abs().max(constant).max(1.0);
            assert!((disc - constant - cont).abs() <= 1e-12 * scale, "{disc} - {constant} vs {cont}");
        }
    }
}

/// Deterministic path `x(t) = exp(-t)` stored at inner step `delta`.
fn smooth_path(delta: f64) -> Trajectory {
    let eta = 0.1;
    let steps = (1.0 / delta).round() as usize;
    let stride = (eta / delta).round() as usize;
    let inner = DMatrix::from_fn(1, steps + 1, |_, k| (-(k as f64) * delta).exp());
    let outer = DMatrix::from_fn(1, steps / stride + 1, |_, i| inner[(0, i * stride)]);
    Trajectory::new(outer, eta, Provenance::SubsampledContinuous { delta }, 0)
        .unwrap()
        .with_inner(InnerPath { delta, samples: inner })
        .unwrap()
}

#[test]
fn continuous_loss_refines_at_first_order() {
    let a = DVector::from_element(1, -0.7);
    let deltas = [1e-2, 1e-3, 1e-4];
    let gaps: Vec<f64> = deltas
        .iter()
        .map(|&d| {
            let coarse = continuous_loss(&a, &smooth_path(d), 0).unwrap();
            let fine = continuous_loss(&a, &smooth_path(d / 2.0), 0).unwrap();
            (coarse - fine).abs()
        })
        .collect();
    let slope = (gaps[0].ln() - gaps[2].ln()) / (deltas[0].ln() - deltas[2].ln());
    assert!((slope - 1.0).abs() < 0.05, "slope {slope}, gaps {gaps:?}");
}

#[test]
fn ground_truth_gradient_needs_the_model() {
    let traj = dynamics::simulate_discrete(&three_by_three(), 0.1, 50, 1).unwrap();
    let gh = gradient_hessian(&traj, 0, LossMode::Discrete, GradientSource::ModelFree).unwrap();
    assert!(matches!(gh.g_hat(), Err(Error::NeedsGroundTruth(_))));
}

#[test]
fn ground_truth_gradient_is_the_noise_correlation() {
    let model = three_by_three();
    let eta = 0.1;
    let traj = dynamics::simulate_discrete(&model, eta, 300, 4).unwrap();
    let x = traj.samples();
    let a = model.matrix();
    for row in 0..3 {
        let gh = gradient_hessian(&traj, row, LossMode::Discrete, GradientSource::GroundTruth(&model)).unwrap();
        // (1/(n eta)) sum x(t) w_r(t+1), with w the recovered driving noise
        let mut g = DVector::zeros(3);
        for t in 0..traj.n() {
            let w = x[(row, t + 1)] - x[(row, t)] - eta * (a.row(row) * x.column(t))[0];
            g += x.column(t) * w;
        }
        g /= traj.n() as f64 * eta;
        assert!((gh.g_hat().unwrap() - g).amax() < 1e-10);
    }
}

#[test]
fn empirical_covariance_converges_to_stationary() {
    let model = three_by_three();
    let eta = 0.1;
    let q0 = dynamics::solve_lyapunov_discrete(&model, eta, DEFAULT_TOL).unwrap().q;
    let traj = dynamics::simulate_discrete(&model, eta, 100_000, 6).unwrap();
    let gh = gradient_hessian(&traj, 0, LossMode::Discrete, GradientSource::ModelFree).unwrap();
    assert!(max_abs_diff(&gh.q_hat, &q0) < 0.05);
}

#[test]
fn noise_gradient_has_zero_mean() {
    let model = SystemModel::from_matrix(-DMatrix::identity(1, 1)).unwrap();
    let trials = 10_000;
    let g: Vec<f64> = (0..trials)
        .map(|s| {
            let traj = dynamics::simulate_discrete(&model, 0.1, 50, derive_seed(40, &[s])).unwrap();
            let gh = gradient_hessian(&traj, 0, LossMode::Discrete, GradientSource::GroundTruth(&model)).unwrap();
            gh.g_hat().unwrap()[0]
        })
        .collect();
    let mean = g.iter().sum::<f64>() / trials as f64;
    let sd = (g.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0)).sqrt();
    assert!(mean.abs() < 3.0 * sd / (trials as f64).sqrt(), "mean {mean}, sd {sd}");
}

#[test]
fn zero_lambda_is_the_least_squares_solution() {
    let (model, eta) = contractive(5, 2.0, 8);
    let traj = dynamics::simulate_discrete(&model, eta, 400, 8).unwrap();
    let opts = LassoOptions { tol: 1e-13, ..Default::default() };
    for row in 0..5 {
        let est =
            lasso_solve(&RowProblem { trajectory: &traj, row, lambda: 0.0, mode: LossMode::Discrete }, &opts).unwrap();
        let (q, b) = direct_moments(&traj, row);
        let direct = q.lu().solve(&b).unwrap();
        assert!((est.a_hat_vector() - &direct).amax() <= 1e-8 * direct.amax().max(1.0));
    }
}

#[test]
fn lambda_above_the_gradient_norm_gives_zero() {
    let (model, eta) = contractive(5, 2.0, 9);
    let traj = dynamics::simulate_discrete(&model, eta, 200, 9).unwrap();
    let (_, b) = direct_moments(&traj, 2);
    for scale in [1.0, 1.5, 10.0] {
        let problem = RowProblem { trajectory: &traj, row: 2, lambda: scale * b.amax(), mode: LossMode::Discrete };
        let est = lasso_solve(&problem, &LassoOptions::default()).unwrap();
        assert!(est.a_hat.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn theorem_lambda_arithmetic() {
    let continuous =
        theorem_lambda(&LambdaRule::Continuous { p: 16, delta: 0.1, horizon: 100.0, alpha: 0.5, rho_min: 1.0 })
            .unwrap();
    // 36 ln(640) / 25, evaluated by hand: ln(640) = 6.461468..., so sqrt(9.304514...) = 3.05033...
    assert!((continuous - 3.0503).abs() < 5e-5, "{continuous}");
    assert!((continuous - (36.0 * 640.0_f64.ln() / 25.0).sqrt()).abs() < 1e-15);

    let discrete =
        theorem_lambda(&LambdaRule::Discrete { p: 16, delta: 0.1, n_eta: 100.0, alpha: 0.5, d: 1.0 }).unwrap();
    assert_eq!(continuous, discrete);

    for k in [1.0, 2.0, 5.0] {
        let (p, delta, horizon) = (32, 0.05, 250.0);
        let laplacian = theorem_lambda(&LambdaRule::Laplacian { p, delta, horizon, k, m: k }).unwrap();
        let expected = 12.0 * ((4.0 * p as f64 / delta).ln() / (horizon * k)).sqrt();
        assert!((laplacian - expected).abs() < 1e-12 * expected);
    }
}

#[test]
fn theorem_lambda_rejects_bad_inputs() {
    let bad = [
        LambdaRule::Continuous { p: 16, delta: 0.0, horizon: 100.0, alpha: 0.5, rho_min: 1.0 },
        LambdaRule::Continuous { p: 16, delta: 0.1, horizon: -1.0, alpha: 0.5, rho_min: 1.0 },
        LambdaRule::Discrete { p: 16, delta: 0.1, n_eta: 100.0, alpha: 0.0, d: 1.0 },
        LambdaRule::Laplacian { p: 16, delta: 0.1, horizon: 100.0, k: 2.0, m: 0.0 },
    ];
    for rule in bad {
        assert!(theorem_lambda(&rule).is_err(), "{rule:?}");
    }
}

#[test]
fn noiseless_trajectory_recovers_exactly() {
    // exact recovery needs an orbit that excites every mode, i.e. a nonsingular Q
    let model = three_by_three();
    let traj = dynamics::simulate_discrete_scaled(&model, 0.1, 40, 12, 0.0).unwrap();
    let q = gradient_hessian(&traj, 0, LossMode::Discrete, GradientSource::ModelFree).unwrap().q_hat;
    let ev = q.symmetric_eigen().eigenvalues;
    assert!(ev.min() > 1e-8 * ev.max(), "{ev}");
    let ctx = RecoveryContext {
        lasso: LassoOptions { tol: 1e-14, ..Default::default() },
        ..RecoveryContext::new(LossMode::Discrete, Some(&model))
    };
    let net = recover_network(&traj, &LambdaStrategy::Fixed(0.0), &ctx).unwrap();
    for (r, est) in net.estimates().enumerate() {
        let err = (est.a_hat_vector() - model.row(r)).amax();
        assert!(err < 1e-8, "row {r}: {err}");
    }
}

#[test]
fn oracle_grid_needs_ground_truth() {
    let traj = dynamics::simulate_discrete(&three_by_three(), 0.1, 50, 1).unwrap();
    let ctx = RecoveryContext::new(LossMode::Discrete, None);
    let err = recover_network(&traj, &LambdaStrategy::OracleGrid(LambdaGrid::default()), &ctx).unwrap_err();
    assert!(matches!(err, Error::NeedsGroundTruth(_)));
}

#[test]
fn long_observation_recovers_most_rows() {
    let mut hits = 0;
    let mut rows = 0;
    for seed in 0..4 {
        let model = make_random_binary_model(16, 4.0, 100 + seed, BinaryVariant::Stabilized).unwrap();
        if model.sigma_max(0.1) >= 1.0 {
            continue;
        }
        let traj = dynamics::simulate_discrete(&model, 0.1, 8000, seed).unwrap();
        let ctx = RecoveryContext::new(LossMode::Discrete, Some(&model));
        let net = recover_network(&traj, &LambdaStrategy::OracleGrid(LambdaGrid::default()), &ctx).unwrap();
        hits += net.rows.iter().filter(|r| r.success == Some(true)).count();
        rows += net.rows.len();
    }
    assert!(rows >= 32);
    assert!(hits as f64 > 0.9 * rows as f64, "{hits}/{rows}");
}

#[test]
fn relabeling_nodes_relabels_supports() {
    let (model, eta) = contractive(7, 2.0, 21);
    let traj = dynamics::simulate_discrete(&model, eta, 3000, 21).unwrap();
    let perm = [3, 0, 6, 1, 5, 2, 4];
    let ctx = RecoveryContext::new(LossMode::Discrete, None);
    let base = recover_network(&traj, &LambdaStrategy::Fixed(0.15), &ctx).unwrap();
    let moved = recover_network(&traj.permuted(&perm), &LambdaStrategy::Fixed(0.15), &ctx).unwrap();
    for (r, est) in base.estimates().enumerate() {
        let other = &moved.rows[perm[r]].estimate;
        for (j, &pj) in perm.iter().enumerate() {
            assert_eq!(other.signed_support[pj], est.signed_support[j], "row {r} col {j}");
        }
    }
}

#[test]
fn dual_bound_holds_whenever_the_support_stays_inside() {
    let opts = LassoOptions { tol: 1e-12, ..Default::default() };
    let mut rng = stream_rng(55, 0);
    let (mut inside, mut violations, mut sup_violations) = (0, 0, 0);
    for s in 0..10_000u64 {
        let (model, eta) = contractive(4, 1.5, derive_seed(55, &[s]));
        let row = rng.random_range(0..4);
        if model.support(row).is_empty() {
            continue;
        }
        let traj = dynamics::simulate_discrete(&model, eta, 200, derive_seed(56, &[s])).unwrap();
        let gh = gradient_hessian(&traj, row, LossMode::Discrete, GradientSource::GroundTruth(&model)).unwrap();
        let lambda = rng.random_range(0.05..0.6) * gh.b.amax();
        let est = lasso_solve(&RowProblem { trajectory: &traj, row, lambda, mode: LossMode::Discrete }, &opts).unwrap();
        let truth = model.row(row);
        let rep = kkt_dual_check(&est, &gh, &truth).unwrap();
        // both bounds are derived for solutions supported on the true support
        if (0..4).all(|j| est.a_hat[j] == 0.0 || truth[j] != 0.0) {
            inside += 1;
            violations += usize::from(!rep.dual_holds(1e-6));
            sup_violations += usize::from(!rep.sup_implication_holds(1e-9));
        }
    }
    assert!(inside > 1000, "{inside}");
    assert_eq!(violations, 0);
    assert_eq!(sup_violations, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solver_matches_exhaustive_sign_search(p in 2usize..6, seed in any::<u64>(), frac in 0.01f64..0.95, n in 15usize..200) {
        let (model, eta) = contractive(p, 1.0, seed);
        let traj = dynamics::simulate_discrete(&model, eta, n, seed ^ 1).unwrap();
        let row = (seed % p as u64) as usize;
        let (q, b) = direct_moments(&traj, row);
        let lambda = frac * b.amax();
        let est = lasso_solve(&RowProblem { trajectory: &traj, row, lambda, mode: LossMode::Discrete }, &LassoOptions::default()).unwrap();
        let (signs, _) = sign_pattern_oracle(&q, &b, lambda);
        prop_assert!(est.converged);
        prop_assert!(est.kkt_residual <= 1e-8);
        prop_assert_eq!(est.signed_support, signs);
    }

    #[test]
    fn gradient_matches_finite_differences(p in 2usize..7, seed in any::<u64>(), scale in 0.1f64..3.0) {
        let (model, eta) = contractive(p, 1.0, seed);
        let traj = dynamics::simulate_discrete(&model, eta, 300, seed ^ 2).unwrap();
        let row = (seed % p as u64) as usize;
        let gh = gradient_hessian(&traj, row, LossMode::Discrete, GradientSource::ModelFree).unwrap();
        let mut rng = stream_rng(seed, 9);
        let a = DVector::from_fn(p, |_, _| scale * rng.random_range(-1.0..1.0));
        let g = gh.gradient(&a);
        let loss = |v: &DVector<f64>| discrete_loss(v, &traj, row).unwrap();
        for j in 0..p {
            let h = 1e-5;
            let mut up = a.clone();
            let mut dn = a.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (loss(&up) - loss(&dn)) / (2.0 * h);
            prop_assert!((fd - g[j]).abs() <= 1e-6 * g.amax().max(1e-3));
        }
        let quad = loss(&a) - loss(&DVector::zeros(p));
        prop_assert!((quad - gh.quadratic(&a)).abs() <= 1e-12 * loss(&a).abs().max(1.0));
    }

    #[test]
    fn joint_rescaling_keeps_the_support(p in 2usize..6, seed in any::<u64>(), c in 0.01f64..100.0, frac in 0.05f64..0.9) {
        let mut rng = stream_rng(seed, 0);
        let m = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
        let q = &m * m.transpose() + DMatrix::identity(p, p) * 0.5;
        let b = DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
        let lambda = frac * b.amax();
        let opts = LassoOptions { tol: 1e-12, ..Default::default() };
        let base = solve_quadratic(&q, &b, lambda, None, &opts).unwrap();
        let scaled = solve_quadratic(&(&q * c), &(&b * c), lambda * c, None, &opts).unwrap();
        let sign = |v: &DVector<f64>| v.iter().map(|x| x.signum() as i8 * i8::from(*x != 0.0)).collect::<Vec<_>>();
        prop_assert_eq!(sign(&base.a), sign(&scaled.a));
    }

    #[test]
    fn objective_trace_never_increases(p in 2usize..8, seed in any::<u64>(), frac in 0.0f64..0.9) {
        let mut rng = stream_rng(seed, 1);
        let m = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
        let q = &m * m.transpose() + DMatrix::identity(p, p) * 0.1;
        let b = DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
        let opts = LassoOptions { tol: 1e-12, trace_objective: true, ..Default::default() };
        let sol = solve_quadratic(&q, &b, frac * b.amax(), None, &opts).unwrap();
        for w in sol.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-14 * w[0].abs().max(1.0));
        }
        for (z, a) in sol.dual.iter().zip(sol.a.iter()) {
            prop_assert!(z.abs() <= 1.0);
            if *a != 0.0 {
                prop_assert_eq!(*z, a.signum());
            }
        }
    }
}
