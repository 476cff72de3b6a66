mod common;

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

use sdenet::dynamics::{
    self, graph, io, lyapunov::DEFAULT_TOL, make_laplacian_model, make_random_binary_model, BinaryVariant,
    ContinuousParams, SystemModel,
};
use sdenet::Error;

use common::{lyapunov_residual, max_abs_diff};

fn scalar(a: f64) -> SystemModel {
    SystemModel::from_matrix(DMatrix::from_element(1, 1, a)).unwrap()
}

fn three_by_three() -> SystemModel {
    SystemModel::from_matrix(DMatrix::from_row_slice(3, 3, &[-2.0, 0.5, 0.0, 0.0, -1.5, 0.7, 0.4, 0.0, -1.0])).unwrap()
}

fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    SymmetricEigen::new((m + m.transpose()) * 0.5).eigenvalues.iter().copied().collect()
}

/// `Q0(eta)` by iterating `Q <- (I + eta A) Q (I + eta A)^T + eta I` from zero.
fn stein_fixed_point(model: &SystemModel, eta: f64) -> DMatrix<f64> {
    let p = model.p();
    let rho = DMatrix::identity(p, p) + model.matrix() * eta;
    let mut q = DMatrix::zeros(p, p);
    for _ in 0..200_000 {
        let next = &rho * &q * rho.transpose() + DMatrix::identity(p, p) * eta;
        let done = max_abs_diff(&next, &q) < 1e-15;
        q = next;
        if done {
            break;
        }
    }
    q
}

/// Standard error of the sample variance of a stationary AR(1) with lag-one correlation `r`.
fn ar1_variance_se(var: f64, r: f64, n: usize) -> f64 {
    (2.0 * var * var * (1.0 + r * r) / (1.0 - r * r) / n as f64).sqrt()
}

fn sample_variance(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

#[test]
fn literal_edge_count_is_binomial() {
    let (p, k, seeds) = (16, 5.0, 1000);
    let counts: Vec<f64> = (0..seeds)
        .map(|s| {
            let m = make_random_binary_model(p, k, s, BinaryVariant::BinaryLiteral).unwrap();
            m.matrix().iter().filter(|v| **v != 0.0).count() as f64
        })
        .collect();
    let mean = counts.iter().sum::<f64>() / seeds as f64;
    let prob = k / p as f64;
    let entries = (p * p) as f64;
    let sd_of_mean = (entries * prob * (1.0 - prob) / seeds as f64).sqrt();
    assert!((mean - entries * prob).abs() <= 3.0 * sd_of_mean, "mean {mean}, expected {}", entries * prob);
}

#[test]
fn stabilized_symmetric_part_is_negative_definite() {
    for seed in 0..50 {
        let m = make_random_binary_model(16, 4.0, seed, BinaryVariant::Stabilized).unwrap();
        let top = eigenvalues(m.matrix()).into_iter().fold(f64::NEG_INFINITY, f64::max);
        assert!(top < 0.0, "seed {seed}: {top}");
        assert!(m.is_stable());
    }
}

#[test]
fn binary_model_errors() {
    assert!(matches!(make_random_binary_model(1, 0.5, 0, BinaryVariant::Stabilized), Err(Error::InvalidArgument(_))));
    assert!(matches!(make_random_binary_model(4, 4.0, 0, BinaryVariant::Stabilized), Err(Error::InvalidArgument(_))));
}

#[test]
fn path_graph_laplacian() {
    let m = make_laplacian_model(&graph::path_graph(3), 2.0).unwrap();
    let a = m.matrix();
    assert_eq!([a[(0, 0)], a[(1, 1)], a[(2, 2)]], [-3.0, -4.0, -3.0]);
    assert_eq!(a, &a.transpose());
    assert!(eigenvalues(a).iter().all(|&l| l <= -2.0 + 1e-12));
}

#[test]
fn star_graph_laplacian_margin() {
    let m = make_laplacian_model(&graph::star_graph(4), 1.0).unwrap();
    let top = eigenvalues(m.matrix()).into_iter().fold(f64::NEG_INFINITY, f64::max);
    assert!(top < 0.0);
    assert!(m.rho_min() >= 1.0 - 1e-12);
    assert!((m.rho_min() + top).abs() < 1e-12);
}

#[test]
fn laplacian_rejects_disconnected_graph() {
    let mut adj = DMatrix::zeros(4, 4);
    adj[(0, 1)] = 1.0;
    adj[(1, 0)] = 1.0;
    adj[(2, 3)] = 1.0;
    adj[(3, 2)] = 1.0;
    assert!(matches!(make_laplacian_model(&adj, 1.0), Err(Error::Disconnected)));
}

#[test]
fn continuous_covariance_closed_forms() {
    let q =
        dynamics::solve_lyapunov_continuous(&SystemModel::from_matrix(-DMatrix::identity(2, 2)).unwrap(), DEFAULT_TOL)
            .unwrap()
            .q;
    assert!(max_abs_diff(&q, &(DMatrix::identity(2, 2) * 0.5)) < 1e-12);

    let a = DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 1.0, -2.0]);
    let q = dynamics::solve_lyapunov_continuous(&SystemModel::from_matrix(a.clone()).unwrap(), DEFAULT_TOL).unwrap().q;
    let expected = -a.try_inverse().unwrap() * 0.5;
    assert!(max_abs_diff(&q, &expected) < 1e-12);
    assert!(max_abs_diff(&expected, &(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]) / 6.0)) < 1e-15);
}

#[test]
fn discrete_covariance_scalar_and_limit() {
    for eta in [0.5, 0.1, 0.01, 0.0001] {
        let q = dynamics::solve_lyapunov_discrete(&scalar(-1.0), eta, DEFAULT_TOL).unwrap().q[(0, 0)];
        assert!((q - 1.0 / (2.0 - eta)).abs() < 1e-12, "eta {eta}: {q}");
    }
    let cont = dynamics::solve_lyapunov_continuous(&scalar(-1.0), DEFAULT_TOL).unwrap().q[(0, 0)];
    assert!((cont - 0.5).abs() < 1e-12);
}

#[test]
fn discrete_covariance_matches_stein_iteration() {
    let model = three_by_three();
    for eta in [0.3, 0.1, 0.02] {
        let q = dynamics::solve_lyapunov_discrete(&model, eta, DEFAULT_TOL).unwrap().q;
        assert!(max_abs_diff(&q, &stein_fixed_point(&model, eta)) < 1e-10);
    }
}

#[test]
fn non_contractive_step_is_an_error() {
    let err = dynamics::solve_lyapunov_discrete(&scalar(-1.0), 2.5, DEFAULT_TOL).unwrap_err();
    assert!(matches!(err, Error::NotContractive { .. }));
    assert!(matches!(dynamics::simulate_discrete(&scalar(-1.0), 2.5, 10, 0), Err(Error::NotContractive { .. })));
}

#[test]
fn unstable_model_is_an_error() {
    let err = dynamics::solve_lyapunov_continuous(&scalar(0.5), DEFAULT_TOL).unwrap_err();
    assert!(matches!(err, Error::NotStable { .. }));
}

#[test]
fn continuous_covariance_matches_long_simulation() {
    let model = make_random_binary_model(5, 2.0, 11, BinaryVariant::Stabilized).unwrap();
    let q0 = dynamics::solve_lyapunov_continuous(&model, DEFAULT_TOL).unwrap().q;
    let params = ContinuousParams { horizon: 20_000.0, delta: 0.01, eta: 0.1, keep_inner: false };
    let traj = dynamics::simulate_continuous(&model, params, 5).unwrap();
    let x = traj.samples();
    let n = x.ncols() as f64;
    let emp = x * x.transpose() / n;
    let rel = max_abs_diff(&emp, &q0) / q0.amax();
    assert!(rel < 0.05, "relative error {rel}");
}

#[test]
fn discrete_stationary_variance() {
    let eta = 0.1;
    let n = 100_000;
    let traj = dynamics::simulate_discrete(&scalar(-1.0), eta, n, 3).unwrap();
    let var = sample_variance(traj.samples().row(0).iter().copied());
    let target = 1.0 / 1.9;
    let se = ar1_variance_se(target, 1.0 - eta, n);
    assert!((var - target).abs() < 3.0 * se, "{var} vs {target} (se {se})");
}

#[test]
fn lag_one_autocovariance() {
    let model = three_by_three();
    let eta = 0.1;
    let n = 400_000;
    let traj = dynamics::simulate_discrete(&model, eta, n, 8).unwrap();
    let x = traj.samples();
    let mut emp = DMatrix::zeros(3, 3);
    for t in 0..n {
        emp += x.column(t + 1) * x.column(t).transpose();
    }
    emp /= n as f64;
    let rho = DMatrix::identity(3, 3) + model.matrix() * eta;
    let expected = rho * stein_fixed_point(&model, eta);
    assert!(max_abs_diff(&emp, &expected) < 0.03, "{emp} vs {expected}");
}

#[test]
fn zero_step_gives_constant_path() {
    let traj = dynamics::simulate_discrete(&three_by_three(), 0.0, 50, 1);
    match traj {
        Ok(t) => {
            let first = t.state(0);
            assert!((0..=50).all(|i| t.state(i) == first));
        }
        Err(e) => panic!("eta = 0 should be allowed: {e}"),
    }
}

#[test]
fn continuous_stationary_variance() {
    let (eta, horizon, delta) = (0.1, 20_000.0, 0.005);
    let params = ContinuousParams { horizon, delta, eta, keep_inner: false };
    let traj = dynamics::simulate_continuous(&scalar(-1.0), params, 21).unwrap();
    let var = sample_variance(traj.samples().row(0).iter().copied());
    let se = ar1_variance_se(0.5, (-eta).exp(), traj.n());
    // the Euler chain at step delta has variance 1/(2 - delta)
    assert!((var - 0.5).abs() < 3.0 * se + delta, "{var} (se {se})");
}

#[test]
fn coarser_sampling_subsamples_the_same_path() {
    let model = three_by_three();
    let fine = dynamics::simulate_continuous(
        &model,
        ContinuousParams { horizon: 10.0, delta: 0.01, eta: 0.1, keep_inner: false },
        4,
    )
    .unwrap();
    let coarse = dynamics::simulate_continuous(
        &model,
        ContinuousParams { horizon: 10.0, delta: 0.01, eta: 0.2, keep_inner: false },
        4,
    )
    .unwrap();
    assert_eq!(coarse.n(), 50);
    for i in 0..=coarse.n() {
        assert_eq!(coarse.state(i), fine.state(2 * i));
    }
}

#[test]
fn subsampling_errors() {
    let model = scalar(-1.0);
    let bad = |delta, eta| {
        dynamics::simulate_continuous(&model, ContinuousParams { horizon: 1.0, delta, eta, keep_inner: false }, 0)
    };
    assert!(matches!(bad(0.03, 0.1), Err(Error::BadSubsampling(_))));
    assert!(matches!(bad(0.2, 0.1), Err(Error::BadSubsampling(_))));
}

#[test]
fn coupled_discrete_noise_is_the_brownian_increment() {
    let model = three_by_three();
    let (horizon, n, delta) = (2.0, 20, 0.01);
    let pair = dynamics::simulate_coupled(&model, horizon, n, 9, delta).unwrap();
    let eta = horizon / n as f64;
    let inner = pair.continuous.inner().unwrap();
    let stride = (eta / delta).round() as usize;
    let a = model.matrix();
    let rho = DMatrix::identity(3, 3) + a * eta;
    let xd = pair.discrete.samples();
    let xc = &inner.samples;
    for i in 1..=n {
        let mut w = nalgebra::DVector::zeros(3);
        for k in (i - 1) * stride..i * stride {
            w += xc.column(k + 1) - xc.column(k) - a * xc.column(k) * delta;
        }
        let resid = xd.column(i) - &rho * xd.column(i - 1) - w;
        assert!(resid.amax() < 1e-12, "step {i}: {resid}");
    }
    // scalar transform sqrt(Q0(eta) / Q0) = sqrt(2 / (2 - eta))
    let pair = dynamics::simulate_coupled(&scalar(-1.0), 1.0, 4, 0, 0.05).unwrap();
    assert!((pair.initial_transform[(0, 0)] - (2.0 / 1.75_f64).sqrt()).abs() < 1e-12);
}

#[test]
fn simulation_is_deterministic_and_round_trips() {
    let model = make_random_binary_model(6, 2.0, 3, BinaryVariant::Stabilized).unwrap();
    let a = dynamics::simulate_discrete(&model, 0.05, 200, 77).unwrap();
    let b = dynamics::simulate_discrete(&model, 0.05, 200, 77).unwrap();
    let c = dynamics::simulate_discrete(&model, 0.05, 200, 78).unwrap();
    assert_eq!(a.samples(), b.samples());
    assert_ne!(a.samples(), c.samples());

    let dir = tempfile::tempdir().unwrap();
    let tp = dir.path().join("traj.txt");
    io::write_trajectory(&tp, &a).unwrap();
    let back = io::read_trajectory(&tp).unwrap();
    assert_eq!(back.samples(), a.samples());
    assert_eq!(back.eta(), a.eta());
    assert_eq!(back.seed(), a.seed());
    assert_eq!(back.provenance(), a.provenance());

    let mp = dir.path().join("model.txt");
    io::write_matrix(&mp, model.matrix()).unwrap();
    assert_eq!(&io::read_matrix(&mp).unwrap(), model.matrix());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn supports_are_the_nonzero_columns(p in 2usize..12, kf in 0.1f64..0.9, seed in any::<u64>()) {
        let k = kf * p as f64;
        let m = make_random_binary_model(p, k, seed, BinaryVariant::Stabilized).unwrap();
        for r in 0..p {
            let nz: Vec<usize> = (0..p).filter(|&j| m.matrix()[(r, j)] != 0.0).collect();
            prop_assert_eq!(m.support(r), nz.as_slice());
        }
        prop_assert!(m.is_stable());
    }

    #[test]
    fn lyapunov_residuals_are_small(p in 2usize..10, seed in any::<u64>()) {
        let m = make_random_binary_model(p, 1.0, seed, BinaryVariant::Stabilized).unwrap();
        let q = dynamics::solve_lyapunov_continuous(&m, DEFAULT_TOL).unwrap().q;
        prop_assert!(lyapunov_residual(m.matrix(), &q, 0.0) <= 1e-10);
        prop_assert!(max_abs_diff(&q, &q.transpose()) <= 1e-12);
        prop_assert!(eigenvalues(&q).iter().all(|&l| l > 0.0));
        let eta = [0.1, 0.05, 0.02, 0.01].into_iter().find(|&e| m.sigma_max(e) < 1.0).unwrap();
        let qd = dynamics::solve_lyapunov_discrete(&m, eta, DEFAULT_TOL).unwrap().q;
        prop_assert!(lyapunov_residual(m.matrix(), &qd, eta) <= 1e-10);
    }

    #[test]
    fn permuting_a_model_permutes_its_supports(p in 3usize..9, seed in any::<u64>(), rot in 1usize..8) {
        let m = make_random_binary_model(p, 2.0, seed, BinaryVariant::Stabilized).unwrap();
        let perm: Vec<usize> = (0..p).map(|i| (i + rot) % p).collect();
        let pm = m.permuted(&perm).unwrap();
        for i in 0..p {
            for j in 0..p {
                prop_assert_eq!(pm.matrix()[(perm[i], perm[j])], m.matrix()[(i, j)]);
            }
        }
    }
}
