use std::process::{Command, Output};

use sdenet::dynamics::{self, io, BinaryVariant, SystemModel};
use sdenet::estimator::report::report_from_csv;

fn sdenet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdenet")).args(args).env_remove("SDENET_THREADS").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(code(&sdenet(&["--bogus"])), 1);
    assert_eq!(code(&sdenet(&["reproduce", "fig9"])), 1);
    assert_eq!(code(&sdenet(&["sweep"])), 1);
    assert_eq!(code(&sdenet(&["--help"])), 0);
}

#[test]
fn verify_appendix_exits_cleanly() {
    let out = sdenet(&["verify-appendix"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out.stdout.is_empty());
}

#[test]
fn simulate_writes_a_readable_trajectory_and_model() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("x.txt");
    let model = dir.path().join("a.txt");
    let out = sdenet(&[
        "simulate",
        "--p",
        "5",
        "--k",
        "2",
        "--eta",
        "0.1",
        "--n",
        "50",
        "--seed",
        "3",
        "--out",
        traj.to_str().unwrap(),
        "--model-out",
        model.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let t = io::read_trajectory(&traj).unwrap();
    assert_eq!((t.n(), t.p()), (50, 5));
    let a = io::read_matrix(&model).unwrap();
    let expected = dynamics::make_random_binary_model(5, 2.0, 3, BinaryVariant::Stabilized).unwrap();
    assert_eq!(&a, expected.matrix());
}

#[test]
fn unregularized_estimate_of_a_noiseless_path_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    // distinct eigenvalues, so a noiseless orbit identifies every row
    let a = nalgebra::DMatrix::from_row_slice(3, 3, &[-2.0, 0.5, 0.0, 0.0, -1.5, 0.7, 0.4, 0.0, -1.0]);
    let model = SystemModel::from_matrix(a).unwrap();
    let traj = dynamics::simulate_discrete_scaled(&model, 0.1, 40, 11, 0.0).unwrap();
    let path = dir.path().join("x.txt");
    io::write_trajectory(&path, &traj).unwrap();
    let out = sdenet(&["estimate", "--trajectory", path.to_str().unwrap(), "--lambda", "0"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = report_from_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    for row in &rows {
        for (j, v) in row.a_hat.iter().enumerate() {
            assert!((v - model.matrix()[(row.r, j)]).abs() < 1e-6, "row {} col {j}: {v}", row.r);
        }
    }
}

#[test]
fn estimate_without_lambda_or_truth_fails() {
    let dir = tempfile::tempdir().unwrap();
    let model = dynamics::make_random_binary_model(3, 1.0, 2, BinaryVariant::Stabilized).unwrap();
    let path = dir.path().join("x.txt");
    io::write_trajectory(&path, &dynamics::simulate_discrete(&model, 0.1, 20, 2).unwrap()).unwrap();
    assert_eq!(code(&sdenet(&["estimate", "--trajectory", path.to_str().unwrap()])), 1);
}

#[test]
fn conditions_report_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.txt");
    let model = dynamics::make_random_binary_model(6, 2.0, 4, BinaryVariant::Stabilized).unwrap();
    io::write_matrix(&path, model.matrix()).unwrap();
    let p = path.to_str().unwrap();

    let kv = sdenet(&["conditions", "--model", p, "--row", "1", "--eta", "0.1", "--horizon", "100"]);
    assert_eq!(code(&kv), 0, "{}", String::from_utf8_lossy(&kv.stderr));
    let kv = String::from_utf8(kv.stdout).unwrap();
    assert!(kv.lines().any(|l| l.starts_with("alpha = ")));

    let js = sdenet(&["conditions", "--model", p, "--row", "1", "--eta", "0.1", "--format", "json"]);
    assert_eq!(code(&js), 0);
    let v: serde_json::Value = serde_json::from_slice(&js.stdout).unwrap();
    assert!(v["alpha"].is_number());

    assert_eq!(code(&sdenet(&["conditions", "--model", p, "--row", "6"])), 1);
}
