//! Sample-complexity bounds, evaluated verbatim (constants are not tight).

fn confidence_log(p: usize, k: f64, delta: f64) -> Option<f64> {
    (p > 0 && k > 0.0 && delta > 0.0 && delta < 1.0).then(|| (4.0 * p as f64 * k / delta).ln())
}

fn all_positive(v: &[f64]) -> bool {
    v.iter().all(|x| *x > 0.0 && x.is_finite())
}

/// `1e4 k^2 (k rho^-2 + A_min^-2) / (alpha^2 rho C_min^2) log(4pk/delta)`.
pub fn horizon_bound_continuous(
    p: usize,
    k: f64,
    delta: f64,
    alpha: f64,
    rho_min: f64,
    a_min: f64,
    c_min: f64,
) -> Option<f64> {
    if !all_positive(&[alpha, rho_min, a_min, c_min]) {
        return None;
    }
    let log = confidence_log(p, k, delta)?;
    Some(
        1e4 * k * k * (k / (rho_min * rho_min) + 1.0 / (a_min * a_min)) / (alpha * alpha * rho_min * c_min * c_min)
            * log,
    )
}

/// `2e5 k^2 ((k+m)/m)^5 (k + m^2) log(4pk/delta)`.
pub fn horizon_bound_laplacian(p: usize, k: f64, m: f64, delta: f64) -> Option<f64> {
    if !all_positive(&[m]) {
        return None;
    }
    let log = confidence_log(p, k, delta)?;
    Some(2e5 * k * k * ((k + m) / m).powi(5) * (k + m * m) * log)
}

/// Same shape as the continuous bound with `D` in place of `rho_min`; the result is a bound on `n eta`.
pub fn horizon_bound_discrete(p: usize, k: f64, delta: f64, alpha: f64, d: f64, a_min: f64, c_min: f64) -> Option<f64> {
    horizon_bound_continuous(p, k, delta, alpha, d, a_min, c_min)
}
