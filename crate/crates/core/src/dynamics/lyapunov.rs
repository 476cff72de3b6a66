//! Stationary covariances of the continuous and discrete dynamics.
//!
//! Continuous: `A Q + Q A^T + I = 0`.
//! Discrete:   `A Q + Q A^T + eta A Q A^T + I = 0`, which after multiplying
//! by `eta` is the Stein equation `R Q R^T - Q + eta I = 0` with `R = I + eta A`.
//!
//! Two routes are provided. [`LyapunovMethod::Kronecker`] solves the
//! vectorized `p^2 x p^2` system by LU. [`LyapunovMethod::Doubling`] maps the
//! continuous equation to a Stein equation with a Cayley transform and sums
//! the Stein series by squaring (Smith doubling), which is `O(p^3 log)` and
//! what the simulators use. `Auto` runs doubling, checks the residual, and
//! falls back to the direct solve when the residual exceeds the tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

use super::SystemModel;

pub const DEFAULT_TOL: f64 = 1e-10;

/// Largest dimension for which the Kronecker route is attempted.
pub const KRONECKER_MAX_P: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapunovMethod {
    Auto,
    Kronecker,
    Doubling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CovarianceKind {
    Continuous,
    Discrete { eta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryCovariance {
    pub q: Matrix,
    pub kind: CovarianceKind,
    /// Max-abs residual of the defining equation.
    pub residual: f64,
}

/// Residual of `A Q + Q A^T + eta A Q A^T + I` (set `eta = 0` for the continuous equation).
pub fn residual(a: &Matrix, q: &Matrix, eta: f64) -> f64 {
    let p = a.nrows();
    let aq = a * q;
    let mut r = &aq + aq.transpose() + Matrix::identity(p, p);
    if eta != 0.0 {
        r += &aq * a.transpose() * eta;
    }
    linalg::max_abs(&r)
}

pub fn solve_lyapunov_continuous(model: &SystemModel, tol: f64) -> Result<StationaryCovariance> {
    solve_continuous_with(model, tol, LyapunovMethod::Auto)
}

pub fn solve_continuous_with(model: &SystemModel, tol: f64, method: LyapunovMethod) -> Result<StationaryCovariance> {
    let a = model.matrix();
    let abscissa = linalg::spectral_abscissa(a);
    if !(abscissa < 0.0) {
        return Err(Error::NotStable { max_real_part: abscissa });
    }
    let q = match method {
        LyapunovMethod::Kronecker => kronecker_continuous(a)?,
        LyapunovMethod::Doubling => doubling_continuous(a)?,
        LyapunovMethod::Auto => {
            let q = doubling_continuous(a)?;
            if residual(a, &q, 0.0) <= tol || a.nrows() > KRONECKER_MAX_P {
                q
            } else {
                kronecker_continuous(a)?
            }
        }
    };
    finish(a, q, 0.0, CovarianceKind::Continuous, tol)
}

pub fn solve_lyapunov_discrete(model: &SystemModel, eta: f64, tol: f64) -> Result<StationaryCovariance> {
    solve_discrete_with(model, eta, tol, LyapunovMethod::Auto)
}

pub fn solve_discrete_with(
    model: &SystemModel,
    eta: f64,
    tol: f64,
    method: LyapunovMethod,
) -> Result<StationaryCovariance> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!("eta = {eta} must be nonnegative")));
    }
    if eta == 0.0 {
        let mut cov = solve_continuous_with(model, tol, method)?;
        cov.kind = CovarianceKind::Discrete { eta };
        return Ok(cov);
    }
    let a = model.matrix();
    let step = model.step_matrix(eta);
    let sigma_max = linalg::sigma_max(&step);
    if !(sigma_max < 1.0) {
        return Err(Error::NotContractive { sigma_max });
    }
    let p = a.nrows();
    let c = Matrix::identity(p, p) * eta;
    let q = match method {
        LyapunovMethod::Kronecker => kronecker_stein(&step, &c)?,
        LyapunovMethod::Doubling => smith_doubling(&step, c)?,
        LyapunovMethod::Auto => {
            let q = smith_doubling(&step, c.clone())?;
            if residual(a, &q, eta) <= tol || p > KRONECKER_MAX_P {
                q
            } else {
                kronecker_stein(&step, &c)?
            }
        }
    };
    finish(a, q, eta, CovarianceKind::Discrete { eta }, tol)
}

fn finish(a: &Matrix, q: Matrix, eta: f64, kind: CovarianceKind, tol: f64) -> Result<StationaryCovariance> {
    let q = linalg::sym_part(&q);
    let residual = residual(a, &q, eta);
    if !(residual <= tol) {
        return Err(Error::SolverResidual { residual });
    }
    Ok(StationaryCovariance { q, kind, residual })
}

/// Sums `Q = sum_l R^l C (R^T)^l` by repeated squaring.
fn smith_doubling(r: &Matrix, c: Matrix) -> Result<Matrix> {
    let mut q = c;
    let mut phi = r.clone();
    for _ in 0..64 {
        let incr = &phi * &q * phi.transpose();
        q += &incr;
        if linalg::max_abs(&incr) <= f64::EPSILON * 1e-2 * linalg::max_abs(&q) {
            return Ok(q);
        }
        phi = &phi * &phi;
    }
    Err(Error::SolverResidual { residual: f64::NAN })
}

/// Cayley transform `A -> (sI - A)^{-1}(sI + A)`, then Stein doubling.
fn doubling_continuous(a: &Matrix) -> Result<Matrix> {
    let p = a.nrows();
    let spectrum = linalg::complex_spectrum(a).ok_or(Error::SolverResidual { residual: f64::NAN })?;
    let moduli: Vec<f64> = spectrum.iter().map(|z| z.norm()).collect();
    let hi = moduli.iter().copied().fold(0.0, f64::max);
    let lo = moduli.iter().copied().fold(f64::INFINITY, f64::min);
    let s = (hi * lo).sqrt().max(f64::MIN_POSITIVE);
    let eye = Matrix::identity(p, p);
    let m = linalg::inverse(&(&eye * s - a), "sI - A in Cayley transform")?;
    let ad = &m * (&eye * s + a);
    let cd = &m * m.transpose() * (2.0 * s);
    smith_doubling(&ad, cd)
}

fn kronecker_continuous(a: &Matrix) -> Result<Matrix> {
    let p = a.nrows();
    if p > KRONECKER_MAX_P {
        return Err(Error::TooLarge { dim: p * p, cap: KRONECKER_MAX_P * KRONECKER_MAX_P });
    }
    let eye = Matrix::identity(p, p);
    let op = linalg::kron(&eye, a) + linalg::kron(a, &eye);
    let rhs = -nalgebra::DVector::from_column_slice(eye.as_slice());
    let vec_q = op.lu().solve(&rhs).ok_or(Error::Singular("Kronecker Lyapunov operator"))?;
    Ok(Matrix::from_column_slice(p, p, vec_q.as_slice()))
}

fn kronecker_stein(r: &Matrix, c: &Matrix) -> Result<Matrix> {
    let p = r.nrows();
    if p > KRONECKER_MAX_P {
        return Err(Error::TooLarge { dim: p * p, cap: KRONECKER_MAX_P * KRONECKER_MAX_P });
    }
    let op = linalg::kron(r, r) - Matrix::identity(p * p, p * p);
    let rhs = -nalgebra::DVector::from_column_slice(c.as_slice());
    let vec_q = op.lu().solve(&rhs).ok_or(Error::Singular("Kronecker Stein operator"))?;
    Ok(Matrix::from_column_slice(p, p, vec_q.as_slice()))
}
