use serde::{Deserialize, Serialize};

use crate::dynamics::{SystemModel, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// Which likelihood a row problem uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Sum of squared one-step residuals at spacing `eta`.
    Discrete,
    /// Itô (left-endpoint) sums over the inner-resolution path.
    Continuous,
}

fn check_row(traj: &Trajectory, a: &Vector, row: usize) -> Result<()> {
    if a.len() != traj.p() {
        return Err(Error::Dimension { expected: traj.p(), got: a.len() });
    }
    if row >= traj.p() {
        return Err(Error::InvalidArgument(format!("row {row} out of range for p = {}", traj.p())));
    }
    Ok(())
}

fn positive_eta(eta: f64) -> Result<f64> {
    if eta > 0.0 {
        Ok(eta)
    } else {
        Err(Error::InvalidArgument(format!("loss needs eta > 0, got {eta}")))
    }
}

/// `(1 / 2 eta^2 n) sum_t (x_r(t+1) - x_r(t) - eta a^T x(t))^2`.
pub fn discrete_loss(a: &Vector, traj: &Trajectory, row: usize) -> Result<f64> {
    check_row(traj, a, row)?;
    let eta = positive_eta(traj.eta())?;
    let x = traj.samples();
    let n = traj.n();
    let mut sum = 0.0;
    for t in 0..n {
        let resid = x[(row, t + 1)] - x[(row, t)] - eta * a.dot(&x.column(t));
        sum += resid * resid;
    }
    Ok(sum / (2.0 * eta * eta * n as f64))
}

/// `(1/2T) int (a^T x)^2 dt - (1/T) int (a^T x) dx_r`, both integrals as
/// left-endpoint sums at the inner step.
pub fn continuous_loss(a: &Vector, traj: &Trajectory, row: usize) -> Result<f64> {
    check_row(traj, a, row)?;
    let inner = traj.inner().ok_or(Error::NoInnerResolution)?;
    continuous_loss_on(a, &inner.samples, inner.delta, row)
}

pub(crate) fn continuous_loss_on(a: &Vector, x: &Matrix, delta: f64, row: usize) -> Result<f64> {
    let steps = x.ncols() - 1;
    let horizon = steps as f64 * delta;
    let mut quad = 0.0;
    let mut ito = 0.0;
    for k in 0..steps {
        let ax = a.dot(&x.column(k));
        quad += ax * ax * delta;
        ito += ax * (x[(row, k + 1)] - x[(row, k)]);
    }
    Ok(quad / (2.0 * horizon) - ito / horizon)
}

/// Whether `G_hat` is formed from the true noise (test path) or omitted.
#[derive(Debug, Clone, Copy)]
pub enum GradientSource<'a> {
    /// Only the model-free quantities `b` and `Q_hat`.
    ModelFree,
    /// Also form `G_hat = -grad L(A0_r)` from the true dynamics.
    GroundTruth(&'a SystemModel),
}

/// Second-order data of the row loss.
///
/// Both losses are `L(a) = const - b^T a + 1/2 a^T Q_hat a`, so
/// `grad L(a) = Q_hat a - b` and `G_hat = b - Q_hat A0_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientHessian {
    pub row: usize,
    pub mode: LossMode,
    pub q_hat: Matrix,
    /// `-grad L(0)`.
    pub b: Vector,
    g_hat: Option<Vector>,
}

impl GradientHessian {
    /// Builds directly from precomputed moments.
    pub fn from_parts(row: usize, mode: LossMode, q_hat: Matrix, b: Vector, g_hat: Option<Vector>) -> Self {
        Self { row, mode, q_hat, b, g_hat }
    }

    /// `G_hat = -grad L(A0_r)`; only available when built with ground truth.
    pub fn g_hat(&self) -> Result<&Vector> {
        self.g_hat.as_ref().ok_or(Error::NeedsGroundTruth("G_hat requires the true dynamics matrix"))
    }

    pub fn gradient(&self, a: &Vector) -> Vector {
        &self.q_hat * a - &self.b
    }

    /// `L(a) - L(0)`.
    pub fn quadratic(&self, a: &Vector) -> f64 {
        0.5 * a.dot(&(&self.q_hat * a)) - self.b.dot(a)
    }
}

/// Sufficient statistics of a trajectory shared by every row.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mode: LossMode,
    /// Empirical second moment `Q_hat` (`p x p`).
    pub q_hat: Matrix,
    /// Column `r` is `b` for row `r`: `(1/n eta) X dX^T` or `(1/T) int x dx^T`.
    pub cross: Matrix,
    /// Sample spacing used for the increments (`eta` or `delta`).
    pub step: f64,
}

impl Moments {
    pub fn compute(traj: &Trajectory, mode: LossMode) -> Result<Self> {
        let (x, step) = match mode {
            LossMode::Discrete => (traj.samples(), positive_eta(traj.eta())?),
            LossMode::Continuous => {
                let inner = traj.inner().ok_or(Error::NoInnerResolution)?;
                (&inner.samples, inner.delta)
            }
        };
        let p = x.nrows();
        let n = x.ncols() - 1;
        // single pass over the column-major samples; upper triangle of Q_hat only
        let data = x.as_slice();
        let mut q_hat = Matrix::zeros(p, p);
        let mut cross = Matrix::zeros(p, p);
        let mut dx = vec![0.0; p];
        for t in 0..n {
            let cur = &data[t * p..(t + 1) * p];
            let next = &data[(t + 1) * p..(t + 2) * p];
            for r in 0..p {
                dx[r] = next[r] - cur[r];
            }
            for i in 0..p {
                let xi = cur[i];
                for j in i..p {
                    q_hat[(i, j)] += xi * cur[j];
                }
                for r in 0..p {
                    cross[(i, r)] += xi * dx[r];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                q_hat[(i, j)] = q_hat[(j, i)];
            }
        }
        q_hat /= n as f64;
        cross /= n as f64 * step;
        Ok(Self { mode, q_hat, cross, step })
    }

    pub fn for_row(&self, row: usize, source: GradientSource<'_>) -> Result<GradientHessian> {
        let p = self.q_hat.nrows();
        if row >= p {
            return Err(Error::InvalidArgument(format!("row {row} out of range for p = {p}")));
        }
        let b = self.cross.column(row).into_owned();
        let g_hat = match source {
            GradientSource::ModelFree => None,
            GradientSource::GroundTruth(model) => {
                if model.p() != p {
                    return Err(Error::Dimension { expected: p, got: model.p() });
                }
                Some(&b - &self.q_hat * model.row(row))
            }
        };
        Ok(GradientHessian { row, mode: self.mode, q_hat: self.q_hat.clone(), b, g_hat })
    }
}

/// Gradient and Hessian of the row loss; `G_hat` is present only with ground truth.
pub fn gradient_hessian(
    traj: &Trajectory,
    row: usize,
    mode: LossMode,
    source: GradientSource<'_>,
) -> Result<GradientHessian> {
    Moments::compute(traj, mode)?.for_row(row, source)
}
