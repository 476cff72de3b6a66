use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::rng::{self, stream};

use super::lyapunov::{self, DEFAULT_TOL};
use super::SystemModel;

/// Where a trajectory's samples came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Provenance {
    DiscreteNative,
    SubsampledContinuous { delta: f64 },
    Coupled,
}

impl Provenance {
    /// Whitespace-free tag used in trajectory files.
    pub fn tag(&self) -> String {
        match self {
            Provenance::DiscreteNative => "discrete-native".into(),
            Provenance::SubsampledContinuous { delta } => format!("subsampled-continuous:{delta:.16e}"),
            Provenance::Coupled => "coupled".into(),
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "discrete-native" => Some(Provenance::DiscreteNative),
            "coupled" => Some(Provenance::Coupled),
            _ => {
                let delta = tag.strip_prefix("subsampled-continuous:")?.parse().ok()?;
                Some(Provenance::SubsampledContinuous { delta })
            }
        }
    }
}

/// Fine-resolution samples kept alongside a subsampled continuous path.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerPath {
    pub delta: f64,
    /// `p x (N + 1)` states at spacing `delta`.
    pub samples: Matrix,
}

/// `n + 1` states at spacing `eta`, stored as the columns of a `p x (n+1)` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Matrix,
    eta: f64,
    provenance: Provenance,
    seed: u64,
    inner: Option<InnerPath>,
}

impl Trajectory {
    pub fn new(samples: Matrix, eta: f64, provenance: Provenance, seed: u64) -> Result<Self> {
        if samples.ncols() < 2 {
            return Err(Error::InvalidArgument("trajectory needs at least two samples".into()));
        }
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::InvalidArgument(format!("eta = {eta} must be nonnegative")));
        }
        Ok(Self { samples, eta, provenance, seed, inner: None })
    }

    /// Attaches inner-resolution data; `eta / delta` must be a whole number and the
    /// subsampled states must coincide with every `(eta/delta)`-th inner state.
    pub fn with_inner(mut self, inner: InnerPath) -> Result<Self> {
        let stride = whole_ratio(self.eta, inner.delta).ok_or_else(|| {
            Error::BadSubsampling(format!("delta = {} does not divide eta = {}", inner.delta, self.eta))
        })?;
        if inner.samples.nrows() != self.p() || inner.samples.ncols() != stride * self.n() + 1 {
            return Err(Error::BadSubsampling("inner path length does not match n * eta / delta".into()));
        }
        self.inner = Some(inner);
        Ok(self)
    }

    pub fn p(&self) -> usize {
        self.samples.nrows()
    }

    /// Number of transitions.
    pub fn n(&self) -> usize {
        self.samples.ncols() - 1
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Observation interval `n * eta`.
    pub fn horizon(&self) -> f64 {
        self.n() as f64 * self.eta
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn samples(&self) -> &Matrix {
        &self.samples
    }

    pub fn state(&self, t: usize) -> Vector {
        self.samples.column(t).into_owned()
    }

    pub fn inner(&self) -> Option<&InnerPath> {
        self.inner.as_ref()
    }

    /// Relabels coordinates: new coordinate `perm[i]` is old coordinate `i`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let permute = |m: &Matrix| {
            let mut out = Matrix::zeros(m.nrows(), m.ncols());
            for (i, &pi) in perm.iter().enumerate() {
                out.row_mut(pi).copy_from(&m.row(i));
            }
            out
        };
        Self {
            samples: permute(&self.samples),
            eta: self.eta,
            provenance: self.provenance,
            seed: self.seed,
            inner: self.inner.as_ref().map(|ip| InnerPath { delta: ip.delta, samples: permute(&ip.samples) }),
        }
    }
}

/// `Some(a / b)` when it is a positive whole number (relative tolerance 1e-9).
pub(crate) fn whole_ratio(a: f64, b: f64) -> Option<usize> {
    if !(a > 0.0 && b > 0.0) {
        return None;
    }
    let ratio = a / b;
    let rounded = ratio.round();
    if rounded >= 1.0 && (ratio - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        Some(rounded as usize)
    } else {
        None
    }
}

/// `x(t) = x(t-1) + eta A0 x(t-1) + w(t)` with `w(t) ~ N(0, eta I)`, started
/// from the stationary law `N(0, Q0(eta))`.
pub fn simulate_discrete(model: &SystemModel, eta: f64, n: usize, seed: u64) -> Result<Trajectory> {
    simulate_discrete_scaled(model, eta, n, seed, 1.0)
}

/// As [`simulate_discrete`] with the driving noise multiplied by `noise_scale`
/// (`0` gives the noiseless recursion from a random stationary start).
pub fn simulate_discrete_scaled(
    model: &SystemModel,
    eta: f64,
    n: usize,
    seed: u64,
    noise_scale: f64,
) -> Result<Trajectory> {
    if !(noise_scale >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise scale {noise_scale} must be nonnegative")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let cov = lyapunov::solve_lyapunov_discrete(model, eta, DEFAULT_TOL)?;
    let p = model.p();
    let mut rng = rng::stream_rng(seed, stream::TRAJECTORY);
    let x0 = linalg::covariance_factor(&cov.q) * rng::standard_normal_vector(&mut rng, p);
    let step = model.step_matrix(eta);
    let noise_scale = noise_scale * eta.sqrt();
    let mut samples = Matrix::zeros(p, n + 1);
    samples.set_column(0, &x0);
    // column-major storage: state t occupies data[t*p..(t+1)*p]
    let data = samples.as_mut_slice();
    for t in 1..=n {
        let (past, rest) = data.split_at_mut(t * p);
        let prev = &past[(t - 1) * p..];
        for (i, out) in rest[..p].iter_mut().enumerate() {
            let w: f64 = StandardNormal.sample(&mut rng);
            let mut acc = noise_scale * w;
            for (j, xj) in prev.iter().enumerate() {
                acc += step[(i, j)] * xj;
            }
            *out = acc;
        }
    }
    Trajectory::new(samples, eta, Provenance::DiscreteNative, seed)
}

/// Parameters of an Euler–Maruyama run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousParams {
    /// Observation interval `T`.
    pub horizon: f64,
    /// Inner integration step.
    pub delta: f64,
    /// Sample spacing of the returned trajectory.
    pub eta: f64,
    /// Keep every inner state for stochastic-integral evaluation.
    pub keep_inner: bool,
}

impl ContinuousParams {
    /// Inner step `eta / 32`.
    pub fn with_default_delta(horizon: f64, eta: f64) -> Self {
        Self { horizon, delta: eta / 32.0, eta, keep_inner: false }
    }

    fn validate(&self) -> Result<(usize, usize)> {
        if !(self.delta > 0.0 && self.delta <= self.eta * (1.0 + 1e-12)) {
            return Err(Error::BadSubsampling(format!(
                "need 0 < delta <= eta, got delta = {}, eta = {}",
                self.delta, self.eta
            )));
        }
        let stride = whole_ratio(self.eta, self.delta).ok_or_else(|| {
            Error::BadSubsampling(format!("delta = {} does not divide eta = {}", self.delta, self.eta))
        })?;
        let n = whole_ratio(self.horizon, self.eta)
            .ok_or_else(|| Error::BadSubsampling(format!("eta = {} does not divide T = {}", self.eta, self.horizon)))?;
        Ok((stride, n))
    }
}

/// Euler–Maruyama for `dx = A0 x dt + db` from `x(0) ~ N(0, Q0)`; every
/// `(eta/delta)`-th inner state is returned. The inner path depends only on
/// `(model, delta, seed)`, so runs that differ only in `eta` share their
/// Brownian path.
pub fn simulate_continuous(model: &SystemModel, params: ContinuousParams, seed: u64) -> Result<Trajectory> {
    let (stride, n) = params.validate()?;
    let cov = lyapunov::solve_lyapunov_continuous(model, DEFAULT_TOL)?;
    let p = model.p();
    let mut rng = rng::stream_rng(seed, stream::TRAJECTORY);
    let x0 = linalg::covariance_factor(&cov.q) * rng::standard_normal_vector(&mut rng, p);
    let inner_steps = stride * n;
    let step = model.step_matrix(params.delta);
    let noise_scale = params.delta.sqrt();

    let mut samples = Matrix::zeros(p, n + 1);
    let mut inner = params.keep_inner.then(|| Matrix::zeros(p, inner_steps + 1));
    samples.set_column(0, &x0);
    if let Some(m) = inner.as_mut() {
        m.set_column(0, &x0);
    }
    let mut x = x0;
    let mut next = Vector::zeros(p);
    for k in 1..=inner_steps {
        let db = rng::standard_normal_vector(&mut rng, p) * noise_scale;
        next.gemv(1.0, &step, &x, 0.0);
        next += db;
        std::mem::swap(&mut x, &mut next);
        if let Some(m) = inner.as_mut() {
            m.set_column(k, &x);
        }
        if k % stride == 0 {
            samples.set_column(k / stride, &x);
        }
    }
    let traj = Trajectory::new(samples, params.eta, Provenance::SubsampledContinuous { delta: params.delta }, seed)?;
    match inner {
        Some(samples) => traj.with_inner(InnerPath { delta: params.delta, samples }),
        None => Ok(traj),
    }
}

/// A discrete and a continuous trajectory driven by one Brownian path.
#[derive(Debug, Clone)]
pub struct CoupledPair {
    pub discrete: Trajectory,
    pub continuous: Trajectory,
    /// The linear map taking `x(t=0)` to `x(i=0)`.
    pub initial_transform: Matrix,
}

/// Couples the discrete model at `eta = T/n` with the continuous model: the
/// discrete noise is `w(i) = b(T i/n) - b(T (i-1)/n)` and the discrete start is
/// `Q0(eta)^{1/2} Q0^{-1/2} x(t=0)`. The continuous trajectory keeps its inner path.
pub fn simulate_coupled(model: &SystemModel, horizon: f64, n: usize, seed: u64, delta: f64) -> Result<CoupledPair> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let eta = horizon / n as f64;
    let params = ContinuousParams { horizon, delta, eta, keep_inner: true };
    let (stride, _) = params.validate()?;
    let q_cont = lyapunov::solve_lyapunov_continuous(model, DEFAULT_TOL)?;
    let q_disc = lyapunov::solve_lyapunov_discrete(model, eta, DEFAULT_TOL)?;
    let transform = linalg::psd_sqrt(&q_disc.q, 1e-12) * linalg::psd_inv_sqrt(&q_cont.q, 1e-12);

    let continuous = simulate_continuous(model, params, seed)?;
    let inner = continuous.inner().expect("inner path requested");
    let a = model.matrix();
    let p = model.p();
    let step = model.step_matrix(eta);

    let mut samples = Matrix::zeros(p, n + 1);
    let mut x = &transform * inner.samples.column(0);
    samples.set_column(0, &x);
    for i in 1..=n {
        let mut w = Vector::zeros(p);
        for k in (i - 1) * stride..i * stride {
            let xk = inner.samples.column(k);
            w += inner.samples.column(k + 1) - xk - a * xk * delta;
        }
        x = &step * &x + w;
        samples.set_column(i, &x);
    }
    let discrete = Trajectory::new(samples, eta, Provenance::Coupled, seed)?;
    let continuous = Trajectory { provenance: Provenance::Coupled, ..continuous };
    Ok(CoupledPair { discrete, continuous, initial_transform: transform })
}
