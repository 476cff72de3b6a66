use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::rng::{self, stream};

use super::graph;

/// How a [`SystemModel`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Ensemble {
    /// Independent `{0,1}` entries with `P(A_ij = 1) = k/p`, used verbatim.
    BinaryLiteral,
    /// The binary draw shifted by `-c I` so the symmetric part is negative definite.
    Stabilized {
        shift: f64,
    },
    /// `-m I + laplacian(G)` for a connected graph of maximum degree `max_degree`.
    Laplacian {
        m: f64,
        max_degree: usize,
    },
    Explicit,
}

/// Which random binary ensemble to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryVariant {
    BinaryLiteral,
    Stabilized,
}

/// A linear drift matrix `A0` together with its row supports.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    a: Matrix,
    supports: Vec<Vec<usize>>,
    ensemble: Ensemble,
    stable: bool,
}

impl SystemModel {
    /// Wraps an arbitrary square matrix.
    pub fn from_matrix(a: Matrix) -> Result<Self> {
        Self::with_ensemble(a, Ensemble::Explicit)
    }

    fn with_ensemble(a: Matrix, ensemble: Ensemble) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension { expected: a.nrows(), got: a.ncols() });
        }
        if a.nrows() == 0 {
            return Err(Error::InvalidArgument("empty dynamics matrix".into()));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("dynamics matrix has non-finite entries".into()));
        }
        let supports = (0..a.nrows()).map(|r| (0..a.ncols()).filter(|&j| a[(r, j)] != 0.0).collect()).collect();
        let stable = linalg::spectral_abscissa(&a) < 0.0;
        Ok(Self { a, supports, ensemble, stable })
    }

    pub fn p(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn ensemble(&self) -> Ensemble {
        self.ensemble
    }

    /// All eigenvalues of `A0` lie in the open left half-plane.
    pub fn is_stable(&self) -> bool {
        self.stable
    }

    /// Sorted nonzero columns of row `r`.
    pub fn support(&self, r: usize) -> &[usize] {
        &self.supports[r]
    }

    pub fn supports(&self) -> &[Vec<usize>] {
        &self.supports
    }

    pub fn row(&self, r: usize) -> Vector {
        self.a.row(r).transpose()
    }

    /// Signed support of row `r` (`sign(0) = 0`).
    pub fn signed_support(&self, r: usize) -> Vec<i8> {
        self.a.row(r).iter().map(|&x| sign(x)).collect()
    }

    /// Smallest nonzero magnitude in row `r`, or `None` for an empty row.
    pub fn a_min(&self, r: usize) -> Option<f64> {
        self.supports[r].iter().map(|&j| self.a[(r, j)].abs()).min_by(f64::total_cmp)
    }

    /// `-lambda_max((A0 + A0^T)/2)`.
    pub fn rho_min(&self) -> f64 {
        -linalg::lambda_max(&self.a)
    }

    /// `sigma_max(I + eta A0)`.
    pub fn sigma_max(&self, eta: f64) -> f64 {
        linalg::sigma_max(&self.step_matrix(eta))
    }

    /// `I + eta A0`.
    pub fn step_matrix(&self, eta: f64) -> Matrix {
        Matrix::identity(self.p(), self.p()) + &self.a * eta
    }

    /// Relabels nodes: new node `perm[i]` is old node `i`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let p = self.p();
        let mut seen = vec![false; p];
        if perm.len() != p || perm.iter().any(|&i| i >= p || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
        let mut a = Matrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                a[(perm[i], perm[j])] = self.a[(i, j)];
            }
        }
        Self::with_ensemble(a, self.ensemble)
    }
}

pub fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Draws a random `{0,1}` matrix with `P(A_ij = 1) = k/p`.
///
/// With [`BinaryVariant::Stabilized`] the draw is shifted by `-c I`, where
/// `c = 1 + max_i (rowsum_i + colsum_i) / 2` bounds the Gershgorin discs of
/// the symmetric part, so `lambda_max((A0 + A0^T)/2) <= -1`.
pub fn make_random_binary_model(p: usize, k: f64, seed: u64, variant: BinaryVariant) -> Result<SystemModel> {
    let mut rng = rng::stream_rng(seed, stream::MODEL);
    random_binary_with(p, k, &mut rng, variant)
}

pub(crate) fn random_binary_with<R: Rng + ?Sized>(
    p: usize,
    k: f64,
    rng: &mut R,
    variant: BinaryVariant,
) -> Result<SystemModel> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!("p = {p} < 2")));
    }
    if !(k >= 0.0 && k < p as f64) {
        return Err(Error::InvalidArgument(format!("k = {k} must satisfy 0 <= k < p = {p}")));
    }
    let prob = k / p as f64;
    let mut a = Matrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            if rng.random::<f64>() < prob {
                a[(i, j)] = 1.0;
            }
        }
    }
    match variant {
        BinaryVariant::BinaryLiteral => SystemModel::with_ensemble(a, Ensemble::BinaryLiteral),
        BinaryVariant::Stabilized => {
            let shift = 1.0 + (0..p).map(|i| 0.5 * (a.row(i).sum() + a.column(i).sum())).fold(0.0, f64::max);
            for i in 0..p {
                a[(i, i)] -= shift;
            }
            SystemModel::with_ensemble(a, Ensemble::Stabilized { shift })
        }
    }
}

/// Builds `A0 = -m I + laplacian(G)` from a symmetric 0/1 adjacency matrix.
pub fn make_laplacian_model(adjacency: &Matrix, m: f64) -> Result<SystemModel> {
    if !(m > 0.0) {
        return Err(Error::InvalidArgument(format!("m = {m} must be positive")));
    }
    let degrees = graph::validate_adjacency(adjacency)?;
    if !graph::is_connected(adjacency) {
        return Err(Error::Disconnected);
    }
    let p = adjacency.nrows();
    let mut a = adjacency.clone();
    for i in 0..p {
        a[(i, i)] = -m - degrees[i] as f64;
    }
    let max_degree = degrees.iter().copied().max().unwrap_or(0);
    SystemModel::with_ensemble(a, Ensemble::Laplacian { m, max_degree })
}
