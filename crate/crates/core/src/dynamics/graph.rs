//! Simple undirected graphs stored as dense 0/1 adjacency matrices.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Checks symmetry, zero diagonal and 0/1 entries; returns vertex degrees.
pub fn validate_adjacency(adj: &Matrix) -> Result<Vec<usize>> {
    let p = adj.nrows();
    if adj.ncols() != p {
        return Err(Error::Dimension { expected: p, got: adj.ncols() });
    }
    for i in 0..p {
        if adj[(i, i)] != 0.0 {
            return Err(Error::InvalidArgument(format!("adjacency has nonzero diagonal at {i}")));
        }
        for j in 0..p {
            let v = adj[(i, j)];
            if v != 0.0 && v != 1.0 {
                return Err(Error::InvalidArgument(format!("adjacency entry ({i},{j}) = {v} not in {{0,1}}")));
            }
            if v != adj[(j, i)] {
                return Err(Error::InvalidArgument("adjacency is not symmetric".into()));
            }
        }
    }
    Ok((0..p).map(|i| adj.row(i).sum() as usize).collect())
}

pub fn is_connected(adj: &Matrix) -> bool {
    let p = adj.nrows();
    if p == 0 {
        return true;
    }
    let mut seen = vec![false; p];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for v in 0..p {
            if adj[(u, v)] != 0.0 && !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

pub fn neighbors(adj: &Matrix, i: usize) -> Vec<usize> {
    (0..adj.ncols()).filter(|&j| adj[(i, j)] != 0.0).collect()
}

pub fn path_graph(p: usize) -> Matrix {
    let mut adj = Matrix::zeros(p, p);
    for i in 1..p {
        adj[(i - 1, i)] = 1.0;
        adj[(i, i - 1)] = 1.0;
    }
    adj
}

pub fn cycle_graph(p: usize) -> Matrix {
    let mut adj = path_graph(p);
    if p > 2 {
        adj[(0, p - 1)] = 1.0;
        adj[(p - 1, 0)] = 1.0;
    }
    adj
}

/// Star `K_{1,leaves}` with the hub at vertex 0.
pub fn star_graph(leaves: usize) -> Matrix {
    let mut adj = Matrix::zeros(leaves + 1, leaves + 1);
    for i in 1..=leaves {
        adj[(0, i)] = 1.0;
        adj[(i, 0)] = 1.0;
    }
    adj
}

/// Random connected graph on `p` vertices with maximum degree at most `k`:
/// a degree-capped random spanning tree plus random extra edges.
pub fn random_bounded_degree_graph<R: Rng + ?Sized>(p: usize, k: usize, rng: &mut R) -> Result<Matrix> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!("p = {p} < 2")));
    }
    if k < 2 && p > 2 {
        return Err(Error::InvalidArgument("a connected graph on more than 2 vertices needs k >= 2".into()));
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    let mut adj = Matrix::zeros(p, p);
    let mut deg = vec![0usize; p];
    for t in 1..p {
        let v = order[t];
        let open: Vec<usize> = order[..t].iter().copied().filter(|&u| deg[u] < k).collect();
        let u = open[rng.random_range(0..open.len())];
        adj[(u, v)] = 1.0;
        adj[(v, u)] = 1.0;
        deg[u] += 1;
        deg[v] += 1;
    }
    for _ in 0..p * k {
        let u = rng.random_range(0..p);
        let v = rng.random_range(0..p);
        if u == v || adj[(u, v)] != 0.0 || deg[u] >= k || deg[v] >= k || !rng.random_bool(0.5) {
            continue;
        }
        adj[(u, v)] = 1.0;
        adj[(v, u)] = 1.0;
        deg[u] += 1;
        deg[v] += 1;
    }
    Ok(adj)
}
