//! Communication topologies with doubly stochastic mixing weights.
//!
//! A [`Network`] holds the weight matrix `A`, its Laplacian
//! `L = diag(A·1) − A` and the algebraic connectivity `rho_L` (second
//! smallest Laplacian eigenvalue). Weights default to the Metropolis rule,
//! which is doubly stochastic on any connected undirected graph.

use thiserror::Error;

/// Tolerance on row/column stochasticity of the weight matrix.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Eigenvalues below this are treated as zero when locating `rho_L`.
pub const ZERO_EIG_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("graph is not connected")]
    DisconnectedGraph,
    #[error("weights are not doubly stochastic: column {column} sums to {sum}")]
    NonStochasticWeights { column: usize, sum: f64 },
    #[error("no positive Laplacian eigenvalue (second smallest = {0:e})")]
    DegenerateSpectrum(f64),
    #[error("invalid edge ({0}, {1})")]
    BadEdge(usize, usize),
    #[error("network must have at least {0} node(s)")]
    TooFewNodes(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    Ring,
    Complete,
    Star,
    EdgeList(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightRule {
    Metropolis,
    UniformNeighbor,
}

/// A validated communication graph: symmetric doubly stochastic weights,
/// connected, with a strictly positive algebraic connectivity.
#[derive(Debug, Clone)]
pub struct Network {
    n: usize,
    edges: Vec<(usize, usize)>,
    /// Row-major n x n weight matrix.
    weights: Vec<f64>,
    laplacian: Vec<f64>,
    rho_l: f64,
}

impl Network {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn laplacian(&self) -> &[f64] {
        &self.laplacian
    }

    /// Second smallest eigenvalue of the Laplacian.
    pub fn rho_l(&self) -> f64 {
        self.rho_l
    }

    /// Builds a network directly from an explicit weight matrix. Used by the
    /// simulator for degenerate single-node setups that `build_network`
    /// rejects (a lone node has no positive Laplacian eigenvalue).
    pub fn from_weights(weights: Vec<f64>, n: usize) -> Result<Self, NetworkError> {
        assert_eq!(weights.len(), n * n);
        if n == 0 {
            return Err(NetworkError::TooFewNodes(1));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if weights[i * n + j] > 0.0 {
                    edges.push((i, j));
                }
            }
        }
        validate_doubly_stochastic(&weights, n)?;
        let laplacian = laplacian_of(&weights, n);
        let rho_l = if n == 1 {
            f64::NAN
        } else {
            second_smallest_eigenvalue(&laplacian, n)?
        };
        Ok(Network { n, edges, weights, laplacian, rho_l })
    }
}

/// Constructs a validated [`Network`] from a topology and weight rule.
pub fn build_network(
    n: usize,
    topology: &Topology,
    weight_rule: WeightRule,
) -> Result<Network, NetworkError> {
    if n < 1 {
        return Err(NetworkError::TooFewNodes(1));
    }
    let edges = topology_edges(n, topology)?;
    if !is_connected(n, &edges) {
        return Err(NetworkError::DisconnectedGraph);
    }

    let mut degree = vec![0usize; n];
    for &(i, j) in &edges {
        degree[i] += 1;
        degree[j] += 1;
    }

    let mut a = vec![0.0; n * n];
    match weight_rule {
        WeightRule::Metropolis => {
            for &(i, j) in &edges {
                let w = 1.0 / (1.0 + degree[i].max(degree[j]) as f64);
                a[i * n + j] = w;
                a[j * n + i] = w;
            }
        }
        WeightRule::UniformNeighbor => {
            for &(i, j) in &edges {
                a[i * n + j] = 1.0 / (degree[i] as f64 + 1.0);
                a[j * n + i] = 1.0 / (degree[j] as f64 + 1.0);
            }
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[i * n + j]).sum();
        a[i * n + i] = 1.0 - off;
    }

    validate_doubly_stochastic(&a, n)?;
    let laplacian = laplacian_of(&a, n);
    let rho_l = second_smallest_eigenvalue(&laplacian, n)?;
    Ok(Network { n, edges, weights: a, laplacian, rho_l })
}

/// Second smallest Laplacian eigenvalue of a built network.
pub fn algebraic_connectivity(net: &Network) -> Result<f64, NetworkError> {
    if net.n < 2 {
        return Err(NetworkError::TooFewNodes(2));
    }
    second_smallest_eigenvalue(&net.laplacian, net.n)
}

fn topology_edges(n: usize, topology: &Topology) -> Result<Vec<(usize, usize)>, NetworkError> {
    match topology {
        Topology::Ring => {
            if n == 1 {
                return Ok(Vec::new());
            }
            if n == 2 {
                return Ok(vec![(0, 1)]);
            }
            Ok((0..n).map(|i| (i, (i + 1) % n)).map(order_pair).collect())
        }
        Topology::Complete => {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    edges.push((i, j));
                }
            }
            Ok(edges)
        }
        Topology::Star => {
            if n == 1 {
                return Ok(Vec::new());
            }
            Ok((1..n).map(|i| (0, i)).collect())
        }
        Topology::EdgeList(list) => {
            let mut edges = Vec::new();
            for &(i, j) in list {
                if i == j || i >= n || j >= n {
                    return Err(NetworkError::BadEdge(i, j));
                }
                let e = order_pair((i, j));
                if !edges.contains(&e) {
                    edges.push(e);
                }
            }
            Ok(edges)
        }
    }
}

fn order_pair((i, j): (usize, usize)) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    // union-find over edges
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(i, j) in edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
        }
    }
    let root = find(&mut parent, 0);
    (0..n).all(|i| find(&mut parent, i) == root)
}

fn validate_doubly_stochastic(a: &[f64], n: usize) -> Result<(), NetworkError> {
    for i in 0..n {
        let row: f64 = (0..n).map(|j| a[i * n + j]).sum();
        if (row - 1.0).abs() > STOCHASTIC_TOL {
            return Err(NetworkError::NonStochasticWeights { column: i, sum: row });
        }
    }
    for j in 0..n {
        let col: f64 = (0..n).map(|i| a[i * n + j]).sum();
        if (col - 1.0).abs() > STOCHASTIC_TOL {
            return Err(NetworkError::NonStochasticWeights { column: j, sum: col });
        }
    }
    for i in 0..n {
        for j in 0..n {
            if a[i * n + j] < 0.0 {
                return Err(NetworkError::NonStochasticWeights { column: j, sum: a[i * n + j] });
            }
        }
    }
    Ok(())
}

fn laplacian_of(a: &[f64], n: usize) -> Vec<f64> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        let row_sum: f64 = (0..n).map(|j| a[i * n + j]).sum();
        for j in 0..n {
            l[i * n + j] = if i == j { row_sum - a[i * n + j] } else { -a[i * n + j] };
        }
    }
    l
}

fn second_smallest_eigenvalue(l: &[f64], n: usize) -> Result<f64, NetworkError> {
    let (mut eigs, _) = jacobi_eigen(l, n);
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    match eigs.iter().find(|&&e| e > ZERO_EIG_TOL) {
        Some(&e) if eigs.len() >= 2 && eigs[1] > ZERO_EIG_TOL => Ok(e),
        _ => Err(NetworkError::DegenerateSpectrum(
            eigs.get(1).copied().unwrap_or(0.0),
        )),
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns unsorted eigenvalues and the eigenvector matrix (columns match
/// the eigenvalue order). Converges when the off-diagonal Frobenius norm
/// drops below 1e-12, capped at 100 sweeps; n is small here so this is
/// plenty.
pub fn jacobi_eigen(m: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = m.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        s += a[i * n + j] * a[i * n + j];
                    }
                }
            }
            s.sqrt()
        };
        if off < 1e-12 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigs = (0..n).map(|i| a[i * n + i]).collect();
    (eigs, v)
}
