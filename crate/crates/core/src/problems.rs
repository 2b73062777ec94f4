//! Synthetic empirical-risk test problems with exactly known constants.
//!
//! Both families have additive sample dependence, so the gradient change
//! under a single-sample swap equals the sample difference itself. That
//! makes the adjacency bound `C` exact and independent of the query point.
//!
//! * `quadratic`: per-sample loss `l(x, xi) = 1/2 ||x - xi||^2`, any
//!   dimension. `L = 1`, `mu = 1`.
//! * `sine-quadratic` (d = 1): `l(x, xi) = x^2 + 3 sin^2 x + xi * x` with
//!   zero-mean bounded samples, so the global cost is `x^2 + 3 sin^2 x`
//!   with minimum 0 at the origin. `L = 8`, `mu = 0.175`. (The PL constant
//!   is sometimes quoted as "any value below 0.3", but dense grid
//!   minimization of `F'(x)^2 / (2 F(x))` gives 0.17553 at x ~ 2.20, so
//!   0.175 is the largest safe advertised value.)

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("sine-quadratic requires dimension 1, got {0}")]
    UnsupportedDim(usize),
    #[error("sample index {index} out of range for node with {len} samples")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("node index {0} out of range")]
    NodeOutOfRange(usize),
    #[error("need at least one node and one sample per node")]
    EmptyEnsemble,
    #[error("sample_bound must be positive, got {0}")]
    BadSampleBound(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Quadratic,
    SineQuadratic,
}

/// A local-cost ensemble with per-sample gradient oracles and known
/// constants. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Problem {
    pub kind: ProblemKind,
    pub dim: usize,
    /// samples[node][sample] is a `dim`-vector.
    samples: Vec<Vec<Vec<f64>>>,
    node_means: Vec<Vec<f64>>,
    grand_mean: Vec<f64>,
    /// Per-node average of `1/2 ||xi - b_i||^2` (quadratic constant term).
    node_var_halves: Vec<f64>,
    pub lipschitz: f64,
    pub mu: f64,
    pub f_star: f64,
    pub sigma_g: f64,
    pub adjacency_c: f64,
}

/// Builds a problem ensemble with `n` nodes and `samples_per_node` samples
/// drawn uniformly from `[-sample_bound, sample_bound]^d`.
pub fn make_problem<R: Rng + ?Sized>(
    kind: ProblemKind,
    dim: usize,
    n: usize,
    samples_per_node: usize,
    sample_bound: f64,
    rng: &mut R,
) -> Result<Problem, ProblemError> {
    if n == 0 || samples_per_node == 0 {
        return Err(ProblemError::EmptyEnsemble);
    }
    if !(sample_bound > 0.0) {
        return Err(ProblemError::BadSampleBound(sample_bound));
    }
    if kind == ProblemKind::SineQuadratic && dim != 1 {
        return Err(ProblemError::UnsupportedDim(dim));
    }

    let mut samples: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|_| {
            (0..samples_per_node)
                .map(|_| (0..dim).map(|_| rng.gen_range(-sample_bound..=sample_bound)).collect())
                .collect()
        })
        .collect();

    if kind == ProblemKind::SineQuadratic {
        // re-center the grand mean to zero so F(x) = x^2 + 3 sin^2 x exactly
        let total = (n * samples_per_node) as f64;
        let mean: f64 = samples.iter().flatten().map(|s| s[0]).sum::<f64>() / total;
        for node in &mut samples {
            for s in node {
                s[0] -= mean;
            }
        }
    }

    let node_means: Vec<Vec<f64>> = samples
        .iter()
        .map(|node| {
            (0..dim)
                .map(|c| node.iter().map(|s| s[c]).sum::<f64>() / node.len() as f64)
                .collect()
        })
        .collect();
    let grand_mean: Vec<f64> = (0..dim)
        .map(|c| node_means.iter().map(|m| m[c]).sum::<f64>() / n as f64)
        .collect();
    let node_var_halves: Vec<f64> = samples
        .iter()
        .zip(&node_means)
        .map(|(node, mean)| {
            node.iter()
                .map(|s| 0.5 * sq_dist(s, mean))
                .sum::<f64>()
                / node.len() as f64
        })
        .collect();

    let mut problem = Problem {
        kind,
        dim,
        samples,
        node_means,
        grand_mean,
        node_var_halves,
        lipschitz: 0.0,
        mu: 0.0,
        f_star: 0.0,
        sigma_g: 0.0,
        adjacency_c: 0.0,
    };

    match kind {
        ProblemKind::Quadratic => {
            problem.lipschitz = 1.0;
            problem.mu = 1.0;
            problem.adjacency_c = 2.0 * sample_bound * (dim as f64).sqrt();
            // E||g - grad f_i||^2 over a uniform single draw is the node
            // sample variance; bound it by the worst node
            problem.sigma_g = problem
                .node_var_halves
                .iter()
                .map(|&h| (2.0 * h).sqrt())
                .fold(0.0, f64::max);
            // F* = F(grand mean): minimizer of the averaged quadratic
            let minimizer = problem.grand_mean.clone();
            problem.f_star = problem.global_cost_raw(&minimizer);
        }
        ProblemKind::SineQuadratic => {
            problem.lipschitz = 8.0;
            // see the module docs: 0.3 overstates the PL constant; the true
            // infimum of F'^2/(2F) is 0.17553
            problem.mu = 0.175;
            problem.adjacency_c = 2.0 * sample_bound;
            problem.sigma_g = sample_bound;
            problem.f_star = 0.0;
        }
    }
    Ok(problem)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Problem {
    pub fn n_nodes(&self) -> usize {
        self.samples.len()
    }

    pub fn samples_per_node(&self) -> usize {
        self.samples[0].len()
    }

    pub fn node_mean(&self, i: usize) -> &[f64] {
        &self.node_means[i]
    }

    pub fn grand_mean(&self) -> &[f64] {
        &self.grand_mean
    }

    fn global_cost_raw(&self, x: &[f64]) -> f64 {
        (0..self.n_nodes()).map(|i| self.node_cost(i, x)).sum::<f64>() / self.n_nodes() as f64
    }

    /// `F(x)`, the average of the local costs.
    pub fn global_cost(&self, x: &[f64]) -> f64 {
        self.global_cost_raw(x)
    }

    /// Local empirical cost `f_i(x)`.
    pub fn node_cost(&self, i: usize, x: &[f64]) -> f64 {
        match self.kind {
            ProblemKind::Quadratic => 0.5 * sq_dist(x, &self.node_means[i]) + self.node_var_halves[i],
            ProblemKind::SineQuadratic => {
                let t = x[0];
                t * t + 3.0 * t.sin().powi(2) + self.node_means[i][0] * t
            }
        }
    }

    /// Exact local gradient, i.e. the average of the per-sample gradients.
    pub fn node_gradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        match self.kind {
            ProblemKind::Quadratic => {
                x.iter().zip(&self.node_means[i]).map(|(xc, bc)| xc - bc).collect()
            }
            ProblemKind::SineQuadratic => {
                let t = x[0];
                vec![2.0 * t + 3.0 * (2.0 * t).sin() + self.node_means[i][0]]
            }
        }
    }

    /// Gradient of `F` at `x`.
    pub fn global_gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n_nodes() as f64;
        let mut g = vec![0.0; self.dim];
        for i in 0..self.n_nodes() {
            for (gc, v) in g.iter_mut().zip(self.node_gradient(i, x)) {
                *gc += v / n;
            }
        }
        g
    }

    /// Per-sample gradient `grad_x l_i(x, xi_{i,j})`.
    pub fn sample_gradient(&self, i: usize, x: &[f64], sample_index: usize) -> Result<Vec<f64>, ProblemError> {
        let node = self.samples.get(i).ok_or(ProblemError::NodeOutOfRange(i))?;
        let xi = node
            .get(sample_index)
            .ok_or(ProblemError::IndexOutOfRange { index: sample_index, len: node.len() })?;
        Ok(match self.kind {
            ProblemKind::Quadratic => x.iter().zip(xi).map(|(xc, sc)| xc - sc).collect(),
            ProblemKind::SineQuadratic => {
                let t = x[0];
                vec![2.0 * t + 3.0 * (2.0 * t).sin() + xi[0]]
            }
        })
    }
}
