//! Minibatch subsampling without replacement and gradient assembly.

use rand::Rng;
use thiserror::Error;

use crate::problems::{Problem, ProblemError};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("batch size {gamma_hat} exceeds dataset size {available}")]
    BatchTooLarge { gamma_hat: u64, available: usize },
    #[error("batch size must be at least 1")]
    EmptyBatch,
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// A set of distinct sample indices drawn for one (node, iteration).
#[derive(Debug, Clone)]
pub struct Minibatch {
    pub node: usize,
    pub iteration: usize,
    pub indices: Vec<usize>,
}

/// Draws `gamma_hat` distinct indices uniformly without replacement from
/// `0..total` by a partial Fisher-Yates shuffle. Every subset of size
/// `gamma_hat` is equally likely.
pub fn subsample<R: Rng + ?Sized>(
    total: usize,
    gamma_hat: u64,
    rng: &mut R,
) -> Result<Vec<usize>, OracleError> {
    if gamma_hat == 0 {
        return Err(OracleError::EmptyBatch);
    }
    if gamma_hat as usize > total {
        return Err(OracleError::BatchTooLarge { gamma_hat, available: total });
    }
    let k = gamma_hat as usize;
    let mut pool: Vec<usize> = (0..total).collect();
    for i in 0..k {
        let j = rng.gen_range(i..total);
        pool.swap(i, j);
    }
    pool.truncate(k);
    Ok(pool)
}

/// Mean of the per-sample gradients over the batch. A full batch returns the
/// exact local gradient.
pub fn minibatch_gradient(
    problem: &Problem,
    node: usize,
    x: &[f64],
    batch: &Minibatch,
) -> Result<Vec<f64>, OracleError> {
    let mut g = vec![0.0; problem.dim];
    let scale = 1.0 / batch.indices.len() as f64;
    for &idx in &batch.indices {
        let gs = problem.sample_gradient(node, x, idx)?;
        for (acc, v) in g.iter_mut().zip(gs) {
            *acc += v * scale;
        }
    }
    Ok(g)
}
