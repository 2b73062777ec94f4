//! Post-run diagnostics: consensus error, optimality gaps, empirical
//! convergence-rate fitting, tail-probability checks, and oracle-complexity
//! accounting.

use thiserror::Error;

use crate::problems::Problem;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("optimality gap at index {index} is negative beyond tolerance: {value}")]
    NegativeGap { index: usize, value: f64 },
    #[error("rate fit needs at least 2 strictly positive points, got {0}")]
    TooFewPoints(usize),
    #[error("empirical check needs at least 1 trial")]
    NoTrials,
}

/// Total squared deviation of per-node states from the network average:
/// `sum_i ||x_i - x_bar||^2`.
pub fn consensus_error(states: &[Vec<f64>]) -> f64 {
    let n = states.len();
    if n == 0 {
        return 0.0;
    }
    let dim = states[0].len();
    let mean: Vec<f64> = (0..dim)
        .map(|c| states.iter().map(|x| x[c]).sum::<f64>() / n as f64)
        .collect();
    states
        .iter()
        .map(|x| x.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum::<f64>()
}

/// `F(x) - F*`, clamped at zero for roundoff; a gap genuinely below the
/// tolerance signals a wrong `F*`.
pub fn optimality_gap(problem: &Problem, x: &[f64]) -> Result<f64, AnalysisError> {
    let value = problem.global_cost(x) - problem.f_star;
    if value < -1e-9 {
        Err(AnalysisError::NegativeGap { index: 0, value })
    } else {
        Ok(value.max(0.0))
    }
}

/// Clamps tiny negative gaps (roundoff below the optimum) to zero and
/// rejects anything genuinely negative.
pub fn optimality_gaps(raw: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    raw.iter()
        .enumerate()
        .map(|(index, &value)| {
            if value < -1e-9 {
                Err(AnalysisError::NegativeGap { index, value })
            } else {
                Ok(value.max(0.0))
            }
        })
        .collect()
}

/// Least-squares fit of `ln y = intercept + slope ln k` on a window of
/// `(k, y)` pairs.
#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual_rms: f64,
    /// Number of points actually used.
    pub points: usize,
}

/// Least-squares fit of `ln y = intercept + slope ln k` over the given
/// `(k, y)` pairs; points with `y <= 0` or `k == 0` are skipped.
///
/// For a power law `y = c k^p` the slope recovers `p` exactly.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit, AnalysisError> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(k, y)| k > 0.0 && y > 0.0)
        .map(|&(k, y)| (k.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return Err(AnalysisError::TooFewPoints(logs.len()));
    }
    let m = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let denom = m * sxx - sx * sx;
    if denom == 0.0 {
        return Err(AnalysisError::TooFewPoints(1));
    }
    let slope = (m * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / m;
    let ss: f64 = logs
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(RateFit { slope, intercept, residual_rms: (ss / m).sqrt(), points: logs.len() })
}

/// Outcome of an empirical Markov-inequality check at level `delta_star`.
#[derive(Debug, Clone, Copy)]
pub struct HighProbReport {
    /// Sample mean of the trial values.
    pub mean: f64,
    /// Markov threshold `a = mean / delta_star`.
    pub threshold: f64,
    /// Fraction of trials exceeding the threshold.
    pub exceed_fraction: f64,
    /// `delta_star` plus two binomial standard errors.
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks `P(X >= mean/delta_star) <= delta_star` empirically. The pass
/// margin allows two binomial standard errors at the given trial count.
pub fn high_prob_check(values: &[f64], delta_star: f64) -> Result<HighProbReport, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::NoTrials);
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let threshold = mean / delta_star;
    // strict exceedance: a point mass sitting exactly at the Markov
    // threshold does not count against the bound
    let exceed = values.iter().filter(|&&v| v > threshold).count() as f64 / m;
    let tolerance = delta_star + 2.0 * (delta_star * (1.0 - delta_star) / m).sqrt();
    Ok(HighProbReport { mean, threshold, exceed_fraction: exceed, tolerance, pass: exceed <= tolerance })
}

/// Oracle-complexity summary: the first recorded iteration whose gap drops
/// strictly below `eta`, and the total samples consumed through it.
#[derive(Debug, Clone, Copy)]
pub struct OracleComplexity {
    pub eta: f64,
    /// First iteration index with gap < eta, if reached.
    pub n_eta: Option<usize>,
    /// `n * gamma_hat * (n_eta + 1)` when reached.
    pub total_samples: Option<u64>,
}

/// Scans the gap sequence for the first crossing below `eta` and converts
/// it to a total sample count across the network.
pub fn oracle_complexity(gaps: &[f64], eta: f64, n_nodes: usize, gamma_hat: u64) -> OracleComplexity {
    let n_eta = gaps.iter().position(|&g| g < eta);
    let total_samples = n_eta.map(|k| n_nodes as u64 * gamma_hat * (k as u64 + 1));
    OracleComplexity { eta, n_eta, total_samples }
}
