//! Step-size schedules, feasibility validation and the synchronous
//! iteration loop.
//!
//! One round: every node perturbs its state with Gaussian noise, quantizes
//! the perturbed state, broadcasts it, then mixes the received values with
//! doubly stochastic weights and takes a minibatch gradient step:
//!
//! `x_{i,k+1} = (1 - beta_hat) x_{i,k} + beta_hat sum_j a_ij z_{j,k} - alpha_hat g_{i,k}`
//!
//! All broadcast values of a round are computed before any node updates.

use thiserror::Error;

use crate::analysis::consensus_error;
use crate::network::Network;
use crate::oracle::{minibatch_gradient, subsample, Minibatch, OracleError};
use crate::privacy::{self, PrivacyError, PrivacyLedger, PrivacySchedule};
use crate::problems::Problem;
use crate::quantizer::{quantize, QuantizerSpec};
use crate::rng::{derive_stream, Purpose};

/// Iterate entries beyond this magnitude abort the run.
pub const DIVERGENCE_GUARD: f64 = 1e12;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("horizon K must be at least 2, got {0}")]
    BadHorizon(usize),
    #[error("schedule coefficient {name} must be positive, got {value}")]
    BadCoefficient { name: &'static str, value: f64 },
    #[error("Gamma is undefined: K^beta equals rho_L * a2")]
    GammaUndefined,
    #[error("iterate diverged at iteration {iteration} (|entry| > 1e12)")]
    NumericalDivergence { iteration: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
}

/// Horizon-indexed step-size, mixing and sample-size schedules:
/// `alpha_hat = a1 (ln K)^2 / K^alpha`, `beta_hat = a2 / K^beta`,
/// `gamma_hat = floor(a3 K^gamma) + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedules {
    pub horizon: usize,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub alpha_exp: f64,
    pub beta_exp: f64,
    pub gamma_exp: f64,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub gamma_hat: u64,
}

impl Schedules {
    pub fn new(
        a1: f64,
        a2: f64,
        a3: f64,
        alpha_exp: f64,
        beta_exp: f64,
        gamma_exp: f64,
        horizon: usize,
    ) -> Result<Self, SimError> {
        if horizon < 2 {
            return Err(SimError::BadHorizon(horizon));
        }
        for (name, value) in [("a1", a1), ("a2", a2), ("a3", a3)] {
            if !(value > 0.0) {
                return Err(SimError::BadCoefficient { name, value });
            }
        }
        let big_k = horizon as f64;
        let alpha_hat = a1 * big_k.ln().powi(2) / big_k.powf(alpha_exp);
        let beta_hat = a2 / big_k.powf(beta_exp);
        let gamma_hat = (a3 * big_k.powf(gamma_exp)).floor() as u64 + 1;
        Ok(Schedules {
            horizon,
            a1,
            a2,
            a3,
            alpha_exp,
            beta_exp,
            gamma_exp,
            alpha_hat,
            beta_hat,
            gamma_hat,
        })
    }

    /// Test constructor with the derived quantities pinned directly.
    pub fn with_hats(alpha_hat: f64, beta_hat: f64, gamma_hat: u64, horizon: usize) -> Self {
        Schedules {
            horizon,
            a1: 1.0,
            a2: 1.0,
            a3: 1.0,
            alpha_exp: 1.0,
            beta_exp: 1.0,
            gamma_exp: 1.0,
            alpha_hat,
            beta_hat,
            gamma_hat,
        }
    }
}

/// One evaluated feasibility condition with its numeric slack
/// (positive slack means the condition holds).
#[derive(Debug, Clone, Copy)]
pub struct Condition {
    pub name: &'static str,
    pub holds: bool,
    pub slack: f64,
}

/// Result of checking the step-size/sample-size/noise feasibility
/// conditions, plus the coefficient windows under which they are
/// satisfiable.
#[derive(Debug, Clone)]
pub struct Assumption4Report {
    pub gamma: f64,
    pub conditions: [Condition; 5],
    pub feasible_a2_interval: Option<(f64, f64)>,
    pub feasible_a1_interval: Option<(f64, f64)>,
}

impl Assumption4Report {
    pub fn all_hold(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }
}

/// Evaluates all five feasibility conditions; never refuses to report.
/// Callers decide whether to run anyway.
pub fn validate_assumption4(
    s: &Schedules,
    net: &Network,
    problem: &Problem,
    sigma_exp: f64,
) -> Result<Assumption4Report, SimError> {
    let big_k = s.horizon as f64;
    let ln_k = big_k.ln();
    let rho = net.rho_l();
    let k_beta = big_k.powf(s.beta_exp);
    let denom = k_beta - rho * s.a2;
    if denom == 0.0 {
        return Err(SimError::GammaUndefined);
    }
    let gamma = (2.0 * rho * s.a2 * k_beta - rho * rho * s.a2 * s.a2
        - big_k.powf(2.0 * s.beta_exp - 1.0) * ln_k)
        / (denom * denom);

    let l = problem.lipschitz;
    let mu = problem.mu;
    let n = net.n() as f64;
    let ah = s.alpha_hat;

    let c1_slack = 2.0 * s.alpha_exp - s.beta_exp - 1.0;
    // the alpha <= 1 boundary is inclusive, so it gates the condition but
    // does not enter the slack minimum
    let c2_slack = (s.beta_exp - (sigma_exp + 0.5).max(0.0)).min(s.alpha_exp - s.beta_exp);
    let c3_value = 2.0 * s.a2 * k_beta - s.a2 * s.a2 - big_k.powf(2.0 * s.beta_exp - 1.0) * ln_k;

    // the two contraction factors; both need Gamma > 0 to make sense
    let factor1 = 1.0 - ln_k / big_k + 2.0 * (1.0 + gamma) * ah * ah * l * l / gamma;
    let factor2 = 1.0 - mu * ah + 2.0 * ah * ah * l * l + 4.0 * n * (1.0 + gamma) * ah * ah * l / gamma;
    let contraction = |v: f64| -> (bool, f64) {
        let slack = v.min(1.0 - v);
        (gamma > 0.0 && v > 0.0 && v < 1.0, slack)
    };
    let (c4_holds, c4_slack) = contraction(factor1);
    let (c5_holds, c5_slack) = contraction(factor2);

    let conditions = [
        Condition { name: "2*alpha - beta > 1", holds: c1_slack > 0.0, slack: c1_slack },
        Condition {
            name: "max(sigma + 1/2, 0) < beta < alpha <= 1",
            holds: c2_slack > 0.0 && s.alpha_exp <= 1.0,
            slack: c2_slack,
        },
        Condition {
            name: "2 a2 K^beta - a2^2 - K^(2 beta - 1) ln K > 0",
            holds: c3_value > 0.0,
            slack: c3_value,
        },
        Condition { name: "consensus contraction factor in (0, 1)", holds: c4_holds, slack: c4_slack },
        Condition { name: "optimality contraction factor in (0, 1)", holds: c5_holds, slack: c5_slack },
    ];

    // feasibility windows for a2 and a1
    let root = (1.0 - ln_k / big_k).max(0.0).sqrt();
    let feasible_a2_interval = Some((k_beta * (1.0 - root) / rho, k_beta * (1.0 + root) / rho));
    let feasible_a1_interval = if gamma > 0.0 {
        let k_alpha = big_k.powf(s.alpha_exp);
        let bound1 = k_alpha / (mu * ln_k);
        let bound2 = gamma * mu * k_alpha / ((4.0 * n * (1.0 + gamma) * l + 2.0 * gamma * l * l) * ln_k.powi(2));
        let bound3 = (gamma * big_k.powf(2.0 * s.alpha_exp - 1.0)
            / (2.0 * (1.0 + gamma) * l * l * ln_k.powi(2)))
        .sqrt();
        Some((0.0, bound1.min(bound2).min(bound3)))
    } else {
        None
    };

    Ok(Assumption4Report { gamma, conditions, feasible_a2_interval, feasible_a1_interval })
}

/// How the per-node initial iterates are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitRule {
    Zeros,
    Constant(f64),
    Uniform { low: f64, high: f64 },
}

/// Everything a run needs besides the constructed network and problem.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub schedules: Schedules,
    pub quantizer: QuantizerSpec,
    pub privacy: PrivacySchedule,
    pub delta_sum_start: usize,
    /// Multiplier on the privacy-noise standard deviation; 0 disables noise.
    pub noise_scale: f64,
    pub seed: u64,
    pub init: InitRule,
}

/// One per-iteration record, captured before the update of that iteration.
#[derive(Debug, Clone)]
pub struct Record {
    pub k: usize,
    pub mean_gap: f64,
    pub max_node_gap: f64,
    pub consensus_err: f64,
    pub eps_k: f64,
    pub cum_eps: f64,
    /// Oracle samples consumed up to and including iteration k.
    pub samples: u64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub terminal_states: Vec<Vec<f64>>,
    pub n: usize,
    pub gamma_hat: u64,
}

impl Trajectory {
    pub fn final_mean_gap(&self) -> f64 {
        self.records.last().map(|r| r.mean_gap).unwrap_or(f64::NAN)
    }

    pub fn total_samples(&self) -> u64 {
        self.records.last().map(|r| r.samples).unwrap_or(0)
    }
}

/// Executes one synchronous round, mutating `states` in place.
///
/// Per-node randomness is keyed by (seed, node, iteration, purpose), so the
/// result does not depend on node processing order.
pub fn step(
    states: &mut [Vec<f64>],
    k: usize,
    net: &Network,
    spec: &RunSpec,
    problem: &Problem,
) -> Result<(), SimError> {
    let n = states.len();
    let dim = problem.dim;
    let s = &spec.schedules;
    let std = spec.noise_scale * privacy::noise_std(k, &spec.privacy);

    // broadcast phase: every z_{i,k} is fixed before any state moves
    let mut broadcasts: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (i, x) in states.iter().enumerate() {
        let mut noise_rng = derive_stream(spec.seed, i as u64, k as u64, Purpose::Noise);
        let noise = privacy::sample_noise(dim, std, &mut noise_rng);
        let perturbed: Vec<f64> = x.iter().zip(&noise).map(|(a, b)| a + b).collect();
        let mut q_rng = derive_stream(spec.seed, i as u64, k as u64, Purpose::Quantize);
        broadcasts.push(quantize(&perturbed, spec.quantizer, &mut q_rng));
    }

    // update phase
    let d_total = problem.samples_per_node();
    let mut next: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (i, x) in states.iter().enumerate() {
        let mut mixed = vec![0.0; dim];
        for (j, z) in broadcasts.iter().enumerate() {
            let w = net.weight(i, j);
            if w != 0.0 {
                for (m, v) in mixed.iter_mut().zip(z) {
                    *m += w * v;
                }
            }
        }
        let mut sub_rng = derive_stream(spec.seed, i as u64, k as u64, Purpose::Subsample);
        let indices = subsample(d_total, s.gamma_hat, &mut sub_rng)?;
        let batch = Minibatch { node: i, iteration: k, indices };
        let grad = minibatch_gradient(problem, i, x, &batch)?;

        let mut new_x = vec![0.0; dim];
        for c in 0..dim {
            new_x[c] = (1.0 - s.beta_hat) * x[c] + s.beta_hat * mixed[c] - s.alpha_hat * grad[c];
            if !new_x[c].is_finite() || new_x[c].abs() > DIVERGENCE_GUARD {
                return Err(SimError::NumericalDivergence { iteration: k });
            }
        }
        next.push(new_x);
    }
    for (x, nx) in states.iter_mut().zip(next) {
        *x = nx;
    }
    Ok(())
}

/// Runs the full loop for `k = 0..=K`, recording per-iteration metrics and
/// joining the analytic accountant's per-step epsilons into the records.
pub fn run(net: &Network, problem: &Problem, spec: &RunSpec) -> Result<(Trajectory, PrivacyLedger), SimError> {
    let n = net.n();
    let dim = problem.dim;
    let horizon = spec.schedules.horizon;
    let ledger = privacy::cumulative_budget(horizon, &spec.schedules, &spec.privacy, spec.delta_sum_start)?;

    let mut states: Vec<Vec<f64>> = (0..n)
        .map(|i| match spec.init {
            InitRule::Zeros => vec![0.0; dim],
            InitRule::Constant(v) => vec![v; dim],
            InitRule::Uniform { low, high } => {
                let mut rng = derive_stream(spec.seed, i as u64, 0, Purpose::Init);
                use rand::Rng;
                (0..dim).map(|_| rng.gen_range(low..=high)).collect()
            }
        })
        .collect();

    let mut records = Vec::with_capacity(horizon + 1);
    let mut samples: u64 = 0;
    for k in 0..=horizon {
        let mean_state: Vec<f64> = (0..dim)
            .map(|c| states.iter().map(|x| x[c]).sum::<f64>() / n as f64)
            .collect();
        let mean_gap = problem.global_cost(&mean_state) - problem.f_star;
        let max_node_gap = states
            .iter()
            .map(|x| problem.global_cost(x) - problem.f_star)
            .fold(f64::MIN, f64::max);
        let entry = ledger.entries[k];
        samples += n as u64 * spec.schedules.gamma_hat;
        records.push(Record {
            k,
            mean_gap,
            max_node_gap,
            consensus_err: consensus_error(&states),
            eps_k: entry.epsilon_k,
            cum_eps: entry.cum_epsilon,
            samples,
        });
        step(&mut states, k, net, spec, problem)?;
    }

    let traj = Trajectory { records, terminal_states: states, n, gamma_hat: spec.schedules.gamma_hat };
    Ok((traj, ledger))
}
