//! Privacy-noise schedules and the analytic accountant.
//!
//! The accountant is purely analytic: it composes worst-case per-step
//! sensitivities `Delta_k`, Gaussian-mechanism budgets
//! `eps_k = c_k Delta_k / sigma_{k+1}` with `c_k^2 = 4 ln(1.25/delta_k)`,
//! and the cumulative pair `(sum eps_k, delta_hat)` with
//! `delta_hat = exp(sum eps_k) * (prod (1 + delta_k) - 1)`.
//! It never inspects realized noise.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::simulator::Schedules;

#[derive(Debug, Error)]
pub enum PrivacyError {
    #[error("per-step delta_{k} = {delta} is not below 1.25")]
    InvalidDelta { k: usize, delta: f64 },
    #[error("invalid privacy schedule: {0}")]
    BadSchedule(String),
}

/// Noise and per-step delta schedules plus the adjacency gradient bound `C`.
///
/// The noise standard deviation at iteration `k` is
/// `(k + noise_offset)^sigma_exp`; `noise_offset = 1` reproduces the
/// `(k+1)^sigma` form, larger offsets shift the schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacySchedule {
    pub sigma_exp: f64,
    pub noise_offset: u64,
    pub delta_exp: f64,
    pub c: f64,
}

impl PrivacySchedule {
    pub fn new(sigma_exp: f64, noise_offset: u64, delta_exp: f64, c: f64) -> Result<Self, PrivacyError> {
        if noise_offset < 1 {
            return Err(PrivacyError::BadSchedule("noise_offset must be >= 1".into()));
        }
        if !(delta_exp > 0.0) {
            return Err(PrivacyError::BadSchedule(format!("delta_exp must be > 0, got {delta_exp}")));
        }
        if !(c >= 0.0) {
            return Err(PrivacyError::BadSchedule(format!("C must be >= 0, got {c}")));
        }
        Ok(PrivacySchedule { sigma_exp, noise_offset, delta_exp, c })
    }

    /// `delta_k = 1/(k+1)^delta_exp`.
    pub fn delta_k(&self, k: usize) -> f64 {
        1.0 / ((k + 1) as f64).powf(self.delta_exp)
    }
}

/// One accountant row.
#[derive(Debug, Clone, Copy)]
pub struct LedgerEntry {
    pub k: usize,
    pub delta_k: f64,
    pub sensitivity: f64,
    pub c_k: f64,
    pub epsilon_k: f64,
    pub cum_epsilon: f64,
}

/// Per-step records and cumulative budget over a horizon.
#[derive(Debug, Clone)]
pub struct PrivacyLedger {
    pub entries: Vec<LedgerEntry>,
    pub cum_epsilon: f64,
    pub delta_hat: f64,
    pub cum_delta: f64,
    pub delta_sum_start: usize,
}

/// Privacy-noise standard deviation `sigma_k = (k + offset)^sigma_exp`.
pub fn noise_std(k: usize, sched: &PrivacySchedule) -> f64 {
    ((k as f64) + sched.noise_offset as f64).powf(sched.sigma_exp)
}

/// `dim` i.i.d. Gaussian draws with the given standard deviation.
///
/// Sampling uses the ziggurat method from `rand_distr::Normal`.
pub fn sample_noise<R: Rng + ?Sized>(dim: usize, std: f64, rng: &mut R) -> Vec<f64> {
    assert!(std >= 0.0, "noise std must be nonnegative");
    if std == 0.0 {
        return vec![0.0; dim];
    }
    let normal = Normal::new(0.0, std).unwrap();
    (0..dim).map(|_| normal.sample(rng)).collect()
}

/// Worst-case sensitivity `Delta_k = (alpha_hat C / gamma_hat) sum_{m=0}^{k} |1-beta_hat|^m`,
/// in closed form.
pub fn sensitivity_bound(
    k: usize,
    alpha_hat: f64,
    beta_hat: f64,
    gamma_hat: u64,
    sched: &PrivacySchedule,
) -> f64 {
    let base = alpha_hat * sched.c / gamma_hat as f64;
    let r = (1.0 - beta_hat).abs();
    let geo = if (r - 1.0).abs() < 1e-15 {
        (k + 1) as f64
    } else {
        (1.0 - r.powi(k as i32 + 1)) / (1.0 - r)
    };
    base * geo
}

/// `c_k = 2 sqrt(ln(1.25/delta_k))`.
pub fn gaussian_multiplier(k: usize, sched: &PrivacySchedule) -> Result<f64, PrivacyError> {
    let delta_k = sched.delta_k(k);
    if 1.25 / delta_k <= 1.0 {
        return Err(PrivacyError::InvalidDelta { k, delta: delta_k });
    }
    Ok(2.0 * (1.25 / delta_k).ln().sqrt())
}

/// Per-step budget `eps_k = c_k Delta_k / sigma_{k+1}`.
///
/// The accountant calibrates against the noise added to the *next* state,
/// so the denominator is `sigma_{k+1}` while the dynamics add noise with
/// `sigma_k` at iteration `k`.
pub fn per_step_epsilon(
    k: usize,
    schedules: &Schedules,
    sched: &PrivacySchedule,
) -> Result<f64, PrivacyError> {
    let c_k = gaussian_multiplier(k, sched)?;
    let delta = sensitivity_bound(k, schedules.alpha_hat, schedules.beta_hat, schedules.gamma_hat, sched);
    Ok(c_k * delta / noise_std(k + 1, sched))
}

/// Closed-form upper bound on `eps_k` in terms of the raw coefficients:
/// `2 C a1 (ln K)^2 sqrt(ln(1.25 (k+1)^delta)) / (a2 a3 K^(alpha+gamma-beta) sigma_{k+1})`.
///
/// This follows from `Delta_k <= alpha_hat C / (beta_hat gamma_hat)` with
/// `alpha_hat/beta_hat = (a1/a2)(ln K)^2 K^(beta-alpha)` and
/// `gamma_hat >= a3 K^gamma`. Valid whenever `0 < a2 < K^beta`.
pub fn per_step_epsilon_bound(k: usize, schedules: &Schedules, sched: &PrivacySchedule) -> f64 {
    let s = schedules;
    let big_k = s.horizon as f64;
    let num = 2.0
        * sched.c
        * s.a1
        * big_k.ln().powi(2)
        * (1.25 * ((k + 1) as f64).powf(sched.delta_exp)).ln().sqrt();
    let den = s.a2 * s.a3 * big_k.powf(s.alpha_exp + s.gamma_exp - s.beta_exp) * noise_std(k + 1, sched);
    num / den
}

/// Builds the full ledger over `k = 0..=K`.
///
/// `delta_sum_start` selects where the delta product/sum begins (0 or 1);
/// the product is evaluated in log space as `expm1(sum log1p(delta_k))`.
pub fn cumulative_budget(
    horizon: usize,
    schedules: &Schedules,
    sched: &PrivacySchedule,
    delta_sum_start: usize,
) -> Result<PrivacyLedger, PrivacyError> {
    assert!(delta_sum_start <= 1, "delta_sum_start must be 0 or 1");
    let mut entries = Vec::with_capacity(horizon + 1);
    let mut cum_epsilon = 0.0;
    let mut log_prod = 0.0;
    let mut cum_delta = 0.0;
    for k in 0..=horizon {
        let delta_k = sched.delta_k(k);
        let c_k = gaussian_multiplier(k, sched)?;
        let sensitivity =
            sensitivity_bound(k, schedules.alpha_hat, schedules.beta_hat, schedules.gamma_hat, sched);
        let epsilon_k = c_k * sensitivity / noise_std(k + 1, sched);
        cum_epsilon += epsilon_k;
        if k >= delta_sum_start {
            log_prod += delta_k.ln_1p();
            cum_delta += delta_k;
        }
        entries.push(LedgerEntry { k, delta_k, sensitivity, c_k, epsilon_k, cum_epsilon });
    }
    // exp overflows past ~709; report +inf explicitly rather than NaN
    let delta_hat = if cum_epsilon > 700.0 {
        f64::INFINITY
    } else {
        cum_epsilon.exp() * log_prod.exp_m1()
    };
    Ok(PrivacyLedger { entries, cum_epsilon, delta_hat, cum_delta, delta_sum_start })
}
