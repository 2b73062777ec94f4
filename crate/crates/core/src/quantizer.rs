//! Unbiased two-point probabilistic quantizer.
//!
//! An input `x` is rounded to one of the two neighboring points of the
//! `delta`-grid: the lower point with probability `1 - x/delta + floor(x/delta)`
//! and the upper point with the complement. The expectation of the output is
//! exactly `x` and the per-entry variance is `f(1-f) delta^2 <= delta^2/4`
//! for the fractional part `f`.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuantizerError {
    #[error("quantization step must be positive and finite, got {0}")]
    BadDelta(f64),
}

/// Quantization step `delta > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec {
    delta: f64,
}

impl QuantizerSpec {
    pub fn new(delta: f64) -> Result<Self, QuantizerError> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(QuantizerError::BadDelta(delta));
        }
        Ok(QuantizerSpec { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Exact two-point distribution of the quantizer at `x`:
/// `[(lower, p_lower), (upper, p_upper)]`.
///
/// Grid points land on the lower point with probability 1. Probabilities are
/// clipped to `[0, 1]` to absorb floating-point error near grid points.
pub fn quantizer_distribution(x: f64, spec: QuantizerSpec) -> [(f64, f64); 2] {
    let delta = spec.delta;
    let ratio = x / delta;
    let floor = ratio.floor();
    let lower = delta * floor;
    let upper = delta * (floor + 1.0);
    let p_lower = (1.0 - ratio + floor).clamp(0.0, 1.0);
    [(lower, p_lower), (upper, 1.0 - p_lower)]
}

/// Quantizes each entry independently, consuming one uniform draw per entry
/// in entry order.
pub fn quantize<R: Rng + ?Sized>(x: &[f64], spec: QuantizerSpec, rng: &mut R) -> Vec<f64> {
    x.iter()
        .map(|&xi| {
            let [(lower, p_lower), (upper, _)] = quantizer_distribution(xi, spec);
            if rng.gen::<f64>() < p_lower {
                lower
            } else {
                upper
            }
        })
        .collect()
}
