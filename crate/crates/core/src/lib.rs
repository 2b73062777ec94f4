//! Decentralized stochastic gradient descent with privacy noise, probabilistic
//! quantization and gossip averaging, plus the analytic accountant that tracks
//! the cumulative (epsilon, delta) budget of a run.
//!
//! The crate is organized around the stages of a simulated round:
//!
//! * [`network`] — communication topologies with doubly stochastic weights and
//!   the algebraic connectivity of their Laplacian.
//! * [`quantizer`] — the unbiased two-point probabilistic quantizer.
//! * [`privacy`] — Gaussian noise schedules, sensitivity bounds and the
//!   per-step / cumulative privacy ledger.
//! * [`problems`] — synthetic test problems with known constants
//!   (Lipschitz, PL, adjacency bound, gradient-noise bound).
//! * [`oracle`] — minibatch subsampling without replacement.
//! * [`simulator`] — step-size schedules, feasibility validation and the
//!   synchronous iteration loop.
//! * [`analysis`] — consensus error, optimality gaps, rate fitting,
//!   high-probability checks and oracle-complexity counting.
//! * [`config`] — strict JSON run configuration shared with the CLI.

pub mod analysis;
pub mod config;
pub mod network;
pub mod oracle;
pub mod privacy;
pub mod problems;
pub mod quantizer;
pub mod rng;
pub mod simulator;
