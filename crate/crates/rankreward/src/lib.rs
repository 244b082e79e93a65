//! # rankreward
//!
//! Listwise preference-based reward learning and policy-gradient training,
//! exercised end-to-end on a synthetic slot-filling dialogue environment.
//!
//! The crate is organized around a small training pipeline:
//!
//! 1. [`slotworld`] generates a scored corpus of dialogue trajectories from a
//!    scripted expert corrupted by controllable noise.
//! 2. [`reward`] fits a turn-level reward function so that accumulated
//!    trajectory rewards reproduce the ranking induced by the automatic
//!    evaluation scores, using the listwise losses in [`ranking`].
//! 3. [`policy`] trains a dialogue policy against the frozen reward function
//!    with a reward-weighted behavior-cloning anchor and an optional
//!    Gumbel-softmax policy-gradient term.
//! 4. [`toy`] contains a self-contained categorical reward-maximization
//!    experiment comparing the exact gradient, REINFORCE, and Gumbel-softmax
//!    estimators, including gradient-variance measurement.
//!
//! Every training entry point is deterministic given its seed; see
//! [`cli`] for the file-based command interface and the `examples/`
//! directory for one runnable example per capability.

pub mod check;
pub mod cli;
pub mod params;
pub mod policy;
pub mod ranking;
pub mod reward;
pub mod slotworld;
pub mod toy;

use serde::{Deserialize, Serialize};

/// Selector for the policy-gradient estimator used by [`policy`] and [`toy`].
///
/// `Exact` enumerates the action space and is only feasible for small,
/// discrete problems; it serves as the unbiasedness oracle for the two
/// stochastic estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Exact,
    Reinforce,
    GumbelSoftmax,
}
