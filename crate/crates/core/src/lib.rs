//! Episodic regret minimization in linear MDPs under aggregate bandit
//! feedback: only the sum of an episode's rewards is observed.
//!
//! * [`mdp`]: environments, policies, simulation and exact evaluation.
//! * [`estimators`]: ridge covariances, least-squares reward and dynamics
//!   estimates, Gaussian perturbations.
//! * [`relsvi`]: randomized-ensemble least-squares value iteration.
//! * [`repo`]: randomized-ensemble policy optimization (linear and tabular).
//! * [`properties`]: executable checks of the supporting lemmas.
//! * [`harness`]: environment files, generators, experiment driver, CSV and plots.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod estimators;
pub mod harness;
pub mod mdp;
pub mod properties;
pub mod relsvi;
pub mod repo;
pub mod rng;

pub use error::{Error, Result};
