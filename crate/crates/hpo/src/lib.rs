//! Hyperparameter optimization framework with classical optimizers (random
//! search, CMA-ES, TPE), LLM-prompted optimizers, and the Centaur hybrid
//! that shares CMA-ES's internal state with an LLM.
//!
//! Studies run one trial at a time: an optimizer `ask`s for a proposal, the
//! runner materializes and executes it under resource limits, failures are
//! penalized with a finite objective, and the result is `tell`-ed back and
//! appended to an on-disk study log. All randomness flows through named,
//! independently seeded streams so runs are reproducible and resumable.

pub mod centaur;
pub mod cli;
pub mod cmaes;
pub mod llm;
pub mod metrics;
pub mod optim;
pub mod runner;
pub mod space;
pub mod synthetic;
pub mod tpe;

/// Scalar type used by the framework's public surface. The numeric kernels
/// in [`cmaes`], [`tpe`], [`metrics`], and [`synthetic`] are generic over
/// `num_traits::Float` and default to this.
pub type Real = f64;

/// Objective assigned to failed trials; finite so every surrogate stays
/// well-defined while ranking failures behind any valid result.
pub const DEFAULT_PENALTY: Real = 100.0;
