//! Friction-aware, regime-conditioned policy optimization laboratory.
//!
//! The crate hosts a synthetic regime-switching market simulator, a
//! microstructure-consistent execution cost model, exact feasible-set
//! projections, a regime-conditioned stochastic policy with hand-rolled
//! reverse-mode gradients, the trade-space trust-region PPO trainer, parity
//! baselines, after-cost performance metrics, scenario-level inference, and
//! executable property audits of the theory the method relies on.
//!
//! Numeric kernels are generic over [`num::Real`] (`f32`/`f64`); simulation,
//! training, and orchestration run in the crate-level [`Scalar`] alias.

pub mod baselines;
pub mod error;
pub mod feasible;
pub mod frictions;
pub mod inference;
pub mod metrics;
pub mod mktsim;
pub mod num;
pub mod policy;
pub mod rngs;
pub mod runner;
pub mod train;
pub mod verify;

/// Default scalar type for simulation, training, and orchestration.
pub type Scalar = f64;

/// Portfolio weight vector in the default scalar type.
pub type Weights = Vec<Scalar>;

/// Return series in the default scalar type.
pub type ReturnSeries = metrics::ReturnSeries<Scalar>;

pub use error::{Error, Result};
