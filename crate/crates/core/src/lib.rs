//! Generation and scoring engine for causal dynamical-system benchmarks.
//!
//! The crate is `no_std` (it needs `alloc`) so the numerical core can be embedded
//! anywhere. Everything is deterministic given a seed: graphs, driver trajectories,
//! coupled propagation, the climate oscillator and the reference scorers all draw
//! from an explicitly passed [`SeededRng`].
//!
//! Module map:
//!
//! - [`graph`]: adjacency types, growth-with-redirection DAG sampling, confounder merge,
//!   lagged edges.
//! - [`systems`]: catalog of 3-D chaotic flows, RK4 / Euler / Euler-Maruyama integrators,
//!   sinusoidal drivers.
//! - [`coupling`]: hierarchically coupled models; driver allocation, linear edge maps,
//!   propagation and standardization.
//! - [`climate`]: seasonal recharge-oscillator model with coupling experiments.
//! - [`metrics`]: AUROC / AUPRC scoring and aggregation.
//! - [`baselines`]: lagged correlation, VAR-Granger and random scorers.
#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod baselines;
pub mod climate;
pub mod coupling;
mod error;
pub mod graph;
pub mod linalg;
pub mod math;
pub mod metrics;
pub mod rng;
pub mod simple;
pub mod systems;
pub mod tensor;

pub use error::{Error, Result};
pub use graph::{AdjMatrix, CausalGraph};
pub use rng::SeededRng;
pub use tensor::{Matrix, Tensor3, TrajectoryTensor};
