//! Single driver systems as causal graphs over their three state variables.
//!
//! Each variable is a scalar node (`node_dim = 1`); the ground truth is the Jacobian
//! support, self-dependence included.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::graph::AdjMatrix;
use crate::rng::split_seed;
use crate::systems::{self, DriverSystem, SdeConfig};
use crate::tensor::{Tensor3, TrajectoryTensor};
use crate::{Result, SeededRng};

pub const DELTA_SWEEP: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimpleConfig {
    pub num_timesteps: usize,
    pub num_trajectories: usize,
    pub delta: f64,
    pub seed: u64,
    pub max_retry: usize,
}

impl Default for SimpleConfig {
    fn default() -> Self {
        Self { num_timesteps: 1000, num_trajectories: 10, delta: 0.0, seed: 0, max_retry: systems::DEFAULT_MAX_RETRY }
    }
}

/// `[trajectories, T, 3, 1]` for one system; trajectory `k` uses stream `split(seed, k + 1)`.
pub fn simulate_simple(system: &DriverSystem, cfg: &SimpleConfig) -> Result<TrajectoryTensor> {
    let sde = SdeConfig { delta: cfg.delta };
    let mut out = Vec::with_capacity(cfg.num_trajectories);
    for k in 0..cfg.num_trajectories {
        let mut rng = SeededRng::new(split_seed(cfg.seed, k as u64 + 1));
        let path = systems::solve_system(system, cfg.num_timesteps, sde, cfg.max_retry, &mut rng)?;
        let flat: Vec<f64> = path.iter().flat_map(|x| x.iter().copied()).collect();
        out.push(Tensor3::from_vec([cfg.num_timesteps, 3, 1], flat)?);
    }
    if out.is_empty() {
        return Ok(TrajectoryTensor::zeros([0, cfg.num_timesteps, 3, 1]));
    }
    TrajectoryTensor::stack(&out)
}

/// Variable to hide for the confounded variant: the one driving the most other
/// variables (at least two), lowest index on ties.
pub fn confounder_variable(truth: &AdjMatrix) -> Option<usize> {
    let off = truth.without_diagonal();
    let best = (0..off.n()).map(|k| (off.out_degree(k), k)).filter(|&(deg, _)| deg >= 2).min_by_key(|&(deg, k)| (usize::MAX - deg, k));
    best.map(|(_, k)| k)
}
