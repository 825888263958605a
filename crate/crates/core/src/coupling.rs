//! Hierarchically coupled causal models.
//!
//! A coupled model is a sampled DAG whose root nodes carry driver trajectories
//! (chaotic systems or sinusoids) and whose other nodes aggregate linear transforms of
//! their parents: `x_i(t) = sum_{k in pa(i)} W_k x_k(t - lag_ki) + b_k`, with one
//! `d × d` map per source node.
//!
//! Lagged edges are simulated on an extended horizon: every series is computed over
//! `T + lead` steps and the last `T` are kept, so a lagged parent's value `tau` steps
//! back is always available inside the kept window.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::graph::{self, CausalGraph, GnrConfig};
use crate::math::{mean_var, sqrt};
use crate::rng::split_seed;
use crate::systems::{self, Catalog, SdeConfig, SinusoidConfig};
use crate::tensor::{Tensor3, TrajectoryTensor};
use crate::{Error, Result, SeededRng};

/// Node-count presets for the coupled tier.
pub const NODE_PRESET_STANDARD: [usize; 3] = [3, 5, 10];
pub const NODE_PRESET_COMPACT: [usize; 3] = [3, 5, 8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub num_nodes: usize,
    pub node_dim: usize,
    pub num_timesteps: usize,
    pub num_trajectories: usize,
    /// Relative weights of (dynamical, periodic) root drivers.
    pub init_ratios: (f64, f64),
    /// `"random"` or a catalog name.
    pub system_name: String,
    pub delta: f64,
    pub confounders: bool,
    pub standardize: bool,
    pub time_lag: usize,
    pub p_t: f64,
    pub p_zero: f64,
    pub r: f64,
    pub seed: u64,
    pub max_retry: usize,
    pub confounder_retry: usize,
    pub sinusoid: SinusoidConfig,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            num_nodes: 10,
            node_dim: 3,
            num_timesteps: 1000,
            num_trajectories: 10,
            init_ratios: (1.0, 1.0),
            system_name: String::from("random"),
            delta: 0.0,
            confounders: false,
            standardize: false,
            time_lag: 0,
            p_t: 0.1,
            p_zero: 0.2,
            r: 0.5,
            seed: 0,
            max_retry: systems::DEFAULT_MAX_RETRY,
            confounder_retry: 100,
            sinusoid: SinusoidConfig::default(),
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.num_nodes == 0 {
            return bad("num_nodes must be at least 1".into());
        }
        if self.node_dim != 1 && self.node_dim != 3 {
            return bad(alloc::format!("node_dim must be 1 or 3, got {}", self.node_dim));
        }
        if self.num_timesteps == 0 {
            return bad("num_timesteps must be at least 1".into());
        }
        let (a, b) = self.init_ratios;
        if !(a >= 0.0 && b >= 0.0 && a + b > 0.0) {
            return bad(alloc::format!("init_ratios {:?} must be nonnegative and not all zero", self.init_ratios));
        }
        if !(self.delta >= 0.0) {
            return bad("delta must be nonnegative".into());
        }
        for (name, p) in [("p_t", self.p_t), ("p_zero", self.p_zero), ("r", self.r)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(alloc::format!("{name} = {p} outside [0,1]"));
            }
        }
        Ok(())
    }

    fn gnr(&self) -> GnrConfig {
        GnrConfig { n: self.num_nodes, r: self.r }
    }
}

/// Graph plus the per-source-node linear maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmParams {
    pub graph: CausalGraph,
    pub node_dim: usize,
    /// `n × d × d`, row-major per node: output `r` = sum_c W[k][r][c] x_k[c].
    pub weights: Vec<f64>,
    /// `n × d`.
    pub biases: Vec<f64>,
    /// Zero in-degree per block (`2n` entries when a lagged block exists).
    pub root_mask: Vec<bool>,
    pub p_zero: f64,
}

impl ScmParams {
    /// Standard normal maps and biases on a fixed graph, then weight dropout.
    pub fn sample(graph: CausalGraph, node_dim: usize, p_zero: f64, rng: &mut SeededRng) -> Self {
        let n = graph.n();
        let d = node_dim;
        let mut weights: Vec<f64> = (0..n * d * d).map(|_| rng.normal()).collect();
        let biases: Vec<f64> = (0..n * d).map(|_| rng.normal()).collect();
        for w in weights.iter_mut() {
            if rng.bernoulli(p_zero) {
                *w = 0.0;
            }
        }
        let root_mask = graph::root_nodes(&graph);
        Self { graph, node_dim, weights, biases, root_mask, p_zero }
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn weight(&self, node: usize) -> &[f64] {
        let d2 = self.node_dim * self.node_dim;
        &self.weights[node * d2..(node + 1) * d2]
    }

    pub fn bias(&self, node: usize) -> &[f64] {
        &self.biases[node * self.node_dim..(node + 1) * self.node_dim]
    }

    /// Nodes with no parent in either block; these hold driver series.
    pub fn driver_mask(&self) -> Vec<bool> {
        graph::driver_nodes(&self.graph)
    }

    /// `W_k x + b_k`, accumulated into `out`.
    #[inline]
    pub fn apply_edge(&self, source: usize, x: &[f64], out: &mut [f64]) {
        let d = self.node_dim;
        let w = self.weight(source);
        let b = self.bias(source);
        for r in 0..d {
            let mut acc = b[r];
            for c in 0..d {
                acc += w[r * d + c] * x[c];
            }
            out[r] += acc;
        }
    }

    /// Steps prepended to the kept window so every lagged dependency resolves inside it.
    pub fn lead(&self) -> usize {
        lead_steps(&self.graph)
    }
}

/// `tau` times the largest number of lagged edges on any directed path (at least one
/// `tau` whenever the graph is lagged); zero when lag-free.
pub fn lead_steps(graph: &CausalGraph) -> usize {
    let Some(lagged) = graph.lagged() else { return 0 };
    let order = graph.causal_order();
    let mut depth = vec![0usize; graph.n()];
    for &i in &order {
        let via_adj = graph.adj().parents(i).map(|k| depth[k]).max().unwrap_or(0);
        let via_lag = lagged.parents(i).map(|k| depth[k] + 1).max().unwrap_or(0);
        depth[i] = via_adj.max(via_lag);
    }
    graph.tau() * depth.into_iter().max().unwrap_or(0).max(1)
}

/// Sample the graph (with optional confounder and lagged edges) and the edge maps.
pub fn create_scm(cfg: &GenerationConfig, rng: &mut SeededRng) -> Result<ScmParams> {
    cfg.validate()?;
    let mut graph = CausalGraph::new(graph::gnr_sample(cfg.gnr(), rng))?;
    if cfg.confounders {
        graph = graph::add_confounders(&graph, cfg.gnr(), rng, cfg.confounder_retry)?.graph;
    }
    if cfg.time_lag > 0 {
        graph = graph::sample_lagged_edges(&graph, cfg.p_t, cfg.time_lag, rng)?;
    }
    Ok(ScmParams::sample(graph, cfg.node_dim, cfg.p_zero, rng))
}

/// Split `n` slots by `(dynamical, periodic)` weights, rounding the dynamical share.
pub fn allocate_by_ratios(n: usize, ratios: (f64, f64)) -> (usize, usize) {
    let share = ratios.0 / (ratios.0 + ratios.1);
    let n_sys = libm::floor(n as f64 * share + 0.5) as usize;
    let n_sys = n_sys.min(n);
    (n_sys, n - n_sys)
}

/// What drives a node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriverKind {
    System(String),
    Sinusoid,
}

/// Driver series for every node on the extended horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverInit {
    /// `[T + lead, n, d]`.
    pub values: Tensor3,
    pub kinds: Vec<DriverKind>,
    pub lead: usize,
}

impl DriverInit {
    /// `[current; future]` along the node axis: rows `0..T` next to rows `tau..T+tau`.
    pub fn lag_blocks(&self, tau: usize) -> Result<Tensor3> {
        let ext = self.values.time_len();
        let steps = ext - self.lead;
        if tau > self.lead {
            return Err(Error::InvalidLag(tau));
        }
        self.values.time_slice(0, steps).concat_nodes(&self.values.time_slice(tau, steps + tau))
    }
}

/// Generate one driver series per node: dynamical and sinusoidal drivers by ratio,
/// then randomly permuted across nodes.
pub fn initialize_drivers(cfg: &GenerationConfig, params: &ScmParams, catalog: &Catalog, rng: &mut SeededRng) -> Result<DriverInit> {
    let n = params.n();
    let d = cfg.node_dim;
    let lead = params.lead();
    let ext = cfg.num_timesteps + lead;
    let (n_sys, n_sin) = allocate_by_ratios(n, cfg.init_ratios);
    let sde = SdeConfig { delta: cfg.delta };
    let (sys, names) = if cfg.system_name.eq_ignore_ascii_case("random") {
        let (t, names) = systems::solve_random_systems(catalog, ext, n_sys, sde, cfg.max_retry, rng)?;
        (t, names.into_iter().map(String::from).collect::<Vec<_>>())
    } else {
        let system = catalog.get(&cfg.system_name)?;
        let t = systems::solve_named_systems(system, ext, n_sys, sde, cfg.max_retry, rng)?;
        (t, vec![String::from(system.name); n_sys])
    };
    let sin = systems::drive_sin(ext, n_sin, d, cfg.sinusoid, rng);
    let perm = rng.permutation(n);
    let mut values = Tensor3::zeros(ext, n, d);
    let mut kinds = Vec::with_capacity(n);
    for (slot, &src) in perm.iter().enumerate() {
        for t in 0..ext {
            let row = if src < n_sys { &sys.at(t, src)[..d] } else { sin.at(t, src - n_sys) };
            values.at_mut(t, slot).copy_from_slice(row);
        }
        kinds.push(if src < n_sys { DriverKind::System(names[src].clone()) } else { DriverKind::Sinusoid });
    }
    Ok(DriverInit { values, kinds, lead })
}

fn is_degenerate(mean: f64, sd: f64) -> bool {
    !(sd.is_finite() && sd > 1e-12 * mean.abs().max(1.0))
}

/// `(x - mean) / std` over rows `window..` (population variance), applied to every row.
fn standardize_channel(x: &mut Tensor3, node: usize, dim: usize, window: usize) -> Result<()> {
    let ext = x.time_len();
    let (mean, var) = mean_var((window..ext).map(|t| x.get(t, node, dim)));
    let sd = sqrt(var);
    if is_degenerate(mean, sd) {
        return Err(Error::DegenerateSeries { node, dim });
    }
    for t in 0..ext {
        let v = x.get(t, node, dim);
        x.set(t, node, dim, (v - mean) / sd);
    }
    Ok(())
}

/// Zero state with driver series copied onto driver nodes, optionally standardized
/// over the kept window.
pub fn initialize_state(init: &DriverInit, params: &ScmParams, standardize: bool) -> Result<Tensor3> {
    let [ext, n, d] = init.values.shape();
    if n != params.n() || d != params.node_dim {
        return Err(Error::ShapeMismatch(alloc::format!(
            "drivers are [{ext}, {n}, {d}], model has {} nodes of dim {}",
            params.n(),
            params.node_dim
        )));
    }
    let mask = params.driver_mask();
    let mut x = Tensor3::zeros(ext, n, d);
    for node in (0..n).filter(|&i| mask[i]) {
        for t in 0..ext {
            x.at_mut(t, node).copy_from_slice(init.values.at(t, node));
        }
        if standardize {
            for dim in 0..d {
                standardize_channel(&mut x, node, dim, init.lead)?;
            }
        }
    }
    Ok(x)
}

/// Push signals from the drivers through the graph, parents before children.
///
/// `window` is the first kept row; standardization statistics come from rows
/// `window..`. Lagged parents are read `tau` rows back (clamped at row 0 inside the
/// discarded lead).
pub fn propagate(mut x: Tensor3, params: &ScmParams, standardize: bool, window: usize) -> Result<Tensor3> {
    let [ext, n, d] = x.shape();
    if n != params.n() || d != params.node_dim {
        return Err(Error::ShapeMismatch("state does not match model".into()));
    }
    let g = &params.graph;
    let tau = g.tau();
    let mut y = vec![0.0; ext * d];
    for i in g.causal_order() {
        let now: Vec<usize> = g.adj().parents(i).collect();
        let past: Vec<usize> = g.lagged().map(|l| l.parents(i).collect()).unwrap_or_default();
        if now.is_empty() && past.is_empty() {
            continue;
        }
        y.iter_mut().for_each(|v| *v = 0.0);
        for t in 0..ext {
            let out = &mut y[t * d..(t + 1) * d];
            for &k in &now {
                params.apply_edge(k, x.at(t, k), out);
            }
            let src = t.saturating_sub(tau);
            for &k in &past {
                params.apply_edge(k, x.at(src, k), out);
            }
        }
        if standardize {
            for dim in 0..d {
                let (mean, var) = mean_var((window..ext).map(|t| y[t * d + dim]));
                let sd = sqrt(var);
                if is_degenerate(mean, sd) {
                    return Err(Error::DegenerateSeries { node: i, dim });
                }
                for t in 0..ext {
                    y[t * d + dim] = (y[t * d + dim] - mean) / sd;
                }
            }
        }
        for t in 0..ext {
            let row = x.at_mut(t, i);
            for (r, v) in row.iter_mut().enumerate() {
                *v += y[t * d + r];
            }
        }
    }
    Ok(x)
}

/// One simulated trajectory of a fixed model.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `[T, n, d]`, the kept window.
    pub values: Tensor3,
    pub drivers: Vec<DriverKind>,
}

/// Simulate trajectory `index` of `params`. The stream is derived from
/// `(cfg.seed, index)`; a non-finite result is retried on a fresh sub-stream.
pub fn simulate_trajectory(cfg: &GenerationConfig, params: &ScmParams, catalog: &Catalog, index: usize) -> Result<Trajectory> {
    let base = split_seed(cfg.seed, 1 + index as u64);
    for attempt in 0..cfg.max_retry.max(1) {
        let mut rng = SeededRng::new(split_seed(base, attempt as u64));
        let init = initialize_drivers(cfg, params, catalog, &mut rng)?;
        let x = initialize_state(&init, params, cfg.standardize)?;
        let x = propagate(x, params, cfg.standardize, init.lead)?;
        let values = x.time_slice(init.lead, x.time_len());
        if values.is_finite() {
            return Ok(Trajectory { values, drivers: init.kinds });
        }
    }
    Err(Error::RetryExhausted { what: "finite trajectory", attempts: cfg.max_retry.max(1) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    /// `[trajectories, T, n, d]`.
    pub data: TrajectoryTensor,
    pub params: ScmParams,
    pub drivers: Vec<Vec<DriverKind>>,
}

/// Model stream for `cfg.seed`; trajectories use streams `1..`.
pub fn scm_rng(cfg: &GenerationConfig) -> SeededRng {
    SeededRng::new(split_seed(cfg.seed, 0))
}

/// Sample a model and simulate `cfg.num_trajectories` trajectories of it.
///
/// With standardization on, a model whose aggregated input to some node is constant
/// (every incoming weight row dropped out) cannot be standardized; it is resampled
/// from the same stream.
pub fn simulate_system(cfg: &GenerationConfig, catalog: &Catalog) -> Result<Simulation> {
    let mut rng = scm_rng(cfg);
    let attempts = cfg.max_retry.max(1);
    for _ in 0..attempts {
        let params = create_scm(cfg, &mut rng)?;
        match simulate_model(cfg, params, catalog) {
            Err(Error::DegenerateSeries { .. }) if cfg.standardize => continue,
            other => return other,
        }
    }
    Err(Error::RetryExhausted { what: "standardizable model", attempts })
}

/// Simulate `cfg.num_trajectories` trajectories of a fixed model.
pub fn simulate_model(cfg: &GenerationConfig, params: ScmParams, catalog: &Catalog) -> Result<Simulation> {
    let mut trajectories = Vec::with_capacity(cfg.num_trajectories);
    let mut drivers = Vec::with_capacity(cfg.num_trajectories);
    for k in 0..cfg.num_trajectories {
        let tr = simulate_trajectory(cfg, &params, catalog, k)?;
        trajectories.push(tr.values);
        drivers.push(tr.drivers);
    }
    let data = if trajectories.is_empty() {
        TrajectoryTensor::zeros([0, cfg.num_timesteps, params.n(), params.node_dim])
    } else {
        TrajectoryTensor::stack(&trajectories)?
    };
    Ok(Simulation { data, params, drivers })
}
