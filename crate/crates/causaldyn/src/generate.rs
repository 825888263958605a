//! Experiment grids and parallel dataset generation.

use std::path::Path;

use causaldyn_core::climate::{self, CouplingExperiment, XroParams};
use causaldyn_core::coupling::{self, GenerationConfig, NODE_PRESET_COMPACT, NODE_PRESET_STANDARD};
use causaldyn_core::rng::split_seed;
use causaldyn_core::simple::{self, SimpleConfig, DELTA_SWEEP};
use causaldyn_core::systems::{self, Catalog};
use rayon::prelude::*;

use crate::dataio::{self, DatasetRecord, Graphs, ManifestEntry, Meta, TierConfig, View, FORMAT_VERSION};

/// Seed for graph `index` of a run.
pub fn graph_seed(master: u64, index: usize) -> u64 {
    split_seed(master, index as u64)
}

/// Compact decimal for identifiers: `0.5 -> "0.5"`, `1.0 -> "1"`.
pub fn fmt_num(v: f64) -> String {
    let s = format!("{v}");
    s.strip_suffix(".0").map(str::to_owned).unwrap_or(s)
}

/// One unit of generation work.
#[derive(Debug, Clone)]
pub enum Job {
    Simple { system: String, config: SimpleConfig },
    Coupled { config: GenerationConfig },
    Climate { experiment: CouplingExperiment, months: usize, trajectories: usize },
}

#[derive(Debug, Clone)]
pub struct PlannedGraph {
    pub graph_id: String,
    pub cell: String,
    pub job: Job,
}

#[derive(Debug, Clone)]
pub struct SimpleGrid {
    pub systems: Vec<String>,
    pub deltas: Vec<f64>,
    pub timesteps: usize,
    pub trajectories: usize,
}

impl Default for SimpleGrid {
    fn default() -> Self {
        Self {
            systems: Catalog::default().names().into_iter().map(String::from).collect(),
            deltas: DELTA_SWEEP.to_vec(),
            timesteps: 1000,
            trajectories: 10,
        }
    }
}

impl SimpleGrid {
    /// One graph per `(system, delta)`; the confounded view is derived from the same data.
    pub fn plan(&self, master: u64) -> Vec<PlannedGraph> {
        let mut out = Vec::new();
        for system in &self.systems {
            for &delta in &self.deltas {
                let index = out.len();
                let config = SimpleConfig {
                    num_timesteps: self.timesteps,
                    num_trajectories: self.trajectories,
                    delta,
                    seed: graph_seed(master, index),
                    ..Default::default()
                };
                out.push(PlannedGraph {
                    graph_id: format!("{}_delta{}", system.to_lowercase(), fmt_num(delta)),
                    cell: format!("delta={}", fmt_num(delta)),
                    job: Job::Simple { system: system.clone(), config },
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct CoupledGrid {
    pub nodes: Vec<usize>,
    pub deltas: Vec<f64>,
    pub confounders: Vec<bool>,
    pub time_lags: Vec<usize>,
    pub standardize: Vec<bool>,
    pub init_ratios: Vec<(f64, f64)>,
    pub graphs_per_cell: usize,
    /// Everything not swept.
    pub base: GenerationConfig,
}

impl Default for CoupledGrid {
    fn default() -> Self {
        Self {
            nodes: NODE_PRESET_STANDARD.to_vec(),
            deltas: DELTA_SWEEP.to_vec(),
            confounders: vec![false, true],
            time_lags: vec![0, 1],
            standardize: vec![false, true],
            init_ratios: vec![(1.0, 0.0), (1.0, 1.0)],
            graphs_per_cell: 1,
            base: GenerationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodePreset {
    Standard,
    Compact,
}

impl NodePreset {
    pub fn nodes(self) -> Vec<usize> {
        match self {
            NodePreset::Standard => NODE_PRESET_STANDARD.to_vec(),
            NodePreset::Compact => NODE_PRESET_COMPACT.to_vec(),
        }
    }
}

impl CoupledGrid {
    pub fn cells(&self) -> usize {
        self.nodes.len() * self.deltas.len() * self.confounders.len() * self.time_lags.len() * self.standardize.len() * self.init_ratios.len()
    }

    pub fn plan(&self, master: u64) -> Vec<PlannedGraph> {
        let mut out = Vec::new();
        for &n in &self.nodes {
            for &delta in &self.deltas {
                for &conf in &self.confounders {
                    for &lag in &self.time_lags {
                        for &std in &self.standardize {
                            for &(a, b) in &self.init_ratios {
                                let cell = format!(
                                    "nodes={n},delta={},confounders={},lag={lag},standardize={},ratios={}:{}",
                                    fmt_num(delta),
                                    u8::from(conf),
                                    u8::from(std),
                                    fmt_num(a),
                                    fmt_num(b)
                                );
                                for g in 0..self.graphs_per_cell {
                                    let index = out.len();
                                    let config = GenerationConfig {
                                        num_nodes: n,
                                        delta,
                                        confounders: conf,
                                        time_lag: lag,
                                        standardize: std,
                                        init_ratios: (a, b),
                                        seed: graph_seed(master, index),
                                        ..self.base.clone()
                                    };
                                    let graph_id = format!(
                                        "n{n}_d{}_c{}_l{lag}_s{}_r{}-{}_g{g}",
                                        fmt_num(delta),
                                        u8::from(conf),
                                        u8::from(std),
                                        fmt_num(a),
                                        fmt_num(b)
                                    );
                                    out.push(PlannedGraph { graph_id, cell: cell.clone(), job: Job::Coupled { config } });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

pub fn climate_plan(months: usize, trajectories: usize) -> Vec<PlannedGraph> {
    climate::experiment_suite()
        .into_iter()
        .map(|e| PlannedGraph {
            graph_id: e.name.clone(),
            cell: format!("experiment={}", e.name),
            job: Job::Climate { experiment: e, months, trajectories },
        })
        .collect()
}

/// Build the record for one planned graph; `seed` is the graph's own seed.
pub fn build_record(plan: &PlannedGraph, seed: u64, catalog: &Catalog, xro: &XroParams) -> causaldyn_core::Result<DatasetRecord> {
    let (generator, graphs, data) = match &plan.job {
        Job::Simple { system, config } => {
            let sys = catalog.get(system)?;
            let config = SimpleConfig { seed, ..*config };
            let data = simple::simulate_simple(sys, &config)?;
            let truth = systems::adjacency_from_jacobian(sys);
            let mut views = vec![View { name: "unconfounded".into(), hidden: vec![] }];
            if let Some(c) = simple::confounder_variable(&truth) {
                views.push(View { name: "confounded".into(), hidden: vec![c] });
            }
            let graphs = Graphs::from_truth(&truth, views);
            (TierConfig::Simple { system: sys.name.to_string(), config }, graphs, data)
        }
        Job::Coupled { config } => {
            let config = GenerationConfig { seed, ..config.clone() };
            let sim = coupling::simulate_system(&config, catalog)?;
            let graphs = Graphs::from_causal(&sim.params.graph);
            (TierConfig::Coupled { config, drivers: sim.drivers }, graphs, sim.data)
        }
        Job::Climate { experiment, months, trajectories } => {
            let set = climate::generate_experiment(xro, experiment, *months, *trajectories, seed)?;
            let graphs = Graphs::from_truth(&set.truth, vec![View { name: "default".into(), hidden: vec![] }]);
            let generator = TierConfig::Climate { experiment: experiment.clone(), months: *months, trajectories: *trajectories, params: xro.clone() };
            (generator, graphs, set.data)
        }
    };
    let meta = Meta { format_version: FORMAT_VERSION, graph_id: plan.graph_id.clone(), cell: plan.cell.clone(), seed, shape: data.shape(), generator };
    Ok(DatasetRecord { meta, graphs, data })
}

#[derive(Debug, Default)]
pub struct RunSummary {
    pub written: Vec<ManifestEntry>,
    pub failed: Vec<(String, String)>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.failed.is_empty() {
            0
        } else if self.written.is_empty() {
            1
        } else {
            2
        }
    }
}

/// Generate and write every planned graph on a pool of `workers` threads, then append
/// the manifest in plan order.
pub fn run_plan(plan: &[PlannedGraph], master: u64, root: &Path, workers: usize, force: bool, xro: &XroParams) -> Result<RunSummary, dataio::DataError> {
    let catalog = Catalog::default();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().expect("thread pool");
    let results: Vec<Result<ManifestEntry, String>> = pool.install(|| {
        plan.par_iter()
            .enumerate()
            .map(|(index, p)| {
                let seed = graph_seed(master, index);
                let record = build_record(p, seed, &catalog, xro).map_err(|e| e.to_string())?;
                dataio::write_dataset(&record, root, force).map_err(|e| e.to_string())
            })
            .collect()
    });
    let mut summary = RunSummary::default();
    for (p, r) in plan.iter().zip(results) {
        match r {
            Ok(entry) => summary.written.push(entry),
            Err(e) => {
                log::warn!("skipping {}: {e}", p.graph_id);
                summary.failed.push((p.graph_id.clone(), e));
            }
        }
    }
    dataio::append_manifest(root, &summary.written)?;
    log::info!("wrote {} graphs, skipped {}", summary.written.len(), summary.failed.len());
    Ok(summary)
}
