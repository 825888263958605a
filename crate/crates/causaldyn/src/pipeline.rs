//! Baseline scoring and evaluation over a dataset directory.
//!
//! Predictions live at `<root>/predictions/<method>/<tier>/<graph_id>/<view>/traj_NNN.json`,
//! reports at `<root>/reports/<method>/`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use causaldyn_core::baselines::{self, BaselineConfig};
use causaldyn_core::metrics::{self, EvalReport, HiddenTruth, ScoredGraph};
use causaldyn_core::rng::split_seed;
use causaldyn_core::{AdjMatrix, SeededRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{self, DataError, DatasetRecord, ManifestEntry, Tier, View};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[value(name = "laggedcorr")]
    LaggedCorr,
    #[value(name = "vargranger")]
    VarGranger,
    Random,
    /// The ground truth itself; checks the evaluation path end to end.
    Oracle,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::LaggedCorr => "laggedcorr",
            Method::VarGranger => "vargranger",
            Method::Random => "random",
            Method::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub graph_id: String,
    pub view: String,
    pub trajectory: usize,
    pub method: Method,
    /// Original indices of the scored nodes.
    pub nodes: Vec<usize>,
    pub scores: Vec<Vec<f64>>,
}

/// Summary truth over the nodes a view leaves observed.
pub fn view_truth(summary: &AdjMatrix, view: &View, mode: HiddenTruth) -> AdjMatrix {
    let keep = view.observed_mask(summary.n());
    match mode {
        HiddenTruth::Induced => summary.induced(&keep),
        HiddenTruth::LatentProjection => summary.latent_projection(&keep),
    }
}

pub fn predictions_dir(root: &Path, method: Method) -> PathBuf {
    root.join("predictions").join(method.as_str())
}

fn prediction_path(root: &Path, method: Method, entry: &ManifestEntry, view: &str, traj: usize) -> PathBuf {
    predictions_dir(root, method).join(&entry.path).join(view).join(format!("traj_{traj:03}.json"))
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().expect("thread pool")
}

/// Score one trajectory of one view.
pub fn score_trajectory(
    record: &DatasetRecord,
    view: &View,
    traj: usize,
    method: Method,
    cfg: &BaselineConfig,
    rng: &mut SeededRng,
) -> causaldyn_core::Result<ScoredGraph> {
    let n_obs = view.observed(record.graphs.n).len();
    match method {
        Method::Random => baselines::random_scorer(n_obs, rng),
        Method::Oracle => Ok(ScoredGraph::from_adj(&view_truth(&record.graphs.summary, view, HiddenTruth::Induced))),
        Method::LaggedCorr => baselines::lagged_correlation(&dataio::observed_columns(record, view, traj, cfg.reduction), cfg),
        Method::VarGranger => baselines::var_granger(&dataio::observed_columns(record, view, traj, cfg.reduction), cfg),
    }
}

#[derive(Debug, Default)]
pub struct BaselineSummary {
    pub files: usize,
    pub skipped: Vec<String>,
    pub failed_graphs: Vec<String>,
}

impl BaselineSummary {
    pub fn exit_code(&self) -> i32 {
        match (self.files, self.skipped.is_empty() && self.failed_graphs.is_empty()) {
            (_, true) => 0,
            (0, false) => 1,
            _ => 2,
        }
    }
}

/// Run `method` on every trajectory of every dataset in the manifest. Random scores for
/// graph `g`, view `v`, trajectory `k` draw from `split(split(split(seed, g), v), k)`.
pub fn run_baseline(root: &Path, method: Method, cfg: &BaselineConfig, seed: u64, workers: usize) -> Result<BaselineSummary, DataError> {
    let manifest = dataio::read_manifest(root)?;
    let entries = manifest.latest();
    let results: Vec<Result<(usize, Vec<String>), String>> = pool(workers).install(|| {
        entries
            .par_iter()
            .enumerate()
            .map(|(g, entry)| {
                let record = dataio::load_dataset(&root.join(&entry.path)).map_err(|e| format!("{}: {e}", entry.graph_id))?;
                let mut files = 0;
                let mut skipped = Vec::new();
                for (v, view) in record.graphs.views.iter().enumerate() {
                    let nodes = view.observed(record.graphs.n);
                    for k in 0..record.data.shape()[0] {
                        let mut rng = SeededRng::new(split_seed(split_seed(split_seed(seed, g as u64), v as u64), k as u64));
                        match score_trajectory(&record, view, k, method, cfg, &mut rng) {
                            Ok(scores) => {
                                let p = Prediction {
                                    graph_id: entry.graph_id.clone(),
                                    view: view.name.clone(),
                                    trajectory: k,
                                    method,
                                    nodes: nodes.clone(),
                                    scores: scores.to_rows(),
                                };
                                let path = prediction_path(root, method, entry, &view.name, k);
                                dataio::write_file(&path, &dataio::to_json_bytes(&p)).map_err(|e| e.to_string())?;
                                files += 1;
                            }
                            Err(e) => {
                                let msg = format!("{}/{} trajectory {k}: {e}", entry.graph_id, view.name);
                                log::warn!("skipping {msg}");
                                skipped.push(msg);
                            }
                        }
                    }
                }
                Ok((files, skipped))
            })
            .collect()
    });
    let mut summary = BaselineSummary::default();
    for r in results {
        match r {
            Ok((files, skipped)) => {
                summary.files += files;
                summary.skipped.extend(skipped);
            }
            Err(e) => {
                log::warn!("baseline failed for {e}");
                summary.failed_graphs.push(e);
            }
        }
    }
    log::info!("{}: wrote {} prediction files, skipped {} trajectories", method.as_str(), summary.files, summary.skipped.len());
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub graph_id: String,
    pub view: String,
    pub tier: Tier,
    pub cell: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<EvalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub cell: String,
    pub tier: Tier,
    pub n_graphs: usize,
    pub n_failed: usize,
    pub auroc_mean: Option<f64>,
    pub auprc_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub method: Method,
    pub hidden_truth: HiddenTruth,
    pub graphs: Vec<GraphReport>,
    pub cells: Vec<CellRow>,
}

impl EvalSummary {
    pub fn exit_code(&self) -> i32 {
        let failed = self.graphs.iter().filter(|g| g.report.is_none()).count();
        match failed {
            0 => 0,
            f if f == self.graphs.len() => 1,
            _ => 2,
        }
    }

    /// Tab-separated cell table.
    pub fn table(&self) -> String {
        let mut out = String::from("cell\ttier\tgraphs\tfailed\tauroc\tauprc\n");
        let f = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "nan".into());
        for c in &self.cells {
            out.push_str(&format!("{}\t{}\t{}\t{}\t{}\t{}\n", c.cell, c.tier.as_str(), c.n_graphs, c.n_failed, f(c.auroc_mean), f(c.auprc_mean)));
        }
        out
    }
}

fn load_predictions(root: &Path, method: Method, entry: &ManifestEntry, view: &View, trajectories: usize, n_obs: usize) -> Result<Vec<ScoredGraph>, String> {
    let mut out = Vec::new();
    for k in 0..trajectories {
        let path = prediction_path(root, method, entry, &view.name, k);
        if !path.exists() {
            continue;
        }
        let p: Prediction = dataio::read_json(&path).map_err(|e| e.to_string())?;
        let g = ScoredGraph::from_rows(&p.scores).map_err(|e| format!("{}: {e}", path.display()))?;
        if g.n() != n_obs {
            return Err(format!("{}: {} scored nodes, view has {n_obs}", path.display(), g.n()));
        }
        out.push(g);
    }
    if out.is_empty() {
        return Err("no predictions".into());
    }
    Ok(out)
}

fn evaluate_view(root: &Path, method: Method, entry: &ManifestEntry, record: &DatasetRecord, view: &View, include_diagonal: Option<bool>, mode: HiddenTruth) -> GraphReport {
    let include = include_diagonal.unwrap_or(entry.tier.default_include_diagonal());
    let mut cell = entry.cell.clone();
    if record.graphs.views.len() > 1 {
        cell.push_str(&format!(",view={}", view.name));
    }
    let truth = view_truth(&record.graphs.summary, view, mode);
    let outcome = load_predictions(root, method, entry, view, record.data.shape()[0], truth.n())
        .and_then(|preds| metrics::score_prediction(&preds, &truth, include).map_err(|e| e.to_string()));
    if let Err(e) = &outcome {
        log::warn!("{}/{}: {e}", entry.graph_id, view.name);
    }
    GraphReport {
        graph_id: entry.graph_id.clone(),
        view: view.name.clone(),
        tier: entry.tier,
        cell,
        report: outcome.as_ref().ok().cloned(),
        error: outcome.err(),
    }
}

/// Score saved predictions against the ground truths and aggregate per cell.
pub fn evaluate(root: &Path, method: Method, include_diagonal: Option<bool>, mode: HiddenTruth, workers: usize) -> Result<EvalSummary, DataError> {
    let manifest = dataio::read_manifest(root)?;
    let entries = manifest.latest();
    let per_graph: Vec<Result<Vec<GraphReport>, DataError>> = pool(workers).install(|| {
        entries
            .par_iter()
            .map(|entry| {
                let record = dataio::load_dataset(&root.join(&entry.path))?;
                Ok(record.graphs.views.iter().map(|v| evaluate_view(root, method, entry, &record, v, include_diagonal, mode)).collect())
            })
            .collect()
    });
    let mut graphs = Vec::new();
    for r in per_graph {
        graphs.extend(r?);
    }
    let mut cells: BTreeMap<(Tier, String), Vec<&GraphReport>> = BTreeMap::new();
    for g in &graphs {
        cells.entry((g.tier, g.cell.clone())).or_default().push(g);
    }
    let cells = cells
        .into_iter()
        .map(|((tier, cell), rs)| {
            let ok: Vec<EvalReport> = rs.iter().filter_map(|r| r.report.clone()).collect();
            let agg = metrics::aggregate_means(&ok);
            CellRow { cell, tier, n_graphs: ok.len(), n_failed: rs.len() - ok.len(), auroc_mean: agg.map(|a| a.0), auprc_mean: agg.map(|a| a.1) }
        })
        .collect();
    let summary = EvalSummary { method, hidden_truth: mode, graphs, cells };
    let dir = root.join("reports").join(method.as_str());
    for g in &summary.graphs {
        dataio::write_file(&dir.join("graphs").join(format!("{}__{}.json", g.graph_id, g.view)), &dataio::to_json_bytes(g))?;
    }
    dataio::write_file(&dir.join("summary.json"), &dataio::to_json_bytes(&summary))?;
    dataio::write_file(&dir.join("summary.tsv"), summary.table().as_bytes())?;
    Ok(summary)
}

/// Mean of per-graph AUROC and AUPRC over every scored graph of a summary.
pub fn overall_means(summary: &EvalSummary) -> Option<(f64, f64)> {
    let ok: Vec<EvalReport> = summary.graphs.iter().filter_map(|g| g.report.clone()).collect();
    metrics::aggregate_means(&ok)
}
