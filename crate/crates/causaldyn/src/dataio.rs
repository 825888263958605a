//! On-disk dataset layout.
//!
//! ```text
//! <root>/manifest.json
//! <root>/<tier>/<graph_id>/meta.json
//! <root>/<tier>/<graph_id>/graphs.json
//! <root>/<tier>/<graph_id>/timeseries.cdyn
//! ```
//!
//! `timeseries.cdyn` is `b"CDYN"`, `u32` version, `u32` rank (4), four `u64` dims
//! `[trajectory, time, node, dim]`, then the row-major `f64` payload, all little-endian.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use causaldyn_core::baselines::NodeReduction;
use causaldyn_core::climate::{CouplingExperiment, XroParams};
use causaldyn_core::coupling::{DriverKind, GenerationConfig};
use causaldyn_core::simple::SimpleConfig;
use causaldyn_core::{AdjMatrix, CausalGraph, TrajectoryTensor};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MAGIC: [u8; 4] = *b"CDYN";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 + 4 + 4 * 8;

pub const META_FILE: &str = "meta.json";
pub const GRAPHS_FILE: &str = "graphs.json";
pub const TENSOR_FILE: &str = "timeseries.cdyn";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("not a cdyn file (magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("cdyn version {found}, expected {FORMAT_VERSION}")]
    VersionMismatch { found: u32 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("corrupt payload: {0}")]
    CorruptPayload(String),
    #[error("{} exists; pass --force to overwrite", .0.display())]
    RefusesOverwrite(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Core(#[from] causaldyn_core::Error),
}

pub type Result<T, E = DataError> = std::result::Result<T, E>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io { path: path.to_path_buf(), source }
}

pub fn encode_tensor(t: &TrajectoryTensor) -> Vec<u8> {
    let payload = t.as_slice();
    let mut buf = Vec::with_capacity(HEADER_LEN + payload.len() * 8);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&4u32.to_le_bytes());
    for d in t.shape() {
        buf.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in payload {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn decode_tensor(bytes: &[u8]) -> Result<TrajectoryTensor> {
    if bytes.len() < 4 {
        return Err(DataError::CorruptPayload(format!("{} bytes is shorter than the magic", bytes.len())));
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(DataError::BadMagic(magic));
    }
    if bytes.len() < HEADER_LEN {
        return Err(DataError::CorruptPayload(format!("{} bytes is shorter than the header", bytes.len())));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != FORMAT_VERSION {
        return Err(DataError::VersionMismatch { found: version });
    }
    let rank = u32_at(8);
    if rank != 4 {
        return Err(DataError::ShapeMismatch(format!("rank {rank}, expected 4")));
    }
    let mut shape = [0usize; 4];
    for (j, s) in shape.iter_mut().enumerate() {
        let o = 12 + 8 * j;
        let d = u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        *s = usize::try_from(d).map_err(|_| DataError::ShapeMismatch(format!("dimension {d} too large")))?;
    }
    let count = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| DataError::ShapeMismatch(format!("{shape:?} overflows")))?;
    let payload = &bytes[HEADER_LEN..];
    if Some(payload.len()) != count.checked_mul(8) {
        return Err(DataError::CorruptPayload(format!("shape {shape:?} needs {} payload bytes, found {}", count * 8, payload.len())));
    }
    let data: Vec<f64> = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(DataError::CorruptPayload("non-finite sample".into()));
    }
    Ok(TrajectoryTensor::from_vec(shape, data)?)
}

pub fn read_tensor(path: &Path) -> Result<TrajectoryTensor> {
    decode_tensor(&fs::read(path).map_err(io_err(path))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Simple,
    Coupled,
    Climate,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Simple => "simple",
            Tier::Coupled => "coupled",
            Tier::Climate => "climate",
        }
    }

    /// Whether self-dependence counts as an edge when scoring this tier by default.
    pub fn default_include_diagonal(self) -> bool {
        self == Tier::Simple
    }
}

/// Generator settings for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tier", rename_all = "lowercase")]
pub enum TierConfig {
    Simple { system: String, config: SimpleConfig },
    Coupled { config: GenerationConfig, drivers: Vec<Vec<DriverKind>> },
    Climate { experiment: CouplingExperiment, months: usize, trajectories: usize, params: XroParams },
}

impl TierConfig {
    pub fn tier(&self) -> Tier {
        match self {
            TierConfig::Simple { .. } => Tier::Simple,
            TierConfig::Coupled { .. } => Tier::Coupled,
            TierConfig::Climate { .. } => Tier::Climate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub format_version: u32,
    pub graph_id: String,
    /// Experiment-grid cell this graph belongs to; graphs in one cell are averaged.
    pub cell: String,
    pub seed: u64,
    pub shape: [usize; 4],
    pub generator: TierConfig,
}

impl Meta {
    pub fn tier(&self) -> Tier {
        self.generator.tier()
    }
}

/// A set of nodes hidden from the scorer for one evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct View {
    pub name: String,
    pub hidden: Vec<usize>,
}

impl View {
    pub fn observed(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|i| !self.hidden.contains(i)).collect()
    }

    pub fn observed_mask(&self, n: usize) -> Vec<bool> {
        (0..n).map(|i| !self.hidden.contains(&i)).collect()
    }
}

/// Ground truth in every form a consumer might want.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graphs {
    pub n: usize,
    /// Contemporaneous edges (the full truth for the simple and climate tiers).
    pub adjacency: AdjMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lagged: Option<AdjMatrix>,
    pub tau: usize,
    pub summary: AdjMatrix,
    pub hidden_mask: Vec<bool>,
    pub root_nodes: Vec<bool>,
    pub views: Vec<View>,
}

impl Graphs {
    pub fn from_causal(g: &CausalGraph) -> Self {
        let hidden = g.hidden().to_vec();
        Self {
            n: g.n(),
            adjacency: g.adj().clone(),
            lagged: g.lagged().cloned(),
            tau: g.tau(),
            summary: g.summary_adj(),
            hidden_mask: (0..g.n()).map(|i| hidden.contains(&i)).collect(),
            root_nodes: causaldyn_core::graph::root_nodes(g),
            views: vec![View { name: "default".into(), hidden }],
        }
    }

    /// A cyclic truth with self-loops (simple and climate tiers).
    pub fn from_truth(adj: &AdjMatrix, views: Vec<View>) -> Self {
        let n = adj.n();
        let hidden: Vec<usize> = match views.as_slice() {
            [only] => only.hidden.clone(),
            _ => Vec::new(),
        };
        Self {
            n,
            adjacency: adj.clone(),
            lagged: None,
            tau: 0,
            summary: adj.clone(),
            hidden_mask: (0..n).map(|i| hidden.contains(&i)).collect(),
            root_nodes: adj.without_diagonal().roots(),
            views,
        }
    }

    pub fn view(&self, name: &str) -> Option<&View> {
        self.views.iter().find(|v| v.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub meta: Meta,
    pub graphs: Graphs,
    pub data: TrajectoryTensor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHashes {
    pub meta: String,
    pub graphs: String,
    pub timeseries: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub graph_id: String,
    pub tier: Tier,
    pub cell: String,
    /// Relative to the dataset root, `/`-separated.
    pub path: String,
    pub seed: u64,
    pub sha256: FileHashes,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Entries with later duplicates of a path replacing earlier ones, in first-seen order.
    pub fn latest(&self) -> Vec<&ManifestEntry> {
        let mut out: Vec<&ManifestEntry> = Vec::new();
        for e in &self.entries {
            match out.iter_mut().find(|x| x.path == e.path) {
                Some(slot) => *slot = e,
                None => out.push(e),
            }
        }
        out
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|source| DataError::Json { path: path.to_path_buf(), source })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))
}

pub fn dataset_rel_path(tier: Tier, graph_id: &str) -> String {
    format!("{}/{}", tier.as_str(), graph_id)
}

/// Write one dataset directory without touching the manifest.
pub fn write_dataset(record: &DatasetRecord, root: &Path, force: bool) -> Result<ManifestEntry> {
    if record.meta.shape != record.data.shape() {
        return Err(DataError::ShapeMismatch(format!("meta says {:?}, tensor is {:?}", record.meta.shape, record.data.shape())));
    }
    let rel = dataset_rel_path(record.meta.tier(), &record.meta.graph_id);
    let dir = root.join(&rel);
    if dir.join(TENSOR_FILE).exists() && !force {
        return Err(DataError::RefusesOverwrite(dir));
    }
    let meta = to_json_bytes(&record.meta);
    let graphs = to_json_bytes(&record.graphs);
    let tensor = encode_tensor(&record.data);
    write_file(&dir.join(META_FILE), &meta)?;
    write_file(&dir.join(GRAPHS_FILE), &graphs)?;
    write_file(&dir.join(TENSOR_FILE), &tensor)?;
    Ok(ManifestEntry {
        graph_id: record.meta.graph_id.clone(),
        tier: record.meta.tier(),
        cell: record.meta.cell.clone(),
        path: rel,
        seed: record.meta.seed,
        sha256: FileHashes { meta: sha256_hex(&meta), graphs: sha256_hex(&graphs), timeseries: sha256_hex(&tensor) },
    })
}

pub fn read_manifest(root: &Path) -> Result<Manifest> {
    let path = root.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(Manifest { format_version: FORMAT_VERSION, entries: Vec::new() });
    }
    read_json(&path)
}

/// Append entries to `<root>/manifest.json`, creating it if needed.
pub fn append_manifest(root: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut m = read_manifest(root)?;
    m.format_version = FORMAT_VERSION;
    m.entries.extend_from_slice(entries);
    write_file(&root.join(MANIFEST_FILE), &to_json_bytes(&m))
}

/// Write a dataset and record it in the manifest.
pub fn save_dataset(record: &DatasetRecord, root: &Path, force: bool) -> Result<ManifestEntry> {
    let entry = write_dataset(record, root, force)?;
    append_manifest(root, std::slice::from_ref(&entry))?;
    Ok(entry)
}

/// Load a dataset directory, checking that metadata and tensor agree.
pub fn load_dataset(dir: &Path) -> Result<DatasetRecord> {
    let meta: Meta = read_json(&dir.join(META_FILE))?;
    let graphs: Graphs = read_json(&dir.join(GRAPHS_FILE))?;
    if meta.format_version != FORMAT_VERSION {
        return Err(DataError::VersionMismatch { found: meta.format_version });
    }
    let data = read_tensor(&dir.join(TENSOR_FILE))?;
    if data.shape() != meta.shape {
        return Err(DataError::ShapeMismatch(format!("meta says {:?}, tensor is {:?}", meta.shape, data.shape())));
    }
    if graphs.n != meta.shape[2] {
        return Err(DataError::ShapeMismatch(format!("graph has {} nodes, tensor {}", graphs.n, meta.shape[2])));
    }
    Ok(DatasetRecord { meta, graphs, data })
}

/// `time,node0_dim0,...` with 17 significant digits; one file per trajectory.
pub fn export_csv(record: &DatasetRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    let [k, t, n, d] = record.data.shape();
    let mut header = String::from("time");
    for j in 0..n {
        for c in 0..d {
            header.push_str(&format!(",node{j}_dim{c}"));
        }
    }
    let mut paths = Vec::with_capacity(k);
    for traj in 0..k {
        let mut out = String::with_capacity((t + 1) * (n * d + 1) * 24);
        out.push_str(&header);
        out.push('\n');
        let x = record.data.trajectory(traj);
        for s in 0..t {
            out.push_str(&s.to_string());
            for v in x.time_slice(s, s + 1).as_slice() {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        let path = dir.join(format!("trajectory_{traj:03}.csv"));
        write_file(&path, out.as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}

/// Series of the nodes a view leaves observed, one column per node.
pub fn observed_columns(record: &DatasetRecord, view: &View, traj: usize, rule: NodeReduction) -> causaldyn_core::Matrix {
    let x = record.data.trajectory(traj);
    let full = causaldyn_core::baselines::reduce_nodes(&x, rule);
    let keep = view.observed(record.graphs.n);
    causaldyn_core::Matrix::from_fn(full.rows(), keep.len(), |r, c| full.get(r, keep[c]))
}
