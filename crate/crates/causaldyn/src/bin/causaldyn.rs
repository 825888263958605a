use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use causaldyn::dataio;
use causaldyn::generate::{self, CoupledGrid, NodePreset, SimpleGrid};
use causaldyn::pipeline::{self, Method};
use causaldyn_core::baselines::{BaselineConfig, NodeReduction};
use causaldyn_core::climate::XroParams;
use causaldyn_core::metrics::HiddenTruth;
use causaldyn_core::systems::Catalog;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "causaldyn", version, about = "Causal dynamical-system benchmark generator and evaluator")]
struct Cli {
    /// Master seed; graph and trajectory seeds are split from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Dataset root.
    #[arg(long, global = true, env = "CAUSALDYN_OUT", default_value = "causaldyn-out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = default_workers())]
    workers: usize,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Subcommand)]
enum Command {
    /// Generate a tier of datasets under the output root.
    Generate {
        #[command(subcommand)]
        tier: GenerateTier,
    },
    /// Score every dataset with a reference method.
    Baseline(BaselineArgs),
    /// Score saved predictions against the ground truth.
    Evaluate(EvaluateArgs),
    /// Write one CSV per trajectory of a dataset.
    ExportCsv {
        /// Dataset directory, or a graph id listed in the manifest.
        dataset: String,
        /// Target directory (defaults to `<dataset>/csv`).
        #[arg(long)]
        to: Option<PathBuf>,
    },
    /// Print the registered driver systems as JSON.
    Catalog,
}

#[derive(Args)]
struct Shared {
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long)]
    timesteps: Option<usize>,
    /// Overwrite existing graph directories.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum GenerateTier {
    Simple {
        /// Comma-separated driver systems (default: whole catalog).
        #[arg(long, alias = "system", value_delimiter = ',')]
        systems: Vec<String>,
        #[arg(long, alias = "deltas", value_delimiter = ',')]
        delta: Vec<f64>,
        #[command(flatten)]
        shared: Shared,
    },
    Coupled {
        #[arg(long, value_delimiter = ',')]
        nodes: Vec<usize>,
        #[arg(long, value_enum, conflicts_with = "nodes")]
        node_preset: Option<Preset>,
        #[arg(long, alias = "deltas", value_delimiter = ',')]
        delta: Vec<f64>,
        /// `0`, `1` or `0,1`.
        #[arg(long, value_delimiter = ',')]
        confounders: Vec<u8>,
        #[arg(long, value_delimiter = ',')]
        time_lag: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        standardize: Vec<u8>,
        /// Dynamical-to-periodic driver ratios, `a:b` comma-separated.
        #[arg(long, value_delimiter = ',')]
        init_ratios: Vec<String>,
        #[arg(long)]
        p_t: Option<f64>,
        /// Driver system for every root (`random` samples per root).
        #[arg(long)]
        system: Option<String>,
        #[arg(long)]
        node_dim: Option<usize>,
        #[arg(long, default_value_t = 1)]
        graphs_per_cell: usize,
        #[command(flatten)]
        shared: Shared,
    },
    Climate {
        #[command(flatten)]
        shared: Shared,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Standard,
    Compact,
}

#[derive(Clone, Copy, ValueEnum)]
enum Reduction {
    First,
    Mean,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(value_enum)]
    method: Method,
    #[arg(long, default_value_t = 1)]
    tau_max: usize,
    #[arg(long, default_value_t = 1e-6)]
    ridge: f64,
    /// How multi-dimensional nodes are reduced to one series.
    #[arg(long, value_enum, default_value = "first")]
    reduction: Reduction,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(value_enum)]
    method: Method,
    /// Count self-pairs; defaults to on for the simple tier and off otherwise.
    #[arg(long)]
    include_diagonal: Option<bool>,
    /// Project hidden nodes out of the truth instead of taking the induced subgraph.
    #[arg(long)]
    latent_projection: bool,
}

fn parse_flags(v: &[u8], name: &str) -> anyhow::Result<Vec<bool>> {
    v.iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            _ => bail!("--{name} takes 0 or 1, got {b}"),
        })
        .collect()
}

fn parse_ratio(s: &str) -> anyhow::Result<(f64, f64)> {
    let (a, b) = s.split_once(':').with_context(|| format!("ratio {s:?} is not a:b"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn generate(cli: &Cli, tier: &GenerateTier) -> anyhow::Result<i32> {
    let xro = XroParams::default();
    let plan = match tier {
        GenerateTier::Simple { systems, delta, shared } => {
            let mut grid = SimpleGrid::default();
            if !systems.is_empty() {
                let catalog = Catalog::default();
                grid.systems = systems.iter().map(|s| catalog.get(s).map(|d| d.name.to_string())).collect::<Result<_, _>>()?;
            }
            if !delta.is_empty() {
                grid.deltas = delta.clone();
            }
            grid.timesteps = shared.timesteps.unwrap_or(grid.timesteps);
            grid.trajectories = shared.trajectories.unwrap_or(grid.trajectories);
            grid.plan(cli.seed)
        }
        GenerateTier::Coupled { nodes, node_preset, delta, confounders, time_lag, standardize, init_ratios, p_t, system, node_dim, graphs_per_cell, shared } => {
            let mut grid = CoupledGrid { graphs_per_cell: *graphs_per_cell, ..CoupledGrid::default() };
            if let Some(p) = node_preset {
                grid.nodes = match p {
                    Preset::Standard => NodePreset::Standard,
                    Preset::Compact => NodePreset::Compact,
                }
                .nodes();
            }
            if !nodes.is_empty() {
                grid.nodes = nodes.clone();
            }
            if !delta.is_empty() {
                grid.deltas = delta.clone();
            }
            if !confounders.is_empty() {
                grid.confounders = parse_flags(confounders, "confounders")?;
            }
            if !time_lag.is_empty() {
                grid.time_lags = time_lag.clone();
            }
            if !standardize.is_empty() {
                grid.standardize = parse_flags(standardize, "standardize")?;
            }
            if !init_ratios.is_empty() {
                grid.init_ratios = init_ratios.iter().map(|s| parse_ratio(s)).collect::<anyhow::Result<_>>()?;
            }
            let base = &mut grid.base;
            base.p_t = p_t.unwrap_or(base.p_t);
            base.node_dim = node_dim.unwrap_or(base.node_dim);
            base.num_timesteps = shared.timesteps.unwrap_or(base.num_timesteps);
            base.num_trajectories = shared.trajectories.unwrap_or(base.num_trajectories);
            if let Some(s) = system {
                base.system_name = s.clone();
            }
            base.validate()?;
            grid.plan(cli.seed)
        }
        GenerateTier::Climate { shared } => generate::climate_plan(shared.timesteps.unwrap_or(1200), shared.trajectories.unwrap_or(10)),
    };
    let force = match tier {
        GenerateTier::Simple { shared, .. } | GenerateTier::Coupled { shared, .. } | GenerateTier::Climate { shared } => shared.force,
    };
    let summary = generate::run_plan(&plan, cli.seed, &cli.out, cli.workers, force, &xro)?;
    println!("wrote {} graphs to {}, skipped {}", summary.written.len(), cli.out.display(), summary.failed.len());
    for (id, e) in &summary.failed {
        eprintln!("  {id}: {e}");
    }
    Ok(summary.exit_code())
}

fn export_csv(cli: &Cli, dataset: &str, to: Option<&PathBuf>) -> anyhow::Result<i32> {
    let mut dir = PathBuf::from(dataset);
    if !dir.join(dataio::META_FILE).exists() {
        let manifest = dataio::read_manifest(&cli.out)?;
        let entry = manifest.latest().into_iter().find(|e| e.graph_id == dataset).with_context(|| format!("no dataset {dataset:?} in {}", cli.out.display()))?;
        dir = cli.out.join(&entry.path);
    }
    let record = dataio::load_dataset(&dir)?;
    let target = to.cloned().unwrap_or_else(|| dir.join("csv"));
    let files = dataio::export_csv(&record, &target)?;
    println!("wrote {} files to {}", files.len(), target.display());
    Ok(0)
}

/// Write to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> anyhow::Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn run(cli: &Cli) -> anyhow::Result<i32> {
    match &cli.command {
        Command::Generate { tier } => generate(cli, tier),
        Command::Baseline(a) => {
            let reduction = match a.reduction {
                Reduction::First => NodeReduction::FirstDim,
                Reduction::Mean => NodeReduction::Mean,
            };
            let cfg = BaselineConfig { tau_max: a.tau_max, ridge: a.ridge, reduction };
            let s = pipeline::run_baseline(&cli.out, a.method, &cfg, cli.seed, cli.workers)?;
            println!("{}: {} prediction files, {} trajectories skipped, {} graphs failed", a.method.as_str(), s.files, s.skipped.len(), s.failed_graphs.len());
            Ok(s.exit_code())
        }
        Command::Evaluate(a) => {
            let mode = if a.latent_projection { HiddenTruth::LatentProjection } else { HiddenTruth::Induced };
            let s = pipeline::evaluate(&cli.out, a.method, a.include_diagonal, mode, cli.workers)?;
            emit(&s.table())?;
            Ok(s.exit_code())
        }
        Command::ExportCsv { dataset, to } => export_csv(cli, dataset, to.as_ref()),
        Command::Catalog => {
            emit(&(serde_json::to_string_pretty(&causaldyn::catalog_entries(&Catalog::default()))? + "\n"))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
