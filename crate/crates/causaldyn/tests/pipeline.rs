use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use causaldyn::dataio::{self, DataError};
use causaldyn::generate::{self, CoupledGrid, SimpleGrid};
use causaldyn::pipeline::{self, Method, Prediction};
use causaldyn_core::baselines::BaselineConfig;
use causaldyn_core::climate::XroParams;
use causaldyn_core::coupling::GenerationConfig;
use causaldyn_core::metrics::HiddenTruth;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_causaldyn"))
}

/// Relative path to file bytes for everything under `root`.
fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn small_grid(graphs_per_cell: usize) -> CoupledGrid {
    CoupledGrid {
        nodes: vec![5],
        deltas: vec![0.0],
        confounders: vec![false, true],
        time_lags: vec![0, 1],
        standardize: vec![false],
        init_ratios: vec![(1.0, 1.0)],
        graphs_per_cell,
        base: GenerationConfig { num_timesteps: 200, ..Default::default() },
    }
}

#[test]
fn simple_cli_writes_one_directory_per_system() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin().args(["generate", "simple", "--systems", "lorenz,rossler", "--deltas", "0", "--timesteps", "100"]).env("CAUSALDYN_OUT", dir.path()).status().unwrap();
    assert!(status.success());
    let simple: Vec<_> = fs::read_dir(dir.path().join("simple")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert_eq!(simple.len(), 2, "{simple:?}");
    let manifest = dataio::read_manifest(dir.path()).unwrap();
    assert_eq!(manifest.latest().len(), 2);
    // a second run refuses to overwrite
    let again = bin().args(["generate", "simple", "--systems", "lorenz", "--deltas", "0", "--timesteps", "100"]).env("CAUSALDYN_OUT", dir.path()).status().unwrap();
    assert_eq!(again.code(), Some(1));
    let forced = bin().args(["generate", "simple", "--systems", "lorenz", "--deltas", "0", "--timesteps", "100", "--force"]).env("CAUSALDYN_OUT", dir.path()).status().unwrap();
    assert!(forced.success());
}

#[test]
fn generation_is_seed_deterministic_and_worker_independent() {
    let plan = small_grid(2).plan(11);
    let xro = XroParams::default();
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate::run_plan(&plan, 11, a.path(), 1, false, &xro).unwrap();
    generate::run_plan(&plan, 11, b.path(), 4, false, &xro).unwrap();
    generate::run_plan(&small_grid(2).plan(12), 12, c.path(), 4, false, &xro).unwrap();
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert_eq!(sa.len(), 8 * 3 + 1);
    assert_eq!(sa, sb);
    assert_ne!(sa, snapshot(c.path()));
}

#[test]
fn manifest_hashes_match_files() {
    let dir = tempfile::tempdir().unwrap();
    let plan = SimpleGrid { systems: vec!["Rossler".into()], deltas: vec![0.0, 1.0], timesteps: 100, trajectories: 2 }.plan(3);
    generate::run_plan(&plan, 3, dir.path(), 2, false, &XroParams::default()).unwrap();
    for e in dataio::read_manifest(dir.path()).unwrap().latest() {
        let d = dir.path().join(&e.path);
        assert_eq!(e.sha256.timeseries, dataio::sha256_hex(&fs::read(d.join(dataio::TENSOR_FILE)).unwrap()));
        assert_eq!(e.sha256.meta, dataio::sha256_hex(&fs::read(d.join(dataio::META_FILE)).unwrap()));
        assert_eq!(e.sha256.graphs, dataio::sha256_hex(&fs::read(d.join(dataio::GRAPHS_FILE)).unwrap()));
    }
}

#[test]
fn random_baseline_writes_one_file_per_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let grid = CoupledGrid { confounders: vec![false], time_lags: vec![0], ..small_grid(10) };
    generate::run_plan(&grid.plan(5), 5, dir.path(), 4, false, &XroParams::default()).unwrap();
    let s = pipeline::run_baseline(dir.path(), Method::Random, &BaselineConfig::default(), 9, 4).unwrap();
    assert_eq!(s.files, 100);
    assert_eq!(s.exit_code(), 0);
    let root = pipeline::predictions_dir(dir.path(), Method::Random);
    let files = snapshot(&root);
    assert_eq!(files.len(), 100);
    let first: Prediction = serde_json::from_slice(files.values().next().unwrap()).unwrap();
    assert_eq!(first.scores.len(), 5);
    // same seed and different worker count give the same bytes
    pipeline::run_baseline(dir.path(), Method::Random, &BaselineConfig::default(), 9, 1).unwrap();
    assert_eq!(snapshot(&root), files);
    pipeline::run_baseline(dir.path(), Method::Random, &BaselineConfig::default(), 10, 1).unwrap();
    assert_ne!(snapshot(&root), files);
}

#[test]
fn oracle_predictions_score_perfectly_on_observed_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let grid = small_grid(3);
    generate::run_plan(&grid.plan(2), 2, dir.path(), 4, false, &XroParams::default()).unwrap();
    pipeline::run_baseline(dir.path(), Method::Oracle, &BaselineConfig::default(), 0, 2).unwrap();
    let s = pipeline::evaluate(dir.path(), Method::Oracle, None, HiddenTruth::Induced, 2).unwrap();
    assert_eq!(s.cells.len(), grid.cells());
    for c in &s.cells {
        assert_eq!(c.n_failed, 0, "{c:?}");
        assert_eq!(c.auroc_mean, Some(1.0));
        assert_eq!(c.auprc_mean, Some(1.0));
    }
    assert_eq!(pipeline::overall_means(&s), Some((1.0, 1.0)));
    // confounded graphs drop their hidden node from the scored set
    let confounded = dataio::read_manifest(dir.path()).unwrap().latest().into_iter().filter(|e| e.cell.contains("confounders=1")).count();
    assert!(confounded > 0);
    let tsv = fs::read_to_string(dir.path().join("reports/oracle/summary.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), grid.cells() + 1);
}

#[test]
fn hidden_nodes_are_removed_from_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let grid = CoupledGrid { confounders: vec![true], time_lags: vec![0], ..small_grid(6) };
    generate::run_plan(&grid.plan(8), 8, dir.path(), 4, false, &XroParams::default()).unwrap();
    let s = pipeline::run_baseline(dir.path(), Method::VarGranger, &BaselineConfig::default(), 0, 2).unwrap();
    // a dropped weight row can leave a node's first channel constant; those trajectories are skipped
    assert!(s.files >= 50, "{:?}", s.skipped);
    let mut hidden_seen = 0;
    for e in dataio::read_manifest(dir.path()).unwrap().latest() {
        let rec = dataio::load_dataset(&dir.path().join(&e.path)).unwrap();
        let view = &rec.graphs.views[0];
        hidden_seen += view.hidden.len();
        let file = pipeline::predictions_dir(dir.path(), Method::VarGranger).join(&e.path).join(&view.name).join("traj_000.json");
        if !file.exists() {
            continue;
        }
        let p: Prediction = dataio::read_json(&file).unwrap();
        assert_eq!(p.nodes, view.observed(rec.graphs.n));
        assert_eq!(p.scores.len(), 5 - view.hidden.len());
    }
    assert!(hidden_seen > 0);
}

#[test]
fn constant_trajectory_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let grid = CoupledGrid { confounders: vec![false], time_lags: vec![0], ..small_grid(2) };
    generate::run_plan(&grid.plan(1), 1, dir.path(), 1, false, &XroParams::default()).unwrap();
    let entry = dataio::read_manifest(dir.path()).unwrap().latest()[0].clone();
    let path = dir.path().join(&entry.path);
    let mut rec = dataio::load_dataset(&path).unwrap();
    let [_, t, n, d] = rec.data.shape();
    let mut raw = rec.data.as_slice().to_vec();
    raw[3 * t * n * d..4 * t * n * d].fill(1.0);
    rec.data = causaldyn_core::TrajectoryTensor::from_vec(rec.data.shape(), raw).unwrap();
    assert!(matches!(dataio::save_dataset(&rec, dir.path(), false), Err(DataError::RefusesOverwrite(_))));
    dataio::save_dataset(&rec, dir.path(), true).unwrap();
    let s = pipeline::run_baseline(dir.path(), Method::LaggedCorr, &BaselineConfig::default(), 0, 2).unwrap();
    assert_eq!(s.skipped.len(), 1, "{:?}", s.skipped);
    assert!(s.skipped[0].contains("trajectory 3"));
    assert_eq!(s.files, 19);
    assert_eq!(s.exit_code(), 2);
    let e = pipeline::evaluate(dir.path(), Method::LaggedCorr, None, HiddenTruth::Induced, 1).unwrap();
    let r = e.graphs.iter().find(|g| g.graph_id == entry.graph_id).unwrap().report.as_ref().unwrap();
    assert_eq!(r.auroc.len(), 9);
}

#[test]
fn end_to_end_reports_are_reproducible() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path();
        let simple = SimpleGrid { systems: vec!["Lorenz".into(), "Rossler".into()], deltas: vec![0.0, 0.5], timesteps: 300, trajectories: 3 };
        generate::run_plan(&simple.plan(4), 4, out, 3, false, &XroParams::default()).unwrap();
        generate::run_plan(&small_grid(1).plan(4), 4, out, 3, false, &XroParams::default()).unwrap();
        for m in [Method::Random, Method::LaggedCorr, Method::VarGranger] {
            pipeline::run_baseline(out, m, &BaselineConfig::default(), 4, 3).unwrap();
            pipeline::evaluate(out, m, None, HiddenTruth::Induced, 3).unwrap();
        }
        (snapshot(&out.join("reports")), dir)
    };
    let (a, _da) = run();
    let (b, _db) = run();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn cli_pipeline_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let gen = bin().args(["--out", out, "--seed", "3", "generate", "coupled", "--nodes", "4", "--delta", "0", "--confounders", "0", "--time-lag", "0,1"])
        .args(["--standardize", "0", "--init-ratios", "1:1", "--timesteps", "150", "--trajectories", "2"])
        .status()
        .unwrap();
    assert!(gen.success());
    assert_eq!(dataio::read_manifest(dir.path()).unwrap().latest().len(), 2);
    assert!(bin().args(["--out", out, "baseline", "laggedcorr"]).status().unwrap().success());
    let eval = bin().args(["--out", out, "evaluate", "laggedcorr", "--include-diagonal", "true"]).output().unwrap();
    assert!(eval.status.success());
    let table = String::from_utf8(eval.stdout).unwrap();
    assert_eq!(table.lines().count(), 3, "{table}");
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("reports/laggedcorr/summary.json")).unwrap()).unwrap();
    assert_eq!(json["graphs"][0]["report"]["pair_universe"], "with_diagonal");
    // evaluating a method with no predictions fails every graph
    assert_eq!(bin().args(["--out", out, "evaluate", "random"]).status().unwrap().code(), Some(1));
    assert_eq!(bin().args(["--out", out, "generate", "coupled", "--init-ratios", "bogus"]).status().unwrap().code(), Some(1));
    let cat = bin().arg("catalog").output().unwrap();
    let entries: serde_json::Value = serde_json::from_slice(&cat.stdout).unwrap();
    assert!(entries.as_array().unwrap().len() >= 2);
}

#[test]
fn csv_export_parses_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let plan = SimpleGrid { systems: vec!["Lorenz".into()], deltas: vec![0.5], timesteps: 50, trajectories: 2 }.plan(0);
    generate::run_plan(&plan, 0, dir.path(), 1, false, &XroParams::default()).unwrap();
    let status = bin().args(["--out", dir.path().to_str().unwrap(), "export-csv", "lorenz_delta0.5"]).status().unwrap();
    assert!(status.success());
    let rec = dataio::load_dataset(&dir.path().join("simple/lorenz_delta0.5")).unwrap();
    for k in 0..2 {
        let text = fs::read_to_string(dir.path().join(format!("simple/lorenz_delta0.5/csv/trajectory_{k:03}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "time,node0_dim0,node1_dim0,node2_dim0");
        for (s, line) in lines.enumerate() {
            let vals: Vec<f64> = line.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
            for (j, v) in vals.iter().enumerate() {
                assert_eq!(v.to_bits(), rec.data.get(k, s, j, 0).to_bits());
            }
        }
    }
}

#[test]
fn climate_tier_writes_eleven_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let s = generate::run_plan(&generate::climate_plan(60, 2), 1, dir.path(), 4, false, &XroParams::default()).unwrap();
    assert_eq!(s.written.len(), 11);
    let full = dataio::load_dataset(&dir.path().join("climate/full")).unwrap();
    assert_eq!(full.data.shape(), [2, 60, 10, 1]);
    assert!(full.graphs.summary.get(5, 0));
}
