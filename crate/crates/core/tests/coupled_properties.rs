use causaldyn_core::coupling::{
    create_scm, initialize_drivers, initialize_state, propagate, scm_rng, simulate_model, simulate_system, DriverInit, DriverKind,
    GenerationConfig, ScmParams,
};
use causaldyn_core::graph::{self, GraphJson};
use causaldyn_core::math::mean_var;
use causaldyn_core::systems::Catalog;
use causaldyn_core::{AdjMatrix, CausalGraph, SeededRng, Tensor3};

/// Recompute node `i` at kept row `t` directly from the stored parents.
fn recompute(p: &ScmParams, x: &Tensor3, i: usize, t: usize) -> Vec<f64> {
    let d = p.node_dim;
    let mut out = vec![0.0; d];
    let mut add = |k: usize, src: &[f64]| {
        for r in 0..d {
            let mut acc = p.bias(k)[r];
            for c in 0..d {
                acc += p.weight(k)[r * d + c] * src[c];
            }
            out[r] += acc;
        }
    };
    for k in p.graph.adj().parents(i) {
        add(k, x.at(t, k));
    }
    if let Some(l) = p.graph.lagged() {
        for k in l.parents(i) {
            add(k, x.at(t - p.graph.tau(), k));
        }
    }
    out
}

#[test]
fn non_root_nodes_follow_their_parents() {
    let catalog = Catalog::default();
    let mut checked_lagged = 0;
    for seed in 0..60u64 {
        let n = 2 + (seed as usize % 7);
        let cfg = GenerationConfig {
            num_nodes: n,
            num_timesteps: 120,
            num_trajectories: 1,
            seed,
            confounders: seed % 3 == 0,
            time_lag: if seed % 2 == 0 { 1 + (seed as usize % 3) } else { 0 },
            p_t: 0.4,
            node_dim: if seed % 5 == 0 { 1 } else { 3 },
            ..Default::default()
        };
        let sim = simulate_system(&cfg, &catalog).unwrap();
        let p = &sim.params;
        let x = sim.data.trajectory(0);
        let drivers = p.driver_mask();
        let tau = p.graph.tau();
        checked_lagged += usize::from(p.graph.lagged().is_some_and(|l| l.edge_count() > 0));
        for i in (0..n).filter(|&i| !drivers[i]) {
            for t in tau..120 {
                let want = recompute(p, &x, i, t);
                for (a, b) in x.at(t, i).iter().zip(&want) {
                    assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "seed {seed} node {i} t {t}: {a} vs {b}");
                }
            }
        }
    }
    assert!(checked_lagged > 10);
}

#[test]
fn zeroing_a_driver_only_touches_descendants() {
    let catalog = Catalog::default();
    for seed in 0..20u64 {
        let cfg = GenerationConfig { num_nodes: 8, num_timesteps: 100, seed, confounders: seed % 2 == 0, ..Default::default() };
        let p = create_scm(&cfg, &mut scm_rng(&cfg)).unwrap();
        let init = initialize_drivers(&cfg, &p, &catalog, &mut SeededRng::new(seed + 100)).unwrap();
        let base = propagate(initialize_state(&init, &p, false).unwrap(), &p, false, init.lead).unwrap();
        let summary = p.graph.summary_adj();
        for r in (0..8).filter(|&r| p.driver_mask()[r]) {
            let mut edited = init.clone();
            for t in 0..edited.values.time_len() {
                edited.values.at_mut(t, r).fill(0.0);
            }
            let out = propagate(initialize_state(&edited, &p, false).unwrap(), &p, false, init.lead).unwrap();
            let reach = summary.descendants(r);
            for i in 0..8 {
                let changed = (0..100).any(|t| out.at(t, i) != base.at(t, i));
                if i != r && !reach[i] {
                    assert!(!changed, "seed {seed}: zeroing {r} moved {i}");
                }
            }
        }
    }
}

#[test]
fn lagged_parent_is_read_tau_steps_back() {
    let json = GraphJson { n: 2, tau: 2, adj: AdjMatrix::empty(2), lagged: Some(AdjMatrix::from_edges(2, &[(1, 0)])), hidden: vec![] };
    let g = CausalGraph::try_from(json).unwrap();
    let p = ScmParams { root_mask: graph::root_nodes(&g), graph: g, node_dim: 1, weights: vec![0.0, 1.5], biases: vec![0.0, 0.2], p_zero: 0.0 };
    assert_eq!(p.lead(), 2);
    let f = |t: f64| (0.3 * t).sin() + 0.01 * t * t;
    let run = |shift: f64| {
        let values = Tensor3::from_vec([12, 2, 1], (0..12).flat_map(|t| [0.0, f(t as f64 + shift)]).collect()).unwrap();
        let init = DriverInit { values, kinds: vec![DriverKind::Sinusoid; 2], lead: 2 };
        propagate(initialize_state(&init, &p, false).unwrap(), &p, false, 2).unwrap()
    };
    let (a, b) = (run(0.0), run(1.0));
    for s in 2..12 {
        assert_eq!(a.get(s, 0, 0), 1.5 * f((s - 2) as f64) + 0.2);
        assert_eq!(b.get(s, 0, 0), 1.5 * f((s - 1) as f64) + 0.2);
    }
}

fn chain(n: usize) -> CausalGraph {
    let edges: Vec<(usize, usize)> = (1..n).map(|i| (i, i - 1)).collect();
    CausalGraph::new(AdjMatrix::from_edges(n, &edges)).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len() % 2 == 0 { (v[m - 1] + v[m]) / 2.0 } else { v[m] }
}

/// Median total variance at each chain position, listed from the root down.
fn chain_variance_profile(node_dim: usize, strong: bool) -> Vec<f64> {
    let catalog = Catalog::default();
    let n = 5;
    let mut per_position = vec![Vec::new(); n];
    for seed in 0..100u64 {
        let cfg = GenerationConfig { num_nodes: n, node_dim, num_timesteps: 300, num_trajectories: 1, seed, ..Default::default() };
        let mut rng = SeededRng::new(seed);
        let mut p = ScmParams::sample(chain(n), node_dim, 0.0, &mut rng);
        if strong {
            for w in p.weights.iter_mut() {
                while w.abs() <= 1.0 {
                    *w = rng.normal();
                }
            }
        }
        let sim = simulate_model(&cfg, p, &catalog).unwrap();
        let x = sim.data.trajectory(0);
        for (pos, node) in (0..n).rev().enumerate() {
            let v: f64 = (0..node_dim).map(|d| mean_var(x.channel(node, d)).1).sum();
            per_position[pos].push(v);
        }
    }
    per_position.into_iter().map(median).collect()
}

#[test]
fn unstandardized_variance_grows_down_the_chain() {
    for (d, strong) in [(1, true), (3, true), (3, false)] {
        let profile = chain_variance_profile(d, strong);
        for w in profile.windows(2) {
            assert!(w[1] >= w[0], "d={d} strong={strong}: {profile:?}");
        }
    }
}

#[test]
fn standardized_nodes_have_unit_moments() {
    let catalog = Catalog::default();
    for seed in 0..30u64 {
        let cfg = GenerationConfig {
            num_nodes: 6,
            num_timesteps: 200,
            num_trajectories: 2,
            seed,
            standardize: true,
            time_lag: (seed % 2) as usize,
            confounders: seed % 3 == 0,
            init_ratios: (1.0, (seed % 2) as f64),
            ..Default::default()
        };
        let sim = simulate_system(&cfg, &catalog).unwrap();
        for k in 0..2 {
            let x = sim.data.trajectory(k);
            for node in 0..6 {
                for d in 0..3 {
                    let (m, v) = mean_var(x.channel(node, d));
                    assert!(m.abs() < 1e-9 && (v - 1.0).abs() < 1e-6, "seed {seed} node {node}: {m} {v}");
                }
            }
        }
    }
}

#[test]
fn default_configuration_shape() {
    let sim = simulate_system(&GenerationConfig::default(), &Catalog::default()).unwrap();
    assert_eq!(sim.data.shape(), [10, 1000, 10, 3]);
    assert!(sim.data.is_finite());
    assert_eq!(sim.drivers.len(), 10);
}

#[test]
fn one_dimensional_nodes_take_first_driver_dim() {
    let cfg = GenerationConfig { num_nodes: 4, node_dim: 1, num_timesteps: 50, init_ratios: (1.0, 0.0), seed: 3, ..Default::default() };
    let p = create_scm(&cfg, &mut scm_rng(&cfg)).unwrap();
    let init = initialize_drivers(&cfg, &p, &Catalog::default(), &mut SeededRng::new(1)).unwrap();
    assert_eq!(init.values.shape(), [50, 4, 1]);
    assert!(init.values.is_finite());
}
