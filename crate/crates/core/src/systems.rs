//! Three-dimensional driver systems and fixed-step integrators.

use alloc::string::String;
use alloc::vec::Vec;
use serde::Serialize;

use crate::graph::AdjMatrix;
use crate::math::{sin, sqrt, PI};
use crate::tensor::Tensor3;
use crate::{Error, Result, SeededRng};

/// States beyond this magnitude count as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e6;
pub const DEFAULT_BURN_IN: usize = 1000;
pub const DEFAULT_MAX_RETRY: usize = 10;

pub type Rhs = fn(t: f64, x: [f64; 3], p: &[f64]) -> [f64; 3];

/// A named autonomous (or explicitly time-dependent) flow on R^3.
#[derive(Debug, Clone, Serialize)]
pub struct DriverSystem {
    pub name: &'static str,
    pub param_names: &'static [&'static str],
    pub params: Vec<f64>,
    #[serde(skip)]
    pub rhs: Rhs,
    /// `sparsity[k][i]`: does `dx_i/dt` depend on `x_k`.
    pub sparsity: [[bool; 3]; 3],
    pub ic0: [f64; 3],
    pub dt: f64,
    pub burn_in: usize,
}

impl DriverSystem {
    #[inline]
    pub fn eval(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        (self.rhs)(t, x, &self.params)
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }
}

/// Registry of driver systems; starts with the built-in catalog.
#[derive(Debug, Clone)]
pub struct Catalog {
    systems: Vec<DriverSystem>,
}

impl Default for Catalog {
    fn default() -> Self {
        Self { systems: catalog() }
    }
}

impl Catalog {
    pub fn empty() -> Self {
        Self { systems: Vec::new() }
    }

    /// Add or replace (by name) a system.
    pub fn register(&mut self, system: DriverSystem) {
        match self.systems.iter_mut().find(|s| s.name == system.name) {
            Some(slot) => *slot = system,
            None => self.systems.push(system),
        }
    }

    pub fn systems(&self) -> &[DriverSystem] {
        &self.systems
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.systems.iter().map(|s| s.name).collect()
    }

    /// Case-insensitive lookup; ignores `-`, `_` and spaces.
    pub fn get(&self, name: &str) -> Result<&DriverSystem> {
        let key = normalize(name);
        self.systems
            .iter()
            .find(|s| normalize(s.name) == key)
            .ok_or_else(|| Error::UnknownSystem(String::from(name)))
    }

    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }
}

fn normalize(s: &str) -> String {
    s.chars().filter(|c| c.is_alphanumeric()).flat_map(|c| c.to_lowercase()).collect()
}

const T: bool = true;
const F: bool = false;

/// Transpose of a "row = effect" listing into the cause-major convention.
const fn by_effect(effects: [[bool; 3]; 3]) -> [[bool; 3]; 3] {
    let mut out = [[false; 3]; 3];
    let mut i = 0;
    while i < 3 {
        let mut k = 0;
        while k < 3 {
            out[k][i] = effects[i][k];
            k += 1;
        }
        i += 1;
    }
    out
}

fn lorenz(_: f64, [x, y, z]: [f64; 3], p: &[f64]) -> [f64; 3] {
    let (sigma, rho, beta) = (p[0], p[1], p[2]);
    [sigma * (y - x), x * (rho - z) - y, x * y - beta * z]
}

fn rossler(_: f64, [x, y, z]: [f64; 3], p: &[f64]) -> [f64; 3] {
    let (a, b, c) = (p[0], p[1], p[2]);
    [-y - z, x + a * y, b + z * (x - c)]
}

fn chen(_: f64, [x, y, z]: [f64; 3], p: &[f64]) -> [f64; 3] {
    let (a, b, c) = (p[0], p[1], p[2]);
    [a * (y - x), (c - a) * x - x * z + c * y, x * y - b * z]
}

fn thomas(_: f64, [x, y, z]: [f64; 3], p: &[f64]) -> [f64; 3] {
    let b = p[0];
    [sin(y) - b * x, sin(z) - b * y, sin(x) - b * z]
}

fn halvorsen(_: f64, [x, y, z]: [f64; 3], p: &[f64]) -> [f64; 3] {
    let a = p[0];
    [
        -a * x - 4.0 * y - 4.0 * z - y * y,
        -a * y - 4.0 * z - 4.0 * x - z * z,
        -a * z - 4.0 * x - 4.0 * y - x * x,
    ]
}

fn dadras(_: f64, [x, y, z]: [f64; 3], p: &[f64]) -> [f64; 3] {
    let (a, b, c, d, e) = (p[0], p[1], p[2], p[3], p[4]);
    [y - a * x + b * y * z, c * y - x * z + z, d * x * y - e * z]
}

fn sprott_b(_: f64, [x, y, z]: [f64; 3], p: &[f64]) -> [f64; 3] {
    let (a, b, c) = (p[0], p[1], p[2]);
    [a * y * z, x - b * y, c - x * y]
}

fn aizawa(_: f64, [x, y, z]: [f64; 3], p: &[f64]) -> [f64; 3] {
    let (a, b, c, d, e, f) = (p[0], p[1], p[2], p[3], p[4], p[5]);
    [
        (z - b) * x - d * y,
        d * x + (z - b) * y,
        c + a * z - z * z * z / 3.0 - (x * x + y * y) * (1.0 + e * z) + f * z * x * x * x,
    ]
}

fn rucklidge(_: f64, [x, y, z]: [f64; 3], p: &[f64]) -> [f64; 3] {
    let (a, b) = (p[0], p[1]);
    [-a * x + b * y - y * z, x, -z + y * y]
}

fn nose_hoover(_: f64, [x, y, z]: [f64; 3], p: &[f64]) -> [f64; 3] {
    let a = p[0];
    [y, -x + y * z, a - y * y]
}

fn wang_sun(_: f64, [x, y, z]: [f64; 3], p: &[f64]) -> [f64; 3] {
    let (a, b, c, d, e, f) = (p[0], p[1], p[2], p[3], p[4], p[5]);
    [a * x + c * y * z, b * x + d * y - x * z, e * z + f * x * y]
}

fn arneodo(_: f64, [x, y, z]: [f64; 3], p: &[f64]) -> [f64; 3] {
    let (a, b, c, d) = (p[0], p[1], p[2], p[3]);
    [y, z, -a * x - b * y - c * z + d * x * x * x]
}

/// Built-in systems. Sparsity is listed per effect (`parents of x`, `of y`, `of z`).
pub fn catalog() -> Vec<DriverSystem> {
    let sys = |name, param_names, params: &[f64], rhs: Rhs, parents, ic0, dt| DriverSystem {
        name,
        param_names,
        params: params.to_vec(),
        rhs,
        sparsity: by_effect(parents),
        ic0,
        dt,
        burn_in: DEFAULT_BURN_IN,
    };
    alloc::vec![
        sys("Lorenz", &["sigma", "rho", "beta"], &[10.0, 28.0, 8.0 / 3.0], lorenz,
            [[T, T, F], [T, T, T], [T, T, T]], [-9.79, -15.04, 20.53], 0.01),
        sys("Rossler", &["a", "b", "c"], &[0.2, 0.2, 5.7], rossler,
            [[F, T, T], [T, T, F], [T, F, T]], [6.5, 0.0, 0.3], 0.05),
        sys("Chen", &["a", "b", "c"], &[35.0, 3.0, 28.0], chen,
            [[T, T, F], [T, T, T], [T, T, T]], [-10.0, 0.0, 37.0], 0.002),
        sys("Thomas", &["b"], &[0.208186], thomas,
            [[T, T, F], [F, T, T], [T, F, T]], [0.1, 0.0, 0.0], 0.1),
        sys("Halvorsen", &["a"], &[1.4], halvorsen,
            [[T, T, T], [T, T, T], [T, T, T]], [-1.48, -1.51, 2.04], 0.01),
        sys("Dadras", &["a", "b", "c", "d", "e"], &[3.0, 2.7, 1.7, 2.0, 9.0], dadras,
            [[T, T, T], [T, T, T], [T, T, T]], [1.1, 2.1, -2.0], 0.01),
        sys("SprottB", &["a", "b", "c"], &[1.0, 1.0, 1.0], sprott_b,
            [[F, T, T], [T, T, F], [T, T, F]], [0.4, 0.3, 0.2], 0.05),
        sys("Aizawa", &["a", "b", "c", "d", "e", "f"], &[0.95, 0.7, 0.6, 3.5, 0.25, 0.1], aizawa,
            [[T, T, T], [T, T, T], [T, T, T]], [0.1, 0.0, 0.0], 0.01),
        sys("Rucklidge", &["a", "b"], &[2.0, 6.7], rucklidge,
            [[T, T, T], [T, F, F], [F, T, T]], [1.0, 0.0, 4.5], 0.05),
        sys("NoseHoover", &["a"], &[1.0], nose_hoover,
            [[F, T, F], [T, T, T], [F, T, F]], [0.0, 5.0, 0.0], 0.02),
        sys("WangSun", &["a", "b", "c", "d", "e", "f"], &[0.2, -0.01, 1.0, -0.4, -1.0, -1.0], wang_sun,
            [[T, T, T], [T, T, T], [T, T, T]], [0.5, 0.1, 0.1], 0.05),
        sys("Arneodo", &["a", "b", "c", "d"], &[-5.5, 3.5, 1.0, -1.0], arneodo,
            [[F, T, F], [F, F, T], [T, T, T]], [0.2, 0.2, 0.2], 0.02),
    ]
}

/// Ground-truth adjacency of a driver: row = cause, column = effect, self-loops kept.
pub fn adjacency_from_jacobian(system: &DriverSystem) -> AdjMatrix {
    AdjMatrix::from_fn(3, |k, i| system.sparsity[k][i])
}

#[inline]
fn axpy<const D: usize>(x: &[f64; D], a: f64, y: &[f64; D]) -> [f64; D] {
    let mut out = *x;
    for i in 0..D {
        out[i] += a * y[i];
    }
    out
}

/// One classical fourth-order Runge-Kutta step.
#[inline]
pub fn rk4_step<const D: usize>(f: impl Fn(f64, &[f64; D]) -> [f64; D], t: f64, x: &[f64; D], dt: f64) -> [f64; D] {
    let k1 = f(t, x);
    let k2 = f(t + 0.5 * dt, &axpy(x, 0.5 * dt, &k1));
    let k3 = f(t + 0.5 * dt, &axpy(x, 0.5 * dt, &k2));
    let k4 = f(t + dt, &axpy(x, dt, &k3));
    let mut out = *x;
    for i in 0..D {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn check(x: &[f64; 3], step: usize) -> Result<()> {
    if x.iter().all(|v| v.is_finite() && v.abs() <= DIVERGENCE_BOUND) {
        Ok(())
    } else {
        Err(Error::Diverged { step })
    }
}

/// Fixed-step driver integration. `burn_in` steps are discarded, then the state after
/// each of the next `steps` steps is recorded.
fn integrate_with(
    system: &DriverSystem,
    steps: usize,
    ic: [f64; 3],
    mut step: impl FnMut(f64, &[f64; 3]) -> [f64; 3],
) -> Result<Vec<[f64; 3]>> {
    if steps == 0 {
        return Err(Error::InvalidConfig("need at least one recorded step".into()));
    }
    if !(system.dt > 0.0) {
        return Err(Error::InvalidConfig(alloc::format!("{}: dt must be positive", system.name)));
    }
    check(&ic, 0)?;
    let mut x = ic;
    let mut out = Vec::with_capacity(steps);
    let total = system.burn_in + steps;
    for s in 0..total {
        let t = s as f64 * system.dt;
        x = step(t, &x);
        check(&x, s + 1)?;
        if s >= system.burn_in {
            out.push(x);
        }
    }
    Ok(out)
}

/// Classical RK4 with the system's fixed step.
pub fn integrate_ode(system: &DriverSystem, steps: usize, ic: [f64; 3]) -> Result<Vec<[f64; 3]>> {
    let dt = system.dt;
    integrate_with(system, steps, ic, |t, x| rk4_step(|t, x| system.eval(t, *x), t, x, dt))
}

/// Explicit (forward) Euler, the deterministic skeleton of Euler-Maruyama.
pub fn integrate_euler(system: &DriverSystem, steps: usize, ic: [f64; 3]) -> Result<Vec<[f64; 3]>> {
    let dt = system.dt;
    integrate_with(system, steps, ic, |t, x| {
        let f = system.eval(t, *x);
        axpy(x, dt, &f)
    })
}

/// Noise amplitude of the additive Brownian forcing.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, serde::Deserialize)]
pub struct SdeConfig {
    pub delta: f64,
}

/// Euler-Maruyama: `x + f(t, x) dt + delta sqrt(dt) z`, `z ~ N(0, I)`.
pub fn integrate_sde(system: &DriverSystem, steps: usize, ic: [f64; 3], sde: SdeConfig, rng: &mut SeededRng) -> Result<Vec<[f64; 3]>> {
    if !(sde.delta >= 0.0) {
        return Err(Error::InvalidConfig(alloc::format!("noise amplitude {} is negative", sde.delta)));
    }
    if sde.delta == 0.0 {
        return integrate_euler(system, steps, ic);
    }
    let dt = system.dt;
    let scale = sde.delta * sqrt(dt);
    integrate_with(system, steps, ic, |t, x| {
        let f = system.eval(t, *x);
        let mut next = axpy(x, dt, &f);
        for v in next.iter_mut() {
            *v += scale * rng.normal();
        }
        next
    })
}

/// RK4 for `delta == 0`, Euler-Maruyama otherwise.
pub fn integrate(system: &DriverSystem, steps: usize, ic: [f64; 3], sde: SdeConfig, rng: &mut SeededRng) -> Result<Vec<[f64; 3]>> {
    if sde.delta == 0.0 {
        integrate_ode(system, steps, ic)
    } else {
        integrate_sde(system, steps, ic, sde, rng)
    }
}

/// Gaussian spread around the default initial condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcPerturbation {
    /// Relative to the largest component of the default condition.
    pub relative: f64,
    pub floor: f64,
}

impl Default for IcPerturbation {
    fn default() -> Self {
        Self { relative: 1e-2, floor: 1e-2 }
    }
}

impl IcPerturbation {
    pub const NONE: IcPerturbation = IcPerturbation { relative: 0.0, floor: 0.0 };
}

pub fn sample_initial_condition(system: &DriverSystem, rng: &mut SeededRng) -> [f64; 3] {
    sample_initial_condition_with(system, IcPerturbation::default(), rng)
}

pub fn sample_initial_condition_with(system: &DriverSystem, spread: IcPerturbation, rng: &mut SeededRng) -> [f64; 3] {
    let scale = system.ic0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sigma = (spread.relative * scale).max(spread.floor);
    let mut ic = system.ic0;
    if sigma > 0.0 {
        for v in ic.iter_mut() {
            *v += sigma * rng.normal();
        }
    }
    ic
}

/// Integrate `system` from a fresh random initial condition, retrying (with a new
/// initial condition) up to `max_retry` times on divergence.
pub fn solve_system(system: &DriverSystem, steps: usize, sde: SdeConfig, max_retry: usize, rng: &mut SeededRng) -> Result<Vec<[f64; 3]>> {
    let mut last = Error::RetryExhausted { what: "integrate system", attempts: 0 };
    for _ in 0..max_retry.max(1) {
        let ic = sample_initial_condition(system, rng);
        match integrate(system, steps, ic, sde, rng) {
            Ok(path) => return Ok(path),
            Err(e @ Error::Diverged { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    match last {
        Error::Diverged { .. } => Err(Error::RetryExhausted { what: "integrate system", attempts: max_retry.max(1) }),
        e => Err(e),
    }
}

/// Trajectories of randomly chosen catalog systems for `num_nodes` slots, as
/// `[steps, num_nodes, 3]`, plus the system name used in each slot.
///
/// A preferred system per slot is drawn without replacement (cycling when there are
/// more slots than systems). The preferred system is tried first; after a divergence
/// the slot retries with other systems drawn uniformly from the rest of the catalog.
pub fn solve_random_systems(
    catalog: &Catalog,
    steps: usize,
    num_nodes: usize,
    sde: SdeConfig,
    max_retry: usize,
    rng: &mut SeededRng,
) -> Result<(Tensor3, Vec<&'static str>)> {
    let mut out = Tensor3::zeros(steps, num_nodes, 3);
    let mut names = Vec::with_capacity(num_nodes);
    if num_nodes == 0 {
        return Ok((out, names));
    }
    let systems = catalog.systems();
    if systems.is_empty() {
        return Err(Error::InvalidConfig("empty system catalog".into()));
    }
    let preferred = rng.sample_indices(systems.len(), num_nodes.min(systems.len()));
    for slot in 0..num_nodes {
        let home = preferred[slot % preferred.len()];
        let mut solved = None;
        for attempt in 0..max_retry.max(1) {
            let pick = if attempt == 0 || systems.len() == 1 {
                home
            } else {
                let j = rng.below(systems.len() - 1);
                if j >= home { j + 1 } else { j }
            };
            let sys = &systems[pick];
            let ic = sample_initial_condition(sys, rng);
            match integrate(sys, steps, ic, sde, rng) {
                Ok(path) => {
                    solved = Some((path, sys.name));
                    break;
                }
                Err(Error::Diverged { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        let (path, name) = solved.ok_or(Error::RetryExhausted { what: "integrate system", attempts: max_retry.max(1) })?;
        for (t, x) in path.iter().enumerate() {
            out.at_mut(t, slot).copy_from_slice(x);
        }
        names.push(name);
    }
    Ok((out, names))
}

/// Trajectories of one named system for every slot.
pub fn solve_named_systems(system: &DriverSystem, steps: usize, num_nodes: usize, sde: SdeConfig, max_retry: usize, rng: &mut SeededRng) -> Result<Tensor3> {
    let mut out = Tensor3::zeros(steps, num_nodes, 3);
    for slot in 0..num_nodes {
        let path = solve_system(system, steps, sde, max_retry, rng)?;
        for (t, x) in path.iter().enumerate() {
            out.at_mut(t, slot).copy_from_slice(x);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct SinusoidConfig {
    pub max_num_periods: f64,
}

impl Default for SinusoidConfig {
    fn default() -> Self {
        Self { max_num_periods: 5.0 }
    }
}

/// Sinusoidal drivers `A sin(t + phi)` with `A ~ U[-1, 1]`, `phi ~ U[0, 2pi]` and the
/// time axis spanning `[0, P_max 2pi u]`, `u ~ U(0, 1)`, per `(node, dim)`.
pub fn drive_sin(steps: usize, num_nodes: usize, dim: usize, cfg: SinusoidConfig, rng: &mut SeededRng) -> Tensor3 {
    let mut out = Tensor3::zeros(steps, num_nodes, dim);
    let count = num_nodes * dim;
    if count == 0 {
        return out;
    }
    let amplitude: Vec<f64> = (0..count).map(|_| 2.0 * rng.uniform() - 1.0).collect();
    let phase: Vec<f64> = (0..count).map(|_| 2.0 * PI * rng.uniform()).collect();
    let max_time: Vec<f64> = (0..count).map(|_| cfg.max_num_periods * 2.0 * PI * rng.uniform()).collect();
    let denom = if steps > 1 { (steps - 1) as f64 } else { 1.0 };
    for t in 0..steps {
        let frac = t as f64 / denom;
        for c in 0..count {
            let v = amplitude[c] * sin(max_time[c] * frac + phase[c]);
            out.set(t, c / dim, c % dim, v);
        }
    }
    out
}
