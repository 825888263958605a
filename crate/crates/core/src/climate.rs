//! Seasonally forced recharge-oscillator model of ENSO coupled to other ocean modes.
//!
//! State `X = [T_ENSO, h, T_NPMM, T_SPMM, T_IOB, T_IOD, T_SIOD, T_TNA, T_ATL3, T_SASD]`
//! evolves as `dX/dt = L(t) X + N(X) + sigma * xi` with
//! `L(t) = L0 + sum_{j=1,2} Lc_j cos(j w t) + Ls_j sin(j w t)`, `w = 2 pi / 12` per month,
//! and red noise `dxi/dt = -r xi + dW`. Time is in months.
//!
//! `L` splits into the ENSO block (first two variables), coupling blocks `C1` (modes
//! to ENSO, columns 2..) and `C2` (ENSO to modes, rows 2..), and the mode block.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::graph::AdjMatrix;
use crate::math::{cos, ln, sin, sqrt, PI};
use crate::rng::split_seed;
use crate::systems::{rk4_step, DIVERGENCE_BOUND};
use crate::tensor::{Matrix, Tensor3, TrajectoryTensor};
use crate::{Error, Result, SeededRng};

pub const N_VARS: usize = 10;
pub const MONTHS_PER_YEAR: f64 = 12.0;
pub const OMEGA: f64 = 2.0 * PI / MONTHS_PER_YEAR;

pub const LABELS: [&str; N_VARS] = ["T_ENSO", "h", "T_NPMM", "T_SPMM", "T_IOB", "T_IOD", "T_SIOD", "T_TNA", "T_ATL3", "T_SASD"];

pub const T_ENSO: usize = 0;
pub const H: usize = 1;
pub const IOD: usize = 5;

/// Modes that can be cut off from ENSO. IOD is not among them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "NPMM")]
    Npmm,
    #[serde(rename = "SPMM")]
    Spmm,
    #[serde(rename = "IOB")]
    Iob,
    #[serde(rename = "SIOD")]
    Siod,
    #[serde(rename = "TNA")]
    Tna,
    #[serde(rename = "ATL3")]
    Atl3,
    #[serde(rename = "SASD")]
    Sasd,
}

impl Mode {
    pub const ALL: [Mode; 7] = [Mode::Npmm, Mode::Spmm, Mode::Iob, Mode::Siod, Mode::Tna, Mode::Atl3, Mode::Sasd];

    pub fn index(self) -> usize {
        match self {
            Mode::Npmm => 2,
            Mode::Spmm => 3,
            Mode::Iob => 4,
            Mode::Siod => 6,
            Mode::Tna => 7,
            Mode::Atl3 => 8,
            Mode::Sasd => 9,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Npmm => "NPMM",
            Mode::Spmm => "SPMM",
            Mode::Iob => "IOB",
            Mode::Siod => "SIOD",
            Mode::Tna => "TNA",
            Mode::Atl3 => "ATL3",
            Mode::Sasd => "SASD",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingExperiment {
    pub name: String,
    pub decoupled: Vec<Mode>,
}

impl CouplingExperiment {
    pub fn new(name: &str, decoupled: &[Mode]) -> Self {
        Self { name: name.into(), decoupled: decoupled.to_vec() }
    }

    pub fn full() -> Self {
        Self::new("full", &[])
    }
}

/// Fully coupled run, each mode cut singly, the Indian and Atlantic groups, and all.
pub fn experiment_suite() -> Vec<CouplingExperiment> {
    let mut out = alloc::vec![CouplingExperiment::full()];
    for m in Mode::ALL {
        out.push(CouplingExperiment { name: alloc::format!("no_{}", m.label()), decoupled: alloc::vec![m] });
    }
    out.push(CouplingExperiment::new("no_indian", &[Mode::Iob, Mode::Siod]));
    out.push(CouplingExperiment::new("no_atlantic", &[Mode::Tna, Mode::Atl3, Mode::Sasd]));
    out.push(CouplingExperiment::new("all_decoupled", &Mode::ALL));
    out
}

pub type Block = [[f64; N_VARS]; N_VARS];

/// Model coefficients; `L[i][k]` is the effect of variable `k` on `dX_i/dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XroParams {
    pub l0: Block,
    pub lc1: Block,
    pub ls1: Block,
    pub lc2: Block,
    pub ls2: Block,
    /// Coefficient of `T_ENSO^2` in the `T_ENSO` equation.
    pub b1: f64,
    /// Coefficient of `T_ENSO h` in the `T_ENSO` equation.
    pub b2: f64,
    /// Coefficient of `T_IOD^2` in the `T_IOD` equation.
    pub c_iod: f64,
    pub sigma_xi: [f64; N_VARS],
    pub r_xi: [f64; N_VARS],
    /// Integration step in months.
    pub dt: f64,
    /// Months discarded before recording, a whole number of years.
    pub burn_in_months: usize,
}

const ZERO: Block = [[0.0; N_VARS]; N_VARS];

impl Default for XroParams {
    fn default() -> Self {
        let w0 = 2.0 * PI / 48.0;
        let mut l0 = ZERO;
        l0[T_ENSO][T_ENSO] = -0.02;
        l0[T_ENSO][H] = w0;
        l0[H][T_ENSO] = -w0;
        l0[H][H] = -0.02;
        let damping = [0.15, 0.15, 0.2, 0.25, 0.2, 0.15, 0.25, 0.2];
        for (j, d) in damping.iter().enumerate() {
            l0[j + 2][j + 2] = -d;
        }
        // Modes acting on ENSO (C1).
        let to_enso = [0.02, 0.015, -0.02, 0.03, 0.01, -0.02, -0.015, 0.01];
        for (j, c) in to_enso.iter().enumerate() {
            l0[T_ENSO][j + 2] = *c;
        }
        l0[H][IOD] = 0.01;
        // ENSO acting on modes (C2).
        let from_enso = [0.05, 0.04, 0.06, 0.05, 0.03, 0.04, 0.03, 0.02];
        for (j, c) in from_enso.iter().enumerate() {
            l0[j + 2][T_ENSO] = *c;
        }
        l0[IOD][H] = 0.02;

        let (mut lc1, mut ls1, mut lc2, mut ls2) = (ZERO, ZERO, ZERO, ZERO);
        lc1[T_ENSO][T_ENSO] = 0.01;
        ls1[T_ENSO][T_ENSO] = 0.005;
        lc2[T_ENSO][T_ENSO] = 0.003;
        lc1[H][H] = 0.004;
        lc1[T_ENSO][IOD] = 0.01;
        ls1[IOD][T_ENSO] = 0.02;
        lc1[IOD][IOD] = 0.05;
        ls2[4][T_ENSO] = 0.01;

        Self {
            l0,
            lc1,
            ls1,
            lc2,
            ls2,
            b1: 0.002,
            b2: -0.002,
            c_iod: 0.01,
            sigma_xi: [0.2, 0.2, 0.15, 0.15, 0.1, 0.15, 0.1, 0.15, 0.15, 0.1],
            r_xi: [0.5; N_VARS],
            dt: 0.1,
            burn_in_months: 600,
        }
    }
}

impl XroParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        let blocks = [&self.l0, &self.lc1, &self.ls1, &self.lc2, &self.ls2];
        if blocks.iter().any(|b| b.iter().flatten().any(|v| !v.is_finite())) || ![self.b1, self.b2, self.c_iod].iter().all(|v| v.is_finite()) {
            return bad("non-finite climate coefficient");
        }
        if self.sigma_xi.iter().any(|s| !(*s >= 0.0)) {
            return bad("sigma_xi must be nonnegative");
        }
        if self.r_xi.iter().any(|r| !(*r > 0.0)) {
            return bad("r_xi must be positive");
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        let per_month = 1.0 / self.dt;
        if libm::fabs(per_month - libm::round(per_month)) > 1e-9 {
            return bad("dt must divide one month");
        }
        Ok(())
    }

    fn blocks_mut(&mut self) -> [&mut Block; 5] {
        [&mut self.l0, &mut self.lc1, &mut self.ls1, &mut self.lc2, &mut self.ls2]
    }

    pub fn blocks(&self) -> [&Block; 5] {
        [&self.l0, &self.lc1, &self.ls1, &self.lc2, &self.ls2]
    }

    /// Copy with the listed modes cut from the ENSO block in both directions.
    pub fn decoupled(&self, experiment: &CouplingExperiment) -> Self {
        let mut p = self.clone();
        for m in &experiment.decoupled {
            let j = m.index();
            for b in p.blocks_mut() {
                for e in [T_ENSO, H] {
                    b[e][j] = 0.0;
                    b[j][e] = 0.0;
                }
            }
        }
        p
    }

    pub fn without_noise(mut self) -> Self {
        self.sigma_xi = [0.0; N_VARS];
        self
    }

    pub fn linear(mut self) -> Self {
        self.b1 = 0.0;
        self.b2 = 0.0;
        self.c_iod = 0.0;
        self
    }

    fn steps_per_month(&self) -> usize {
        libm::round(1.0 / self.dt) as usize
    }
}

/// `L(t)` at time `t` months.
pub fn build_operator(params: &XroParams, t: f64) -> Block {
    let (c1, s1) = (cos(OMEGA * t), sin(OMEGA * t));
    let (c2, s2) = (cos(2.0 * OMEGA * t), sin(2.0 * OMEGA * t));
    let mut l = params.l0;
    for i in 0..N_VARS {
        for k in 0..N_VARS {
            l[i][k] += params.lc1[i][k] * c1 + params.ls1[i][k] * s1 + params.lc2[i][k] * c2 + params.ls2[i][k] * s2;
        }
    }
    l
}

fn drift(params: &XroParams, t: f64, x: &[f64; N_VARS]) -> [f64; N_VARS] {
    let l = build_operator(params, t);
    let mut out = [0.0; N_VARS];
    for i in 0..N_VARS {
        out[i] = (0..N_VARS).map(|k| l[i][k] * x[k]).sum();
    }
    out[T_ENSO] += params.b1 * x[T_ENSO] * x[T_ENSO] + params.b2 * x[T_ENSO] * x[H];
    out[IOD] += params.c_iod * x[IOD] * x[IOD];
    out
}

fn check(x: &[f64], step: usize) -> Result<()> {
    if x.iter().all(|v| v.is_finite() && v.abs() <= DIVERGENCE_BOUND) {
        Ok(())
    } else {
        Err(Error::Diverged { step })
    }
}

/// Euler-Maruyama on the state augmented with its red noise, from `x0` with zero
/// noise state at time 0; returns one sample per month (`months × 10`), the first
/// being the state after one month.
pub fn xro_path(params: &XroParams, experiment: &CouplingExperiment, months: usize, x0: [f64; N_VARS], rng: &mut SeededRng) -> Result<Matrix> {
    params.validate()?;
    let p = params.decoupled(experiment);
    let per = p.steps_per_month();
    let sq = sqrt(p.dt);
    let mut x = x0;
    let mut xi = [0.0; N_VARS];
    let mut out = Matrix::zeros(months, N_VARS);
    for step in 0..months * per {
        let t = step as f64 * p.dt;
        let f = drift(&p, t, &x);
        for i in 0..N_VARS {
            x[i] += (f[i] + p.sigma_xi[i] * xi[i]) * p.dt;
        }
        for i in 0..N_VARS {
            xi[i] += -p.r_xi[i] * xi[i] * p.dt + sq * rng.normal();
        }
        check(&x, step)?;
        if (step + 1) % per == 0 {
            let m = (step + 1) / per - 1;
            for i in 0..N_VARS {
                out.set(m, i, x[i]);
            }
        }
    }
    Ok(out)
}

/// Monthly series after the burn-in, starting from rest.
pub fn xro_integrate(params: &XroParams, experiment: &CouplingExperiment, months: usize, rng: &mut SeededRng) -> Result<Matrix> {
    let burn = params.burn_in_months;
    let full = xro_path(params, experiment, burn + months, [0.0; N_VARS], rng)?;
    Ok(Matrix::from_fn(months, N_VARS, |m, i| full.get(burn + m, i)))
}

/// Noise-free RK4 path at step `dt`, every step recorded (the initial state excluded).
pub fn xro_deterministic(params: &XroParams, experiment: &CouplingExperiment, steps: usize, x0: [f64; N_VARS]) -> Result<Vec<[f64; N_VARS]>> {
    params.validate()?;
    let p = params.decoupled(experiment);
    let mut x = x0;
    let mut out = Vec::with_capacity(steps);
    for step in 0..steps {
        x = rk4_step(|t, y| drift(&p, t, y), step as f64 * p.dt, &x, p.dt);
        check(&x, step)?;
        out.push(x);
    }
    Ok(out)
}

/// Edge `k -> i` wherever any operator block couples them or the nonlinearity of `i`
/// reads `k`; self-loops kept.
pub fn ground_truth_graph(params: &XroParams, experiment: &CouplingExperiment) -> AdjMatrix {
    let p = params.decoupled(experiment);
    let mut adj = AdjMatrix::from_fn(N_VARS, |k, i| p.blocks().iter().any(|b| b[i][k].abs() > 1e-12));
    if p.b1 != 0.0 {
        adj.set(T_ENSO, T_ENSO, true);
    }
    if p.b2 != 0.0 {
        adj.set(T_ENSO, T_ENSO, true);
        adj.set(H, T_ENSO, true);
    }
    if p.c_iod != 0.0 {
        adj.set(IOD, IOD, true);
    }
    adj
}

/// Exponential growth rate per month of the linearized seasonal system, from the
/// spectral radius of the one-year propagator. Negative means stable.
pub fn floquet_growth_rate(params: &XroParams, experiment: &CouplingExperiment) -> f64 {
    let p = params.decoupled(experiment).linear().without_noise();
    let per_year = p.steps_per_month() * MONTHS_PER_YEAR as usize;
    let year = |v: [f64; N_VARS]| {
        let mut x = v;
        for s in 0..per_year {
            x = rk4_step(|t, y| drift(&p, t, y), s as f64 * p.dt, &x, p.dt);
        }
        x
    };
    let norm = |v: &[f64; N_VARS]| sqrt(v.iter().map(|a| a * a).sum());
    let mut v = [1.0; N_VARS];
    let mut log_growth = 0.0;
    let (warm, iters) = (20, 100);
    for it in 0..warm + iters {
        let w = year(v);
        let g = norm(&w);
        if it >= warm {
            log_growth += ln(g);
        }
        for (a, b) in v.iter_mut().zip(w.iter()) {
            *a = b / g;
        }
    }
    log_growth / (iters as f64 * MONTHS_PER_YEAR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClimateDataset {
    pub experiment: CouplingExperiment,
    pub truth: AdjMatrix,
    /// `[trajectories, months, 10, 1]`.
    pub data: TrajectoryTensor,
}

/// One experiment; trajectory `k` draws from `split(seed, k + 1)`.
pub fn generate_experiment(params: &XroParams, experiment: &CouplingExperiment, months: usize, trajectories: usize, seed: u64) -> Result<ClimateDataset> {
    let mut runs = Vec::with_capacity(trajectories);
    for k in 0..trajectories {
        let mut rng = SeededRng::new(split_seed(seed, k as u64 + 1));
        let m = xro_integrate(params, experiment, months, &mut rng)?;
        runs.push(Tensor3::from_vec([months, N_VARS, 1], m.as_slice().to_vec())?);
    }
    let data = if runs.is_empty() { TrajectoryTensor::zeros([0, months, N_VARS, 1]) } else { TrajectoryTensor::stack(&runs)? };
    Ok(ClimateDataset { experiment: experiment.clone(), truth: ground_truth_graph(params, experiment), data })
}

/// The whole suite; experiment `e` uses seed `split(seed, e)`.
pub fn generate_climate_dataset(params: &XroParams, months: usize, trajectories: usize, seed: u64) -> Result<Vec<ClimateDataset>> {
    experiment_suite()
        .iter()
        .enumerate()
        .map(|(e, exp)| generate_experiment(params, exp, months, trajectories, split_seed(seed, e as u64)))
        .collect()
}
