//! Reference scorers: lagged cross-correlation, ridge VAR-Granger and uniform noise.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::linalg::ridge_regression;
use crate::math::{mean_var, sqrt};
use crate::metrics::ScoredGraph;
use crate::tensor::{Matrix, Tensor3};
use crate::{Error, Result, SeededRng};

/// Collapse a multi-dimensional node to one series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeReduction {
    #[default]
    FirstDim,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub tau_max: usize,
    pub ridge: f64,
    pub reduction: NodeReduction,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { tau_max: 1, ridge: 1e-6, reduction: NodeReduction::FirstDim }
    }
}

/// `[T, n, d]` to a `T × n` matrix.
pub fn reduce_nodes(data: &Tensor3, rule: NodeReduction) -> Matrix {
    let [t, n, d] = data.shape();
    Matrix::from_fn(t, n, |r, c| match rule {
        NodeReduction::FirstDim => data.get(r, c, 0),
        NodeReduction::Mean => data.at(r, c).iter().sum::<f64>() / d as f64,
    })
}

fn column_stats(x: &Matrix, c: usize) -> Result<(f64, f64)> {
    let (m, v) = mean_var(x.column(c));
    let sd = sqrt(v);
    if !(sd.is_finite() && sd > 1e-12 * m.abs().max(1.0)) {
        return Err(Error::ConstantSeries(c));
    }
    Ok((m, sd))
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len() as f64;
    let ma = a.iter().sum::<f64>() / len;
    let mb = b.iter().sum::<f64>() / len;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / sqrt(saa * sbb)
}

/// `score(k, i) = max_{0 <= tau <= tau_max} |corr(x_k(t - tau), x_i(t))|`.
pub fn lagged_correlation(x: &Matrix, cfg: &BaselineConfig) -> Result<ScoredGraph> {
    let (t, n) = (x.rows(), x.cols());
    if t < cfg.tau_max + 2 {
        return Err(Error::InvalidConfig(alloc::format!("{t} steps is too short for tau_max = {}", cfg.tau_max)));
    }
    for c in 0..n {
        column_stats(x, c)?;
    }
    let cols: Vec<Vec<f64>> = (0..n).map(|c| x.column(c).collect()).collect();
    Ok(ScoredGraph::from_fn(n, |k, i| {
        (0..=cfg.tau_max).map(|tau| pearson(&cols[k][..t - tau], &cols[i][tau..]).abs()).fold(0.0, f64::max)
    }))
}

/// Least-squares VAR coefficients `A_1..A_tau_max` (`A_tau[i][k]`: effect of `x_k(t - tau)`
/// on `x_i(t)`), fitted with an intercept and optional column standardization.
pub fn fit_var(x: &Matrix, tau_max: usize, ridge: f64, standardize: bool) -> Result<Vec<Matrix>> {
    let (t, n) = (x.rows(), x.cols());
    if tau_max == 0 {
        return Err(Error::InvalidConfig("VAR needs tau_max >= 1".into()));
    }
    if t <= (tau_max + 1) * n {
        return Err(Error::InvalidConfig(alloc::format!("{t} steps is too short for a VAR({tau_max}) on {n} series")));
    }
    let mut z = x.clone();
    if standardize {
        for c in 0..n {
            let (m, sd) = column_stats(x, c)?;
            z.map_column(c, |v| (v - m) / sd);
        }
    }
    let rows = t - tau_max;
    let p = n * tau_max + 1;
    let design = Matrix::from_fn(rows, p, |r, c| {
        if c == p - 1 {
            return 1.0;
        }
        let (lag, k) = (c / n + 1, c % n);
        z.get(r + tau_max - lag, k)
    });
    let response = Matrix::from_fn(rows, n, |r, i| z.get(r + tau_max, i));
    let b = ridge_regression(&design, &response, ridge)?;
    Ok((1..=tau_max).map(|lag| Matrix::from_fn(n, n, |i, k| b.get((lag - 1) * n + k, i))).collect())
}

/// `score(k, i) = max_tau |A_tau[i][k]|` of a ridge VAR on standardized columns.
pub fn var_granger(x: &Matrix, cfg: &BaselineConfig) -> Result<ScoredGraph> {
    let coeffs = fit_var(x, cfg.tau_max, cfg.ridge, true)?;
    Ok(ScoredGraph::from_fn(x.cols(), |k, i| coeffs.iter().map(|a| a.get(i, k).abs()).fold(0.0, f64::max)))
}

/// I.i.d. uniform scores.
pub fn random_scorer(n: usize, rng: &mut SeededRng) -> Result<ScoredGraph> {
    if n < 2 {
        return Err(Error::InvalidConfig(alloc::format!("random scorer needs at least 2 nodes, got {n}")));
    }
    Ok(ScoredGraph::from_fn(n, |_, _| rng.uniform()))
}
