//! Ranking metrics for predicted adjacency scores.

use alloc::vec::Vec;
use core::cmp::Ordering;
use serde::{Deserialize, Serialize};

use crate::graph::{AdjMatrix, CausalGraph};
use crate::math::{mean_var, sqrt};
use crate::{Error, Result};

/// Edge confidence per ordered pair, `scores[k][i]` for `k -> i`. Binary predictions
/// are scores in `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScoreRows", into = "ScoreRows")]
pub struct ScoredGraph {
    n: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ScoreRows {
    scores: Vec<Vec<f64>>,
}

impl TryFrom<ScoreRows> for ScoredGraph {
    type Error = Error;

    fn try_from(rows: ScoreRows) -> Result<Self> {
        ScoredGraph::from_rows(&rows.scores)
    }
}

impl From<ScoredGraph> for ScoreRows {
    fn from(g: ScoredGraph) -> Self {
        ScoreRows { scores: g.to_rows() }
    }
}

impl ScoredGraph {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for k in 0..n {
            for i in 0..n {
                data.push(f(k, i));
            }
        }
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch("score matrix is not square".into()));
        }
        let g = Self { n, data: rows.concat() };
        if g.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite edge score".into()));
        }
        Ok(g)
    }

    /// The truth itself as 0/1 scores.
    pub fn from_adj(adj: &AdjMatrix) -> Self {
        Self::from_fn(adj.n(), |k, i| if adj.get(k, i) { 1.0 } else { 0.0 })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).take(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.data[k * self.n + i]
    }

    pub fn set(&mut self, k: usize, i: usize, v: f64) {
        self.data[k * self.n + i] = v;
    }

    /// Keep the rows and columns where `keep` is true.
    pub fn induced(&self, keep: &[bool]) -> Self {
        let idx: Vec<usize> = (0..self.n).filter(|&i| keep[i]).collect();
        Self::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }
}

/// Scored pairs plus truth labels over the chosen pair universe.
pub fn pair_labels(pred: &ScoredGraph, truth: &AdjMatrix, include_diagonal: bool) -> Result<(Vec<f64>, Vec<bool>)> {
    if pred.n() != truth.n() {
        return Err(Error::ShapeMismatch(alloc::format!("prediction has {} nodes, truth {}", pred.n(), truth.n())));
    }
    let n = truth.n();
    let mut scores = Vec::with_capacity(n * n);
    let mut labels = Vec::with_capacity(n * n);
    for k in 0..n {
        for i in 0..n {
            if k == i && !include_diagonal {
                continue;
            }
            let s = pred.get(k, i);
            if !s.is_finite() {
                return Err(Error::InvalidConfig("non-finite edge score".into()));
            }
            scores.push(s);
            labels.push(truth.get(k, i));
        }
    }
    Ok((scores, labels))
}

fn count_classes(labels: &[bool]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&l| l).count();
    (pos, labels.len() - pos)
}

fn descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    idx
}

/// Spans `[start, end)` of equal scores in `order`.
fn tie_groups<'a>(scores: &'a [f64], order: &'a [usize]) -> impl Iterator<Item = (usize, usize)> + 'a {
    let mut start = 0;
    core::iter::from_fn(move || {
        if start >= order.len() {
            return None;
        }
        let s = scores[order[start]];
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == s {
            end += 1;
        }
        let span = (start, end);
        start = end;
        Some(span)
    })
}

/// Mann-Whitney estimate with midranks for ties.
pub fn auroc_scores(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = count_classes(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateTruth);
    }
    let order = descending(scores);
    // Rank 1 is the lowest score; descending order means rank = len - position.
    let len = order.len();
    let mut rank_sum = 0.0;
    for (start, end) in tie_groups(scores, &order) {
        let mid = (len - start + len - end + 1) as f64 / 2.0;
        let p = order[start..end].iter().filter(|&&j| labels[j]).count();
        rank_sum += mid * p as f64;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

/// Trapezoidal area under the ROC curve traced by sweeping a threshold down through
/// the distinct scores.
pub fn auroc_sweep(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = count_classes(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateTruth);
    }
    let order = descending(scores);
    let mut tp = 0usize;
    let mut area = 0.0;
    for (start, end) in tie_groups(scores, &order) {
        let dp = order[start..end].iter().filter(|&&j| labels[j]).count();
        let dn = (end - start) - dp;
        let tpr0 = tp as f64 / pos as f64;
        tp += dp;
        let tpr1 = tp as f64 / pos as f64;
        area += (dn as f64 / neg as f64) * (tpr0 + tpr1) / 2.0;
    }
    Ok(area)
}

/// Average precision: precision at each distinct threshold weighted by the recall
/// gained there.
pub fn auprc_scores(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = count_classes(labels);
    if pos == 0 {
        return Err(Error::DegenerateTruth);
    }
    let order = descending(scores);
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut ap = 0.0;
    for (start, end) in tie_groups(scores, &order) {
        let dp = order[start..end].iter().filter(|&&j| labels[j]).count();
        tp += dp;
        seen += end - start;
        ap += (dp as f64 / pos as f64) * (tp as f64 / seen as f64);
    }
    Ok(ap)
}

pub fn auroc(pred: &ScoredGraph, truth: &AdjMatrix, include_diagonal: bool) -> Result<f64> {
    let (s, l) = pair_labels(pred, truth, include_diagonal)?;
    auroc_scores(&s, &l)
}

pub fn auprc(pred: &ScoredGraph, truth: &AdjMatrix, include_diagonal: bool) -> Result<f64> {
    let (s, l) = pair_labels(pred, truth, include_diagonal)?;
    auprc_scores(&s, &l)
}

/// How hidden nodes are removed from a ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenTruth {
    /// Edges among observed nodes only.
    #[default]
    Induced,
    /// Also connect observed nodes linked through hidden intermediaries.
    LatentProjection,
}

/// Summary truth restricted to observed nodes.
pub fn observed_truth(graph: &CausalGraph, mode: HiddenTruth) -> AdjMatrix {
    let summary = graph.summary_adj();
    let keep = graph.observed_mask();
    match mode {
        HiddenTruth::Induced => summary.induced(&keep),
        HiddenTruth::LatentProjection => summary.latent_projection(&keep),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairUniverse {
    WithDiagonal,
    OffDiagonal,
}

impl PairUniverse {
    pub fn from_flag(include_diagonal: bool) -> Self {
        if include_diagonal { Self::WithDiagonal } else { Self::OffDiagonal }
    }

    pub fn includes_diagonal(self) -> bool {
        self == Self::WithDiagonal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auroc_mean: f64,
    pub auroc_std: f64,
    pub auprc_mean: f64,
    pub auprc_std: f64,
    /// Trajectories that were scored.
    pub n_trajectories: usize,
    pub n_degenerate: usize,
    pub pair_universe: PairUniverse,
    pub auroc: Vec<f64>,
    pub auprc: Vec<f64>,
}

/// Score every prediction against one truth; degenerate cases are counted and skipped.
/// The spread is the population standard deviation.
pub fn score_prediction(preds: &[ScoredGraph], truth: &AdjMatrix, include_diagonal: bool) -> Result<EvalReport> {
    if preds.is_empty() {
        return Err(Error::InvalidConfig("no predictions to score".into()));
    }
    let mut roc = Vec::with_capacity(preds.len());
    let mut pr = Vec::with_capacity(preds.len());
    let mut degenerate = 0;
    for p in preds {
        let (s, l) = pair_labels(p, truth, include_diagonal)?;
        match (auroc_scores(&s, &l), auprc_scores(&s, &l)) {
            (Ok(a), Ok(b)) => {
                roc.push(a);
                pr.push(b);
            }
            (Err(Error::DegenerateTruth), _) | (_, Err(Error::DegenerateTruth)) => degenerate += 1,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    if roc.is_empty() {
        return Err(Error::AllDegenerate);
    }
    let (am, av) = mean_var(roc.iter().copied());
    let (pm, pv) = mean_var(pr.iter().copied());
    Ok(EvalReport {
        auroc_mean: am,
        auroc_std: sqrt(av),
        auprc_mean: pm,
        auprc_std: sqrt(pv),
        n_trajectories: roc.len(),
        n_degenerate: degenerate,
        pair_universe: PairUniverse::from_flag(include_diagonal),
        auroc: roc,
        auprc: pr,
    })
}

/// Mean of several reports' means, weighted equally per report.
pub fn aggregate_means(reports: &[EvalReport]) -> Option<(f64, f64)> {
    if reports.is_empty() {
        return None;
    }
    let n = reports.len() as f64;
    let roc = reports.iter().map(|r| r.auroc_mean).sum::<f64>() / n;
    let pr = reports.iter().map(|r| r.auprc_mean).sum::<f64>() / n;
    Some((roc, pr))
}
