//! Dense row-major float64 containers.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `rows × cols` matrix, row-major. Used for time × node panels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(alloc::format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = f64> + Clone + '_ {
        (0..self.rows).map(move |r| self.get(r, c))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn map_column(&mut self, c: usize, mut f: impl FnMut(f64) -> f64) {
        for r in 0..self.rows {
            let v = self.get(r, c);
            self.set(r, c, f(v));
        }
    }
}

/// `time × node × dim` series for a single trajectory, last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    shape: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(time: usize, nodes: usize, dim: usize) -> Self {
        Self { shape: [time, nodes, dim], data: vec![0.0; time * nodes * dim] }
    }

    pub fn from_vec(shape: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.iter().product::<usize>() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "{} values for shape {shape:?}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn time_len(&self) -> usize {
        self.shape[0]
    }

    pub fn nodes(&self) -> usize {
        self.shape[1]
    }

    pub fn dim(&self) -> usize {
        self.shape[2]
    }

    #[inline]
    fn offset(&self, t: usize, node: usize, d: usize) -> usize {
        (t * self.shape[1] + node) * self.shape[2] + d
    }

    #[inline]
    pub fn get(&self, t: usize, node: usize, d: usize) -> f64 {
        self.data[self.offset(t, node, d)]
    }

    #[inline]
    pub fn set(&mut self, t: usize, node: usize, d: usize, v: f64) {
        let o = self.offset(t, node, d);
        self.data[o] = v;
    }

    /// The `dim`-vector of `node` at time `t`.
    #[inline]
    pub fn at(&self, t: usize, node: usize) -> &[f64] {
        let o = self.offset(t, node, 0);
        &self.data[o..o + self.shape[2]]
    }

    #[inline]
    pub fn at_mut(&mut self, t: usize, node: usize) -> &mut [f64] {
        let o = self.offset(t, node, 0);
        let d = self.shape[2];
        &mut self.data[o..o + d]
    }

    /// Time series of one `(node, dim)` channel.
    pub fn channel(&self, node: usize, d: usize) -> impl Iterator<Item = f64> + Clone + '_ {
        (0..self.shape[0]).map(move |t| self.get(t, node, d))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Rows `start..end` along the time axis.
    pub fn time_slice(&self, start: usize, end: usize) -> Tensor3 {
        let stride = self.shape[1] * self.shape[2];
        Tensor3 {
            shape: [end - start, self.shape[1], self.shape[2]],
            data: self.data[start * stride..end * stride].to_vec(),
        }
    }

    /// Concatenate along the node axis; both tensors must share time and dim.
    pub fn concat_nodes(&self, other: &Tensor3) -> Result<Tensor3> {
        if self.shape[0] != other.shape[0] || self.shape[2] != other.shape[2] {
            return Err(Error::ShapeMismatch(alloc::format!(
                "cannot concat {:?} with {:?} along nodes",
                self.shape,
                other.shape
            )));
        }
        let [t, n1, d] = self.shape;
        let n2 = other.shape[1];
        let mut out = Tensor3::zeros(t, n1 + n2, d);
        for ti in 0..t {
            for n in 0..n1 {
                out.at_mut(ti, n).copy_from_slice(self.at(ti, n));
            }
            for n in 0..n2 {
                out.at_mut(ti, n1 + n).copy_from_slice(other.at(ti, n));
            }
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `trajectory × time × node × dim`, last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTensor {
    shape: [usize; 4],
    data: Vec<f64>,
}

impl TrajectoryTensor {
    pub fn zeros(shape: [usize; 4]) -> Self {
        Self { shape, data: vec![0.0; shape.iter().product()] }
    }

    pub fn from_vec(shape: [usize; 4], data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.iter().product::<usize>() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "{} values for shape {shape:?}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    /// Stack equally shaped trajectories.
    pub fn stack(trajectories: &[Tensor3]) -> Result<Self> {
        let inner = match trajectories.first() {
            Some(t) => t.shape(),
            None => return Ok(Self::zeros([0, 0, 0, 0])),
        };
        let mut data = Vec::with_capacity(trajectories.len() * inner.iter().product::<usize>());
        for t in trajectories {
            if t.shape() != inner {
                return Err(Error::ShapeMismatch(alloc::format!(
                    "trajectory shape {:?} differs from {inner:?}",
                    t.shape()
                )));
            }
            data.extend_from_slice(t.as_slice());
        }
        Ok(Self { shape: [trajectories.len(), inner[0], inner[1], inner[2]], data })
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, k: usize, t: usize, node: usize, d: usize) -> f64 {
        let [_, tn, nn, dn] = self.shape;
        self.data[((k * tn + t) * nn + node) * dn + d]
    }

    /// Copy out trajectory `k`.
    pub fn trajectory(&self, k: usize) -> Tensor3 {
        let [_, t, n, d] = self.shape;
        let stride = t * n * d;
        Tensor3 { shape: [t, n, d], data: self.data[k * stride..(k + 1) * stride].to_vec() }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
