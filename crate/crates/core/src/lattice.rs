use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Rectangular lattice with uniform spacing per dimension, row-major
/// indexing with the last dimension varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    counts: Vec<usize>,
}

/// Interpolation weights over lattice nodes.
pub type Stencil = Vec<(usize, f64)>;

const SNAP: f64 = 1e-9;

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() || lo.len() != counts.len() {
            return Err(Error::Lattice("bounds and counts must have equal nonzero length".into()));
        }
        for d in 0..lo.len() {
            if counts[d] < 2 {
                return Err(Error::Lattice(format!("dimension {d} has {} nodes, need at least 2", counts[d])));
            }
            if !(lo[d].is_finite() && hi[d].is_finite() && hi[d] > lo[d]) {
                return Err(Error::Lattice(format!("dimension {d} bounds [{}, {}] invalid", lo[d], hi[d])));
            }
        }
        Ok(Self { lo, hi, counts })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64, count: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], vec![count; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, d: usize) -> f64 {
        (self.hi[d] - self.lo[d]) / (self.counts[d] - 1) as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|d| self.spacing(d)).fold(0.0, f64::max)
    }

    fn coord(&self, d: usize, i: usize) -> f64 {
        if i + 1 == self.counts[d] {
            self.hi[d]
        } else {
            self.lo[d] + i as f64 * self.spacing(d)
        }
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut m = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            m[d] = idx % self.counts[d];
            idx /= self.counts[d];
        }
        m
    }

    pub fn flat_index(&self, m: &[usize]) -> usize {
        m.iter().zip(&self.counts).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(d, &i)| self.coord(d, i))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().enumerate().all(|(d, &v)| {
                let tol = 1e-12 * (1.0 + self.hi[d].abs().max(self.lo[d].abs()));
                v >= self.lo[d] - tol && v <= self.hi[d] + tol
            })
    }

    /// Clamp into bounds; returns whether any component moved.
    pub fn clip(&self, x: &mut [f64]) -> bool {
        let mut clipped = false;
        for (d, v) in x.iter_mut().enumerate() {
            let c = v.clamp(self.lo[d], self.hi[d]);
            if c != *v {
                let tol = 1e-12 * (1.0 + self.hi[d].abs().max(self.lo[d].abs()));
                if (c - *v).abs() > tol {
                    clipped = true;
                }
                *v = c;
            }
        }
        clipped
    }

    fn position(&self, d: usize, v: f64) -> (usize, f64) {
        let n = self.counts[d] - 1;
        let s = ((v - self.lo[d]) / self.spacing(d)).clamp(0.0, n as f64);
        let r = s.round();
        if (s - r).abs() <= SNAP {
            let r = r as usize;
            return if r == n { (n - 1, 1.0) } else { (r, 0.0) };
        }
        let i = (s.floor() as usize).min(n - 1);
        (i, s - i as f64)
    }

    pub fn nearest(&self, x: &[f64]) -> usize {
        let m: Vec<usize> = (0..self.dim())
            .map(|d| {
                let (i, f) = self.position(d, x[d]);
                if f > 0.5 {
                    i + 1
                } else {
                    i
                }
            })
            .collect();
        self.flat_index(&m)
    }

    /// Multilinear stencil; coordinates within 1e-9 cells of a node snap to it.
    pub fn stencil(&self, x: &[f64]) -> Stencil {
        let mut out: Stencil = vec![(0, 1.0)];
        for d in 0..self.dim() {
            let (i, f) = self.position(d, x[d]);
            let stride: usize = self.counts[d + 1..].iter().product();
            let mut next = Vec::with_capacity(out.len() * 2);
            for &(idx, w) in &out {
                if f < 1.0 {
                    next.push((idx + i * stride, w * (1.0 - f)));
                }
                if f > 0.0 {
                    next.push((idx + (i + 1) * stride, w * f));
                }
            }
            out = next;
        }
        out
    }

    /// Indices of the 2^d cell corners surrounding `x`.
    pub fn cell_corners(&self, x: &[f64]) -> Vec<usize> {
        let mut out = vec![0usize];
        for d in 0..self.dim() {
            let (i, f) = self.position(d, x[d]);
            let stride: usize = self.counts[d + 1..].iter().product();
            let mut next = Vec::with_capacity(out.len() * 2);
            for &idx in &out {
                next.push(idx + i * stride);
                if f > 0.0 {
                    next.push(idx + (i + 1) * stride);
                }
            }
            out = next;
        }
        out
    }

    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> f64 {
        self.stencil(x).iter().map(|&(i, w)| w * values[i]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let g = Grid::new(vec![-1.0, 0.0, 2.0], vec![1.0, 3.0, 5.0], vec![3, 4, 5]).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
            assert_eq!(g.nearest(&g.coords(i)), i);
            let s = g.stencil(&g.coords(i));
            assert_eq!(s, vec![(i, 1.0)]);
        }
    }

    #[test]
    fn stencil_weights() {
        let g = Grid::uniform(2, 0.0, 1.0, 3).unwrap();
        let s = g.stencil(&[0.25, 0.75]);
        assert_eq!(s.len(), 4);
        assert!((s.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-15);
        let vals: Vec<f64> = (0..g.len()).map(|i| {
            let c = g.coords(i);
            2.0 * c[0] - c[1] + 0.5
        }).collect();
        assert!((g.interpolate(&vals, &[0.3, 0.9]) - (0.6 - 0.9 + 0.5)).abs() < 1e-14);
    }

    #[test]
    fn clip_flags() {
        let g = Grid::uniform(2, -1.0, 1.0, 11).unwrap();
        let mut x = [1.1, 0.0];
        assert!(g.clip(&mut x));
        assert_eq!(x, [1.0, 0.0]);
        let mut y = [0.5, -0.5];
        assert!(!g.clip(&mut y));
    }

    #[test]
    fn bad_lattice() {
        assert!(Grid::new(vec![0.0], vec![1.0], vec![1]).is_err());
        assert!(Grid::new(vec![1.0], vec![0.0], vec![3]).is_err());
    }
}
