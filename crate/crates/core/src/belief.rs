use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Probability vector over the informed player's types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    weights: Vec<f64>,
}

impl Belief {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::Belief("at least two types are required".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Belief(format!("entries must be finite and nonnegative: {weights:?}")));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::Belief(format!("entries sum to {s}, expected 1")));
        }
        Ok(Self { weights })
    }

    /// Two-type belief with `p` on the first type.
    pub fn binary(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Belief(format!("p = {p} outside [0, 1]")));
        }
        Ok(Self { weights: vec![p, 1.0 - p] })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// True when all mass sits on a single type (within `tol`).
    pub fn is_degenerate(&self, tol: f64) -> bool {
        self.weights.iter().any(|w| (w - 1.0).abs() <= tol)
    }
}

/// Floor negatives at zero and renormalize.
pub fn belief_project(weights: &[f64]) -> Result<Belief> {
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("belief_project"));
    }
    let floored: Vec<f64> = weights.iter().map(|w| w.max(0.0)).collect();
    let s: f64 = floored.iter().sum();
    if s < 1e-9 {
        return Err(Error::Belief(format!("weights sum to {s} before normalization")));
    }
    let mut w: Vec<f64> = floored.iter().map(|x| x / s).collect();
    // push rounding residue into the largest entry so the sum is exact to 1e-12
    let resid = 1.0 - w.iter().sum::<f64>();
    if let Some(imax) = (0..w.len()).max_by(|&a, &b| w[a].total_cmp(&w[b])) {
        w[imax] += resid;
    }
    Belief::new(w)
}

/// Uniform lattice on p[0] for two-type games.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeliefGrid {
    pub nodes: usize,
}

impl Default for BeliefGrid {
    fn default() -> Self {
        Self { nodes: 101 }
    }
}

impl BeliefGrid {
    pub fn new(nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::Lattice("belief lattice needs at least 2 nodes".into()));
        }
        Ok(Self { nodes })
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.nodes - 1) as f64
    }

    pub fn point(&self, b: usize) -> f64 {
        b as f64 / (self.nodes - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.nodes).map(|b| self.point(b)).collect()
    }

    /// Node index if `p` sits on a node (within 1e-12).
    pub fn node_of(&self, p: f64) -> Option<usize> {
        let s = p * (self.nodes - 1) as f64;
        let r = s.round();
        if (s - r).abs() <= 1e-9 && r >= 0.0 && r <= (self.nodes - 1) as f64 {
            Some(r as usize)
        } else {
            None
        }
    }

    /// Left bracket index and fraction for linear interpolation.
    pub fn bracket(&self, p: f64) -> (usize, f64) {
        let n = self.nodes - 1;
        let s = (p.clamp(0.0, 1.0)) * n as f64;
        let i = (s.floor() as usize).min(n - 1);
        (i, s - i as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn project_examples() {
        assert_eq!(belief_project(&[0.5, 0.5]).unwrap().weights(), &[0.5, 0.5]);
        let b = belief_project(&[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        assert!((b.get(0) - 1.0 / 3.0).abs() < 1e-15);
        let b = belief_project(&[-1e-15, 1.0]).unwrap();
        assert_eq!(b.weights(), &[0.0, 1.0]);
        assert!(belief_project(&[0.0, 0.0]).is_err());
        assert!(belief_project(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn grid_nodes() {
        let g = BeliefGrid::default();
        assert_eq!(g.nodes, 101);
        assert_eq!(g.node_of(0.37), Some(37));
        assert_eq!(g.node_of(1.0 / 3.0), None);
        let g = BeliefGrid::new(61).unwrap();
        assert_eq!(g.node_of(1.0 / 3.0), Some(20));
        assert_eq!(g.node_of(0.75), Some(45));
    }
}
