use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if steps < 1 {
            return Err(Error::Spec("time grid needs at least one step".into()));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Spec(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// t_k = k tau, with t_L pinned to the horizon.
    pub fn t(&self, k: usize) -> f64 {
        if k >= self.steps {
            self.horizon
        } else {
            k as f64 * self.tau()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.t(k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        assert!((g.tau() - 0.1).abs() < 1e-15);
        assert_eq!(g.t(0), 0.0);
        assert_eq!(g.t(10), 1.0);
        assert!((g.tau() * 10.0 - 1.0).abs() < 1e-12);
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(TimeGrid::new(-1.0, 3).is_err());
    }
}
