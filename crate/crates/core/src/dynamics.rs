use crate::error::{Error, Result};
use crate::lattice::Grid;
use serde::{Deserialize, Serialize};

/// Joint dynamics f(x, u, v). The state is Player 1's block followed by
/// Player 2's block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Dynamics {
    /// x1' = u, x2' = v.
    SingleIntegrator,
    /// Per axis (position, velocity) pairs, acceleration control.
    /// Player 1 owns the first `2 * dim(u)` entries.
    DoubleIntegrator,
    /// x' = A x + Bu u + Bv v.
    Affine {
        a: Vec<Vec<f64>>,
        bu: Vec<Vec<f64>>,
        bv: Vec<Vec<f64>>,
    },
}

impl Dynamics {
    pub fn state_dim(&self, du: usize, dv: usize) -> usize {
        match self {
            Dynamics::SingleIntegrator => du + dv,
            Dynamics::DoubleIntegrator => 2 * (du + dv),
            Dynamics::Affine { a, .. } => a.len(),
        }
    }

    /// Lipschitz constant of f in x (infinity norm).
    pub fn lipschitz(&self) -> f64 {
        match self {
            Dynamics::SingleIntegrator => 0.0,
            Dynamics::DoubleIntegrator => 1.0,
            Dynamics::Affine { a, .. } => a
                .iter()
                .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    pub fn check(&self, dx: usize, du: usize, dv: usize) -> Result<()> {
        if let Dynamics::Affine { a, bu, bv } = self {
            let ok = a.len() == dx
                && a.iter().all(|r| r.len() == dx)
                && bu.len() == dx
                && bu.iter().all(|r| r.len() == du)
                && bv.len() == dx
                && bv.iter().all(|r| r.len() == dv);
            if !ok {
                return Err(Error::Spec("affine dynamics matrices have inconsistent shapes".into()));
            }
        } else if self.state_dim(du, dv) != dx {
            return Err(Error::Spec(format!(
                "state dimension {dx} does not match dynamics with action dims ({du}, {dv})"
            )));
        }
        Ok(())
    }

    pub fn rate(&self, x: &[f64], u: &[f64], v: &[f64]) -> Vec<f64> {
        match self {
            Dynamics::SingleIntegrator => u.iter().chain(v.iter()).copied().collect(),
            Dynamics::DoubleIntegrator => {
                let mut out = vec![0.0; x.len()];
                let mut axis = 0;
                for &a in u.iter().chain(v.iter()) {
                    out[2 * axis] = x[2 * axis + 1];
                    out[2 * axis + 1] = a;
                    axis += 1;
                }
                out
            }
            Dynamics::Affine { a, bu, bv } => (0..x.len())
                .map(|i| {
                    let ax: f64 = a[i].iter().zip(x).map(|(p, q)| p * q).sum();
                    let bu_u: f64 = bu[i].iter().zip(u).map(|(p, q)| p * q).sum();
                    let bv_v: f64 = bv[i].iter().zip(v).map(|(p, q)| p * q).sum();
                    ax + bu_u + bv_v
                })
                .collect(),
        }
    }
}

/// Explicit Euler step, clipped to `bounds` when given. Returns the new
/// state and whether clipping occurred.
pub fn dynamics_step(
    dynamics: &Dynamics,
    x: &[f64],
    u: &[f64],
    v: &[f64],
    tau: f64,
    bounds: Option<&Grid>,
) -> Result<(Vec<f64>, bool)> {
    if x.iter().chain(u).chain(v).any(|z| !z.is_finite()) || !tau.is_finite() {
        return Err(Error::NonFinite("dynamics_step"));
    }
    if tau <= 0.0 {
        return Err(Error::Spec(format!("step must be positive, got {tau}")));
    }
    let f = dynamics.rate(x, u, v);
    let mut next: Vec<f64> = x.iter().zip(&f).map(|(a, b)| a + tau * b).collect();
    let clipped = match bounds {
        Some(g) => g.clip(&mut next),
        None => false,
    };
    Ok((next, clipped))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_integrator_step() {
        let (x, c) = dynamics_step(&Dynamics::SingleIntegrator, &[0.0, 0.0], &[1.0], &[0.0], 0.1, None).unwrap();
        assert!((x[0] - 0.1).abs() < 1e-15);
        assert!(!c);
    }

    #[test]
    fn double_integrator_step() {
        // (pos, vel) = (0, 1) for each player, zero acceleration
        let (x, _) =
            dynamics_step(&Dynamics::DoubleIntegrator, &[0.0, 1.0, 0.0, 1.0], &[0.0], &[0.0], 0.1, None).unwrap();
        assert!((x[0] - 0.1).abs() < 1e-15);
        assert_eq!(x[1], 1.0);
    }

    #[test]
    fn boundary_clamp() {
        let g = Grid::uniform(2, -1.0, 1.0, 11).unwrap();
        let (x, c) =
            dynamics_step(&Dynamics::SingleIntegrator, &[0.9, 0.0], &[1.0], &[0.0], 0.2, Some(&g)).unwrap();
        assert_eq!(x, vec![1.0, 0.0]);
        assert!(c);
    }

    #[test]
    fn rejects_nan() {
        assert!(dynamics_step(&Dynamics::SingleIntegrator, &[f64::NAN, 0.0], &[0.0], &[0.0], 0.1, None).is_err());
    }

    #[test]
    fn affine_matches_double_integrator() {
        let a = vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 0.0, 0.0],
        ];
        let bu = vec![vec![0.0], vec![1.0], vec![0.0], vec![0.0]];
        let bv = vec![vec![0.0], vec![0.0], vec![0.0], vec![1.0]];
        let aff = Dynamics::Affine { a, bu, bv };
        let x = [0.3, -0.2, 0.1, 0.5];
        let r1 = aff.rate(&x, &[0.7], &[-0.4]);
        let r2 = Dynamics::DoubleIntegrator.rate(&x, &[0.7], &[-0.4]);
        assert_eq!(r1, r2);
        assert_eq!(aff.lipschitz(), 1.0);
    }
}
