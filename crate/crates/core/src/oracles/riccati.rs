use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Samples of K(t), Phi(t) and d(t) on an increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub times: Vec<f64>,
    pub k: Vec<DMatrix<f64>>,
    pub phi: Vec<DMatrix<f64>>,
    pub d: Vec<f64>,
}

impl RiccatiSolution {
    /// Linear interpolation of d at t.
    pub fn d_at(&self, t: f64) -> f64 {
        interp(&self.times, &self.d, t)
    }
}

pub fn interp(ts: &[f64], ys: &[f64], t: f64) -> f64 {
    let n = ts.len();
    if t <= ts[0] {
        return ys[0];
    }
    if t >= ts[n - 1] {
        return ys[n - 1];
    }
    let j = ts.partition_point(|&s| s <= t).clamp(1, n - 1);
    let f = (t - ts[j - 1]) / (ts[j] - ts[j - 1]);
    (1.0 - f) * ys[j - 1] + f * ys[j]
}

/// Backward RK4 for K' = -A^T K - K A + K^T B R^-1 B^T K with K(T) given,
/// and Phi' = A Phi with Phi(T) = I; d = z^T Phi^T K B R^-1 B^T K^T Phi z.
pub fn riccati_integrate(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    r: &DMatrix<f64>,
    k_terminal: &DMatrix<f64>,
    z: &[f64],
    times: &[f64],
) -> Result<RiccatiSolution> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || r.nrows() != b.ncols() || r.ncols() != b.ncols() {
        return Err(Error::Oracle("Riccati matrices have inconsistent shapes".into()));
    }
    if k_terminal.nrows() != n || k_terminal.ncols() != n || z.len() != n {
        return Err(Error::Oracle("terminal weight or target has the wrong size".into()));
    }
    if times.len() < 2 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Oracle("time grid must be strictly increasing".into()));
    }
    let rinv = r
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Oracle("R is not positive definite".into()))?
        .inverse();
    let s = b * &rinv * b.transpose();
    // derivatives in reversed time sigma = T - t
    let fk = |k: &DMatrix<f64>| a.transpose() * k + k * a - k.transpose() * &s * k;
    let fphi = |p: &DMatrix<f64>| -(a * p);
    let m = times.len();
    let mut ks = vec![DMatrix::zeros(n, n); m];
    let mut phis = vec![DMatrix::zeros(n, n); m];
    ks[m - 1] = k_terminal.clone();
    phis[m - 1] = DMatrix::identity(n, n);
    for j in (0..m - 1).rev() {
        let h = times[j + 1] - times[j];
        let k0 = &ks[j + 1];
        let k1 = fk(k0);
        let k2 = fk(&(k0 + &k1 * (h / 2.0)));
        let k3 = fk(&(k0 + &k2 * (h / 2.0)));
        let k4 = fk(&(k0 + &k3 * h));
        ks[j] = k0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let p0 = &phis[j + 1];
        let q1 = fphi(p0);
        let q2 = fphi(&(p0 + &q1 * (h / 2.0)));
        let q3 = fphi(&(p0 + &q2 * (h / 2.0)));
        let q4 = fphi(&(p0 + &q3 * h));
        phis[j] = p0 + (q1 + q2 * 2.0 + q3 * 2.0 + q4) * (h / 6.0);
    }
    let zv = nalgebra::DVector::from_column_slice(z);
    let d = (0..m)
        .map(|j| {
            let w = &phis[j] * &zv;
            let mid = &ks[j] * &s * ks[j].transpose();
            (w.transpose() * mid * &w)[(0, 0)]
        })
        .collect::<Vec<f64>>();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Riccati solution"));
    }
    Ok(RiccatiSolution { times: times.to_vec(), k: ks, phi: phis, d })
}

/// argmin over the grid of the trapezoidal integral of d1 - d2 from 0;
/// ties go to the earliest time.
pub fn critical_time(d1: &[f64], d2: &[f64], times: &[f64]) -> f64 {
    let mut acc = 0.0;
    let (mut best, mut tbest) = (0.0, times[0]);
    for j in 1..times.len() {
        let h = times[j] - times[j - 1];
        acc += 0.5 * h * ((d1[j - 1] - d2[j - 1]) + (d1[j] - d2[j]));
        if acc < best {
            best = acc;
            tbest = times[j];
        }
    }
    tbest
}

/// Diagonal matrix from its entries.
pub fn diag(d: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d))
}

/// Parameters of the two-player football game: per-player state
/// (x, vx, y, vy), acceleration control, and a terminal weight on the
/// y-position toward targets on the y-axis.
pub mod football {
    use super::*;

    /// Terminal weight on the y-position. Chosen so the critical time of the
    /// reference control weights falls just below 0.4 s.
    pub const TERMINAL_WEIGHT: f64 = 0.6935;
    pub const R_ATTACKER: [f64; 2] = [0.05, 0.025];
    pub const R_DEFENDER: [f64; 2] = [0.05, 0.1];
    pub const HORIZON: f64 = 1.0;

    pub fn a() -> DMatrix<f64> {
        let mut a = DMatrix::zeros(4, 4);
        a[(0, 1)] = 1.0;
        a[(2, 3)] = 1.0;
        a
    }

    pub fn b() -> DMatrix<f64> {
        let mut b = DMatrix::zeros(4, 2);
        b[(1, 0)] = 1.0;
        b[(3, 1)] = 1.0;
        b
    }

    pub fn k_terminal(w: f64) -> DMatrix<f64> {
        let mut k = DMatrix::zeros(4, 4);
        k[(2, 2)] = w;
        k
    }

    pub fn z() -> [f64; 4] {
        [0.0, 0.0, 1.0, 0.0]
    }

    pub fn grid(step: f64) -> Vec<f64> {
        let m = (HORIZON / step).round() as usize;
        (0..=m).map(|j| if j == m { HORIZON } else { j as f64 * step }).collect()
    }

    /// (d1, d2) on a grid with the given step.
    pub fn solve(w: f64, step: f64) -> Result<(RiccatiSolution, RiccatiSolution)> {
        let times = grid(step);
        let (r1, r2) = (diag(&R_ATTACKER), diag(&R_DEFENDER));
        let s1 = riccati_integrate(&a(), &b(), &r1, &k_terminal(w), &z(), &times)?;
        let s2 = riccati_integrate(&a(), &b(), &r2, &k_terminal(w), &z(), &times)?;
        Ok((s1, s2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_closed_form() {
        let one = DMatrix::identity(1, 1);
        let zero = DMatrix::zeros(1, 1);
        let times: Vec<f64> = (0..=100).map(|j| j as f64 / 100.0).collect();
        let s = riccati_integrate(&zero, &one, &one, &one, &[1.0], &times).unwrap();
        assert!((s.k[0][(0, 0)] - 0.5).abs() < 1e-10);
        for p in &s.phi {
            assert!((p - DMatrix::<f64>::identity(1, 1)).norm() < 1e-14);
        }
    }

    #[test]
    fn non_pd_weight_rejected() {
        let one = DMatrix::identity(1, 1);
        let neg = -DMatrix::<f64>::identity(1, 1);
        assert!(riccati_integrate(&one, &one, &neg, &one, &[1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn critical_time_edge_cases() {
        let t: Vec<f64> = (0..=10).map(|j| j as f64 / 10.0).collect();
        let z = vec![0.0; 11];
        assert_eq!(critical_time(&z, &z, &t), 0.0);
        let m1 = vec![-1.0; 11];
        assert_eq!(critical_time(&m1, &z, &t), 1.0);
    }

    #[test]
    fn rk4_order() {
        let (a, _) = football::solve(football::TERMINAL_WEIGHT, 0.02).unwrap();
        let (b, _) = football::solve(football::TERMINAL_WEIGHT, 0.01).unwrap();
        let (c, _) = football::solve(football::TERMINAL_WEIGHT, 0.005).unwrap();
        let e1 = (a.d[0] - b.d[0]).abs();
        let e2 = (b.d[0] - c.d[0]).abs();
        assert!(e2 < e1 || e1 < 1e-13);
        if e2 > 1e-14 {
            assert!((e1 / e2).log2() >= 3.5, "observed order {}", (e1 / e2).log2());
        }
        assert!(a.d.iter().all(|d| *d >= -1e-12));
    }
}
