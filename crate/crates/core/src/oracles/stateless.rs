use crate::error::{Error, Result};
use std::sync::Arc;

pub type Weight = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Closed-form value of the stateless game with types theta = (-1, 1):
/// V(t, p) = 4 p (1 - p) Dt(t), where Dt(t) = min(0, min_{s >= t} int_t^s (d1 - d2)).
#[derive(Clone)]
pub struct StatelessGame {
    d1: Weight,
    d2: Weight,
    horizon: f64,
    /// Sign changes of d1 - d2, including 0 and the horizon.
    pub roots: Vec<f64>,
    /// int over [T_k, T_{k+1}] of d1 - d2.
    pub pieces: Vec<f64>,
    /// Dt at each root.
    pub dtilde: Vec<f64>,
    /// Sign of d1 - d2 on each piece (true = negative).
    pub negative: Vec<bool>,
}

/// How Player 1 plays at (t, p).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StatelessPlay {
    /// Both types play the same action; no information is released.
    Pool(f64),
    /// Each type plays its own target.
    Reveal,
}

impl std::fmt::Debug for StatelessGame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StatelessGame")
            .field("horizon", &self.horizon)
            .field("roots", &self.roots)
            .field("pieces", &self.pieces)
            .field("dtilde", &self.dtilde)
            .finish()
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for j in 1..n {
        s += f(a + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

impl StatelessGame {
    /// Locates sign changes of d1 - d2 by scanning `scan` points and bisecting.
    pub fn new(d1: Weight, d2: Weight, horizon: f64, scan: usize) -> Result<Self> {
        if !(horizon > 0.0) || scan < 2 {
            return Err(Error::Oracle("horizon must be positive and the scan at least 2 points".into()));
        }
        let delta = {
            let (d1, d2) = (d1.clone(), d2.clone());
            move |t: f64| d1(t) - d2(t)
        };
        let ts: Vec<f64> = (0..=scan).map(|j| horizon * j as f64 / scan as f64).collect();
        let vals: Vec<f64> = ts.iter().map(|&t| delta(t)).collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("d1 - d2"));
        }
        let neg = |v: f64| v < 0.0;
        let mut roots = vec![0.0];
        let mut negative = vec![neg(vals[0])];
        for j in 1..ts.len() {
            if neg(vals[j]) != neg(vals[j - 1]) {
                let (mut a, mut b) = (ts[j - 1], ts[j]);
                let left = neg(vals[j - 1]);
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    if neg(delta(m)) == left {
                        a = m;
                    } else {
                        b = m;
                    }
                    if b - a < 1e-14 * horizon {
                        break;
                    }
                }
                roots.push(0.5 * (a + b));
                negative.push(neg(vals[j]));
            }
        }
        roots.push(horizon);
        let n = roots.len() - 1;
        let pieces: Vec<f64> = (0..n).map(|k| simpson(&delta, roots[k], roots[k + 1], 400)).collect();
        for (k, &d) in pieces.iter().enumerate() {
            if negative[k] == (d > 0.0) && d.abs() > 1e-12 {
                return Err(Error::Oracle(format!("d1 - d2 changes sign inside piece {k}")));
            }
        }
        let mut dtilde = vec![0.0; n + 1];
        for k in (0..n).rev() {
            dtilde[k] = (pieces[k] + dtilde[k + 1]).min(0.0);
        }
        Ok(Self { d1, d2, horizon, roots, pieces, dtilde, negative })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn delta(&self, t: f64) -> f64 {
        (self.d1)(t) - (self.d2)(t)
    }

    /// Pieces alternate in sign, starting with a negative one unless d1 - d2
    /// is nonnegative at t = 0.
    pub fn sign_pattern_ok(&self) -> bool {
        self.negative.windows(2).all(|w| w[0] != w[1])
    }

    pub fn dtilde_at(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.horizon);
        let k = self.roots.partition_point(|&r| r <= t).saturating_sub(1).min(self.pieces.len() - 1);
        let end = self.roots[k + 1];
        let delta = |s: f64| self.delta(s);
        (simpson(&delta, t, end, 400) + self.dtilde[k + 1]).min(0.0)
    }

    /// Last time at which Dt is negative; 0 if it never is.
    pub fn split_time(&self) -> f64 {
        let n = self.pieces.len();
        let Some(k) = (0..n).rev().find(|&k| self.dtilde[k] < 0.0) else {
            return 0.0;
        };
        let (mut a, mut b) = (self.roots[k], self.roots[k + 1]);
        if self.dtilde_at(b) < 0.0 {
            return b;
        }
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if self.dtilde_at(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// V(t, p) with p the probability of type 0.
    pub fn value(&self, t: f64, p: f64) -> f64 {
        4.0 * p * (1.0 - p) * self.dtilde_at(t)
    }

    /// Conjugate V*(t, (h1, h2)).
    pub fn conjugate(&self, t: f64, h: [f64; 2]) -> f64 {
        let d = self.dtilde_at(t);
        if d >= 0.0 {
            return h[0].max(h[1]);
        }
        let a = h[0] - h[1];
        if a > -4.0 * d {
            h[0]
        } else if a < 4.0 * d {
            h[1]
        } else {
            h[1] - d * (1.0 - a / (4.0 * d)).powi(2)
        }
    }

    /// Dual vector of V(t, .) at p.
    pub fn init_dual(&self, t: f64, p: f64) -> [f64; 2] {
        let d = self.dtilde_at(t);
        [4.0 * d * (1.0 - p) * (1.0 - p), 4.0 * d * p * p]
    }

    pub fn strategy(&self, t: f64, p: f64) -> StatelessPlay {
        if self.dtilde_at(t) < 0.0 {
            StatelessPlay::Pool(1.0 - 2.0 * p)
        } else {
            StatelessPlay::Reveal
        }
    }

    /// Discrete analogue with left-endpoint running costs:
    /// c_k = min(0, tau * (d1 - d2)(t_k) + c_{k+1}), c_L = 0.
    pub fn discrete_dtilde(&self, steps: usize) -> Vec<f64> {
        let tau = self.horizon / steps as f64;
        let mut c = vec![0.0; steps + 1];
        for k in (0..steps).rev() {
            c[k] = (tau * self.delta(k as f64 * tau) + c[k + 1]).min(0.0);
        }
        c
    }

    /// First step whose discrete Dt vanishes for good.
    pub fn split_step(&self, steps: usize) -> usize {
        let tr = self.split_time();
        let tau = self.horizon / steps as f64;
        ((tr / tau) - 1e-9).ceil().max(0.0) as usize
    }
}
