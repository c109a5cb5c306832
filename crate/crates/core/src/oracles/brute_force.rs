use crate::belief::{Belief, BeliefGrid};
use crate::error::{Error, Result};
use crate::game::GameSpec;
use std::collections::HashMap;

/// Exact backward induction on the reachable state tree from one root,
/// with the belief convexification done on a finer lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub belief: BeliefGrid,
    pub root: Vec<f64>,
    /// Largest belief-slope of any finite stage function in the tree.
    pub lipschitz_p: f64,
    /// Largest distance from a tree state to its nearest state node.
    pub off_lattice: f64,
    pub tree_states: usize,
}

impl BruteForce {
    pub fn value_at(&self, p: f64) -> f64 {
        let (i, f) = self.belief.bracket(p);
        if f == 0.0 {
            self.root[i]
        } else {
            (1.0 - f) * self.root[i] + f * self.root[i + 1]
        }
    }
}

/// Lower convex envelope of samples on a uniform grid.
fn convexify(ys: &[f64]) -> Vec<f64> {
    let n = ys.len();
    let mut hull: Vec<usize> = Vec::new();
    for j in 0..n {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b when it lies on or above the chord a-j
            let lhs = (ys[b] - ys[a]) * (j - a) as f64;
            let rhs = (ys[j] - ys[a]) * (b - a) as f64;
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(j);
    }
    let mut out = vec![0.0; n];
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        for (j, o) in out.iter_mut().enumerate().take(b + 1).skip(a) {
            let f = (j - a) as f64 / (b - a) as f64;
            *o = (1.0 - f) * ys[a] + f * ys[b];
        }
    }
    if hull.len() == 1 {
        out[0] = ys[0];
    }
    out
}

struct Tree<'a> {
    spec: &'a GameSpec,
    ps: Vec<f64>,
    memo: HashMap<(usize, Vec<u64>), (bool, Vec<f64>)>,
    lipschitz: f64,
    off: f64,
}

impl Tree<'_> {
    fn infeasible(&mut self, k: usize, x: &[f64]) -> Result<bool> {
        Ok(self.node(k, x)?.0)
    }

    fn node(&mut self, k: usize, x: &[f64]) -> Result<(bool, Vec<f64>)> {
        let key = (k, x.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        let spec = self.spec;
        let snapped;
        let x = match spec.grid() {
            Some(g) => {
                let c = g.coords(g.nearest(x));
                let d = c.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                self.off = self.off.max(d);
                // round-off from the Euler step is not a real offset; without this a
                // constraint with c = 0 on nodes flips feasibility
                if d <= 1e-9 * (1.0 + g.max_spacing()) {
                    snapped = c;
                    &snapped[..]
                } else {
                    x
                }
            }
            None => x,
        };
        let nb = self.ps.len();
        let out = if spec.c(x) > 0.0 {
            (true, vec![spec.cap; nb])
        } else if k == spec.steps() {
            let vals = self
                .ps
                .iter()
                .map(|&p| {
                    let b = Belief::binary(p).expect("lattice belief");
                    (0..spec.types).map(|i| b.get(i) * spec.g(i, x)).sum()
                })
                .collect();
            (false, vals)
        } else {
            let (nu, nv) = (spec.actions.nu(), spec.actions.nv());
            let mut kids = vec![vec![Vec::new(); nv]; nu];
            let mut forced = true;
            for (u, row) in kids.iter_mut().enumerate() {
                let mut caught = false;
                for (v, slot) in row.iter_mut().enumerate() {
                    let y = spec.successor(x, u, v)?.state;
                    caught |= self.infeasible(k + 1, &y)?;
                    *slot = self.node(k + 1, &y)?.1;
                }
                forced &= caught;
            }
            if forced {
                (true, vec![spec.cap; nb])
            } else {
                let mut stage = vec![f64::INFINITY; nb];
                for (b, &p) in self.ps.iter().enumerate() {
                    for (u, row) in kids.iter().enumerate() {
                        let mut worst = f64::NEG_INFINITY;
                        for (v, kid) in row.iter().enumerate() {
                            let run = p * spec.running(0, k, u, v) + (1.0 - p) * spec.running(1, k, u, v);
                            worst = worst.max(kid[b] + spec.tau() * run);
                        }
                        stage[b] = stage[b].min(worst);
                    }
                }
                let h = 1.0 / (nb - 1) as f64;
                for w in stage.windows(2) {
                    self.lipschitz = self.lipschitz.max((w[1] - w[0]).abs() / h);
                }
                (false, convexify(&stage))
            }
        };
        self.memo.insert(key, out.clone());
        Ok(out)
    }
}

/// Reference value at (0, x0) over a belief lattice `refine` times finer than
/// the solver's. Limited to |U||V| <= 16 and at most 3 steps.
pub fn brute_force_value(spec: &GameSpec, x0: &[f64], refine: usize) -> Result<BruteForce> {
    if spec.types != 2 {
        return Err(Error::Unsupported("brute force handles two types".into()));
    }
    if spec.actions.nu() * spec.actions.nv() > 16 || spec.steps() > 3 {
        return Err(Error::Unsupported("brute force needs |U||V| <= 16 and L <= 3".into()));
    }
    let belief = BeliefGrid::new((spec.belief.nodes - 1) * refine.max(1) + 1)?;
    let mut tree = Tree { spec, ps: belief.points(), memo: HashMap::new(), lipschitz: 0.0, off: 0.0 };
    let (_, root) = tree.node(0, x0)?;
    Ok(BruteForce {
        belief,
        root,
        lipschitz_p: tree.lipschitz,
        off_lattice: tree.off,
        tree_states: tree.memo.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::beer_quiche_spec;

    #[test]
    fn convexify_simple() {
        let c = convexify(&[0.0, 1.0, 0.0, 1.0, 4.0]);
        assert_eq!(c, vec![0.0, 0.0, 0.0, 1.0, 4.0]);
    }

    #[test]
    fn quiche_root() {
        let spec = beer_quiche_spec().unwrap();
        let bf = brute_force_value(&spec, &[0.0], 10).unwrap();
        assert!((bf.value_at(1.0 / 3.0) - 1.0 / 6.0).abs() < 1e-9);
        assert_eq!(bf.off_lattice, 0.0);
    }
}
