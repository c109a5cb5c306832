use crate::belief::{Belief, BeliefGrid};
use crate::convex::lower_hull_1d;
use crate::error::{Error, Result};
use crate::game::{GameSpec, Successor, Transitions};
use crate::reach::{compute_masks, FeasibilityMask};
use rayon::prelude::*;

/// Primal values per timestep, laid out as `values[k][node * nb + b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub values: Vec<Vec<f64>>,
    /// One-step minimax values before convexification, for k < L.
    pub stage: Vec<Vec<f64>>,
    pub masks: FeasibilityMask,
    pub belief: BeliefGrid,
    pub n_states: usize,
    pub cap: f64,
    pub tau: f64,
    /// Successors that left the state lattice and were clamped.
    pub clipped: usize,
}

impl ValueTable {
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn nb(&self) -> usize {
        self.belief.nodes
    }

    pub fn row(&self, k: usize, node: usize) -> &[f64] {
        let nb = self.nb();
        &self.values[k][node * nb..(node + 1) * nb]
    }

    pub fn stage_row(&self, k: usize, node: usize) -> &[f64] {
        let nb = self.nb();
        &self.stage[k][node * nb..(node + 1) * nb]
    }

    pub fn get(&self, k: usize, node: usize, b: usize) -> f64 {
        self.values[k][node * self.nb() + b]
    }

    /// Values over the belief lattice at an arbitrary state (multilinear in x).
    pub fn belief_row_at(&self, spec: &GameSpec, k: usize, x: &[f64]) -> Result<Vec<f64>> {
        let nb = self.nb();
        match spec.grid() {
            Some(g) => {
                if !g.contains(x) {
                    return Err(Error::OutOfDomain(format!("state {x:?} outside lattice")));
                }
                let mut out = vec![0.0; nb];
                for (m, w) in g.stencil(x) {
                    for (o, v) in out.iter_mut().zip(self.row(k, m)) {
                        *o += w * v;
                    }
                }
                Ok(out)
            }
            None => Ok(self.row(k, spec.node_of(x)?).to_vec()),
        }
    }

    /// V(t_k, x, p) with linear interpolation between belief nodes.
    pub fn value_at(&self, spec: &GameSpec, k: usize, x: &[f64], p: &Belief) -> Result<f64> {
        let row = self.belief_row_at(spec, k, x)?;
        Ok(interp_belief(&self.belief, &row, p.get(0)))
    }
}

pub fn interp_belief(grid: &BeliefGrid, row: &[f64], p: f64) -> f64 {
    let (i, f) = grid.bracket(p);
    if f <= 1e-12 {
        row[i]
    } else if f >= 1.0 - 1e-12 {
        row[i + 1]
    } else {
        (1.0 - f) * row[i] + f * row[i + 1]
    }
}

/// Sum_i p_i g_i(x) when c(x) <= 0, else the cap.
pub fn terminal_value(spec: &GameSpec, x: &[f64], p: &Belief) -> f64 {
    if spec.feasible_state(x) {
        (0..spec.types).map(|i| p.get(i) * spec.g(i, x)).sum()
    } else {
        spec.cap
    }
}

/// Running cost matrix `l[i][u * nv + v]` at step k.
pub fn running_matrix(spec: &GameSpec, k: usize) -> Vec<Vec<f64>> {
    let (nu, nv) = (spec.actions.nu(), spec.actions.nv());
    (0..spec.types)
        .map(|i| {
            let mut m = vec![0.0; nu * nv];
            if spec.has_running() {
                for u in 0..nu {
                    for v in 0..nv {
                        m[u * nv + v] = spec.running(i, k, u, v);
                    }
                }
            }
            m
        })
        .collect()
}

/// Minimax row over the belief lattice: value, argmin u and its best reply v.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRow {
    pub values: Vec<f64>,
    pub u: Vec<usize>,
    pub v: Vec<usize>,
}

/// min_u max_v [V_next(x', p) + tau * sum_i p_i l_i(u, v)] at every belief node.
/// Ties resolve to the lowest action index.
pub fn stage_row<'a>(
    spec: &GameSpec,
    next: &[f64],
    running: &[Vec<f64>],
    succ: impl Fn(usize, usize) -> &'a Successor,
) -> StageRow {
    let nb = spec.belief.nodes;
    let (nu, nv) = (spec.actions.nu(), spec.actions.nv());
    let tau = spec.tau();
    let ps = spec.belief.points();
    let mut best = vec![f64::INFINITY; nb];
    let mut bu = vec![0usize; nb];
    let mut bv = vec![0usize; nb];
    let mut inner = vec![f64::NEG_INFINITY; nb];
    let mut iv = vec![0usize; nb];
    let mut row = vec![0.0; nb];
    for u in 0..nu {
        inner.fill(f64::NEG_INFINITY);
        for v in 0..nv {
            row.fill(0.0);
            for &(m, w) in &succ(u, v).stencil {
                for (r, val) in row.iter_mut().zip(&next[m * nb..(m + 1) * nb]) {
                    *r += w * val;
                }
            }
            if spec.has_running() {
                let l0 = running[0][u * nv + v];
                let l1 = running[1][u * nv + v];
                for (b, r) in row.iter_mut().enumerate() {
                    *r += tau * (ps[b] * l0 + (1.0 - ps[b]) * l1);
                }
            }
            for b in 0..nb {
                if row[b] > inner[b] {
                    inner[b] = row[b];
                    iv[b] = v;
                }
            }
        }
        for b in 0..nb {
            if inner[b] < best[b] {
                best[b] = inner[b];
                bu[b] = u;
                bv[b] = iv[b];
            }
        }
    }
    StageRow { values: best, u: bu, v: bv }
}

/// Stage minimax at a single belief (linear interpolation between nodes).
pub fn stage_minimax(spec: &GameSpec, next: &[f64], k: usize, x: &[f64], p: &Belief) -> Result<(f64, usize, usize)> {
    let succ = successors(spec, x)?;
    let nv = spec.actions.nv();
    let row = stage_row(spec, next, &running_matrix(spec, k), |u, v| &succ[u * nv + v]);
    let (i, f) = spec.belief.bracket(p.get(0));
    let j = if f > 0.5 { i + 1 } else { i };
    Ok((interp_belief(&spec.belief, &row.values, p.get(0)), row.u[j], row.v[j]))
}

pub fn successors(spec: &GameSpec, x: &[f64]) -> Result<Vec<Successor>> {
    let mut out = Vec::with_capacity(spec.actions.nu() * spec.actions.nv());
    for u in 0..spec.actions.nu() {
        for v in 0..spec.actions.nv() {
            out.push(spec.successor(x, u, v)?);
        }
    }
    Ok(out)
}

fn require_two_types(spec: &GameSpec) -> Result<()> {
    if spec.types != 2 {
        return Err(Error::Unsupported(format!(
            "tables are implemented for two types, got {}",
            spec.types
        )));
    }
    Ok(())
}

pub fn terminal_table(spec: &GameSpec) -> Vec<f64> {
    let ps = spec.belief.points();
    let nb = ps.len();
    let mut out = vec![0.0; spec.n_states() * nb];
    for n in 0..spec.n_states() {
        let x = spec.state(n);
        let feasible = spec.feasible_state(&x);
        let g: Vec<f64> = (0..spec.types).map(|i| spec.g(i, &x)).collect();
        for (b, &p) in ps.iter().enumerate() {
            out[n * nb + b] = if feasible { p * g[0] + (1.0 - p) * g[1] } else { spec.cap };
        }
    }
    out
}

/// One backward step: stage minimax then lower hull over beliefs at every
/// feasible node; infeasible nodes carry the cap. Returns (values, stage).
pub fn backup_step(
    spec: &GameSpec,
    trans: &Transitions,
    next: &[f64],
    k: usize,
    mask: &[bool],
) -> Result<(Vec<f64>, Vec<f64>)> {
    require_two_types(spec)?;
    let nb = spec.belief.nodes;
    let ps = spec.belief.points();
    let running = running_matrix(spec, k);
    let rows: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..spec.n_states())
        .into_par_iter()
        .map(|n| {
            if !mask[n] {
                return Ok((vec![spec.cap; nb], vec![spec.cap; nb]));
            }
            let st = stage_row(spec, next, &running, |u, v| trans.get(n, u, v));
            let hull = lower_hull_1d(&ps, &st.values)?;
            Ok((hull.values().to_vec(), st.values))
        })
        .collect();
    let mut values = Vec::with_capacity(spec.n_states() * nb);
    let mut stage = Vec::with_capacity(spec.n_states() * nb);
    for r in rows {
        let (v, s) = r?;
        values.extend(v);
        stage.extend(s);
    }
    Ok((values, stage))
}

pub fn solve_with(spec: &GameSpec, trans: &Transitions, masks: FeasibilityMask) -> Result<ValueTable> {
    require_two_types(spec)?;
    spec.validate()?;
    let l = spec.steps();
    let mut values = vec![Vec::new(); l + 1];
    let mut stage = vec![Vec::new(); l];
    values[l] = terminal_table(spec);
    for k in (0..l).rev() {
        let (v, s) = backup_step(spec, trans, &values[k + 1], k, masks.at(k))?;
        values[k] = v;
        stage[k] = s;
    }
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("primal table"));
    }
    Ok(ValueTable {
        values,
        stage,
        masks,
        belief: spec.belief,
        n_states: spec.n_states(),
        cap: spec.cap,
        tau: spec.tau(),
        clipped: trans.clip_count(),
    })
}

pub fn solve(spec: &GameSpec) -> Result<ValueTable> {
    let trans = spec.transitions()?;
    let masks = compute_masks(spec, &trans, false);
    solve_with(spec, &trans, masks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{beer_quiche_spec, corridor, CorridorParams};

    #[test]
    fn quiche_root_value() {
        let spec = beer_quiche_spec().unwrap();
        let t = solve(&spec).unwrap();
        // minimizer convention: value at p_T = 1/3 is +1/6
        assert!((t.get(0, 0, 20) - 1.0 / 6.0).abs() < 1e-12);
        for b in 0..61 {
            let p = b as f64 / 60.0;
            let expect = if p < 2.0 / 3.0 { 1.0 - 2.5 * p } else { -p };
            assert!((t.get(0, 0, b) - expect).abs() < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn quiche_stage_at_beer() {
        let spec = beer_quiche_spec().unwrap();
        let t = solve(&spec).unwrap();
        // x = B one step before the end, p_T = 1/3: max-convention 4p - 2
        assert!((t.stage_row(1, 1)[20] - (2.0 - 4.0 / 3.0)).abs() < 1e-12);
        let p = Belief::new(vec![1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let (v, _, vstar) = stage_minimax(&spec, &t.values[2], 1, &[1.0], &p).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(vstar, 0);
    }

    #[test]
    fn terminal_examples() {
        let spec = beer_quiche_spec().unwrap();
        let tough = Belief::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(terminal_value(&spec, &[3.0], &tough), -2.0);
        let c = corridor(&CorridorParams::default()).unwrap();
        assert_eq!(terminal_value(&c, &[0.0, 0.0], &tough), c.cap);
        let x = [0.4, -0.2];
        assert_eq!(terminal_value(&c, &x, &tough), c.g(0, &x));
    }

    #[test]
    fn constant_next_value() {
        let spec = corridor(&CorridorParams { radius: -1.0, ..Default::default() }).unwrap();
        let next = vec![0.75; spec.n_states() * spec.belief.nodes];
        let p = Belief::binary(0.3).unwrap();
        let (v, _, _) = stage_minimax(&spec, &next, 0, &[0.2, 0.4], &p).unwrap();
        assert!((v - 0.75).abs() < 1e-14);
    }

    #[test]
    fn three_types_rejected() {
        let mut spec = beer_quiche_spec().unwrap();
        spec.types = 3;
        assert!(solve(&spec).is_err());
    }
}
