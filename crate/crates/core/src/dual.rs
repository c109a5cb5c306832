use crate::belief::Belief;
use crate::convex::{lower_hull_1d, lower_hull_2d};
use crate::error::{Error, Result};
use crate::game::{GameSpec, Successor, Transitions};
use crate::lattice::{Grid, Stencil};
use crate::primal::{running_matrix, successors, ValueTable};
use crate::reach::{compute_masks, FeasibilityMask};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Info-state vector of the dual game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVector {
    pub entries: Vec<f64>,
}

impl DualVector {
    pub fn new(entries: Vec<f64>, cap: f64) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dual vector"));
        }
        if entries.iter().any(|v| v.abs() > cap) {
            return Err(Error::OutOfDomain(format!("dual vector {entries:?} exceeds cap {cap}")));
        }
        Ok(Self { entries })
    }
}

/// Handling of shifted dual reads that leave the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShiftPolicy {
    Strict,
    Clamp,
}

/// Conjugate values per timestep, laid out as `values[k][node * nd + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateTable {
    pub values: Vec<Vec<f64>>,
    pub stage: Vec<Vec<f64>>,
    pub masks: FeasibilityMask,
    pub grid: Grid,
    pub n_states: usize,
    pub cap: f64,
    pub tau: f64,
    /// Shifted reads clamped back onto the lattice.
    pub clamped_reads: usize,
}

impl ConjugateTable {
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn nd(&self) -> usize {
        self.grid.len()
    }

    pub fn row(&self, k: usize, node: usize) -> &[f64] {
        let nd = self.nd();
        &self.values[k][node * nd..(node + 1) * nd]
    }

    pub fn stage_row(&self, k: usize, node: usize) -> &[f64] {
        let nd = self.nd();
        &self.stage[k][node * nd..(node + 1) * nd]
    }

    /// Row over the dual lattice at an arbitrary state.
    pub fn dual_row_at(&self, spec: &GameSpec, k: usize, x: &[f64]) -> Result<Vec<f64>> {
        let nd = self.nd();
        match spec.grid() {
            Some(g) => {
                if !g.contains(x) {
                    return Err(Error::OutOfDomain(format!("state {x:?} outside lattice")));
                }
                let mut out = vec![0.0; nd];
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

    pub fn value_at(&self, spec: &GameSpec, k: usize, x: &[f64], p_hat: &[f64]) -> Result<f64> {
        if !self.grid.contains(p_hat) {
            return Err(Error::OutOfDomain(format!("dual vector {p_hat:?} outside the dual lattice")));
        }
        let row = self.dual_row_at(spec, k, x)?;
        Ok(self.grid.interpolate(&row, p_hat))
    }
}

/// max_i (p_i - g_i(x)) on feasible states, -K otherwise.
pub fn dual_terminal(spec: &GameSpec, x: &[f64], p_hat: &[f64]) -> f64 {
    if spec.feasible_state(x) {
        (0..spec.types)
            .map(|i| p_hat[i] - spec.g(i, x))
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        -spec.cap
    }
}

fn dual_grid(spec: &GameSpec) -> Result<&Grid> {
    let g = spec
        .dual_lattice
        .as_ref()
        .ok_or_else(|| Error::Spec("dual lattice bounds are not configured".into()))?;
    if spec.types != 2 || g.dim() != 2 {
        return Err(Error::Unsupported("conjugate tables are implemented for two types".into()));
    }
    Ok(g)
}

pub fn dual_terminal_table(spec: &GameSpec) -> Result<Vec<f64>> {
    let g = dual_grid(spec)?;
    let nd = g.len();
    let pts: Vec<Vec<f64>> = (0..nd).map(|j| g.coords(j)).collect();
    let mut out = vec![0.0; spec.n_states() * nd];
    for n in 0..spec.n_states() {
        let x = spec.state(n);
        for (j, p) in pts.iter().enumerate() {
            out[n * nd + j] = dual_terminal(spec, &x, p);
        }
    }
    Ok(out)
}

/// Dual minimax row: value, argmin v and P1's best reply u at every lattice node.
#[derive(Debug, Clone, PartialEq)]
pub struct DualStageRow {
    pub values: Vec<f64>,
    pub v: Vec<usize>,
    pub u: Vec<usize>,
    pub clamped: usize,
}

fn shifted_stencil(grid: &Grid, p: &[f64], shift: &[f64], policy: ShiftPolicy) -> Result<(Stencil, bool)> {
    if shift.iter().all(|s| *s == 0.0) {
        return Ok((grid.stencil(p), false));
    }
    let mut q: Vec<f64> = p.iter().zip(shift).map(|(a, s)| a - s).collect();
    let outside = !grid.contains(&q);
    if outside {
        if policy == ShiftPolicy::Strict {
            return Err(Error::Guard(format!(
                "shifted dual vector {q:?} leaves the dual lattice; widen the dual lattice bounds"
            )));
        }
        grid.clip(&mut q);
    }
    Ok((grid.stencil(&q), outside))
}

/// min_v max_u V*_next(x', p - tau l(u, v)) at every dual lattice node.
/// Ties resolve to the lowest action index.
pub fn dual_stage_row<'a>(
    spec: &GameSpec,
    grid: &Grid,
    next: &[f64],
    running: &[Vec<f64>],
    policy: ShiftPolicy,
    succ: impl Fn(usize, usize) -> &'a Successor,
) -> Result<DualStageRow> {
    let nd = grid.len();
    let (nu, nv) = (spec.actions.nu(), spec.actions.nv());
    let tau = spec.tau();
    let pts: Vec<Vec<f64>> = (0..nd).map(|j| grid.coords(j)).collect();
    let mut best = vec![f64::INFINITY; nd];
    let mut bv = vec![0usize; nd];
    let mut bu = vec![0usize; nd];
    let mut inner = vec![f64::NEG_INFINITY; nd];
    let mut iu = vec![0usize; nd];
    let mut clamped = 0usize;
    for v in 0..nv {
        inner.fill(f64::NEG_INFINITY);
        for u in 0..nu {
            let shift: Vec<f64> = (0..spec.types).map(|i| tau * running[i][u * nv + v]).collect();
            let s = succ(u, v);
            for j in 0..nd {
                let (st, out) = shifted_stencil(grid, &pts[j], &shift, policy)?;
                clamped += out as usize;
                let mut val = 0.0;
                for &(m, wm) in &s.stencil {
                    let base = m * nd;
                    for &(jj, wj) in &st {
                        val += wm * wj * next[base + jj];
                    }
                }
                if val > inner[j] {
                    inner[j] = val;
                    iu[j] = u;
                }
            }
        }
        for j in 0..nd {
            if inner[j] < best[j] {
                best[j] = inner[j];
                bv[j] = v;
                bu[j] = iu[j];
            }
        }
    }
    Ok(DualStageRow { values: best, v: bv, u: bu, clamped })
}

/// Dual stage minimax at one dual vector, with (v*, u*).
pub fn dual_stage_minimax(
    spec: &GameSpec,
    next: &[f64],
    k: usize,
    x: &[f64],
    p_hat: &[f64],
    policy: ShiftPolicy,
) -> Result<(f64, usize, usize)> {
    let grid = dual_grid(spec)?;
    if !grid.contains(p_hat) {
        return Err(Error::OutOfDomain(format!("dual vector {p_hat:?} outside the dual lattice")));
    }
    let succ = successors(spec, x)?;
    let nd = grid.len();
    let (nu, nv) = (spec.actions.nu(), spec.actions.nv());
    let running = running_matrix(spec, k);
    let tau = spec.tau();
    let mut best = (f64::INFINITY, 0, 0);
    for v in 0..nv {
        let mut inner = (f64::NEG_INFINITY, 0);
        for u in 0..nu {
            let shift: Vec<f64> = (0..spec.types).map(|i| tau * running[i][u * nv + v]).collect();
            let (st, _) = shifted_stencil(grid, p_hat, &shift, policy)?;
            let mut val = 0.0;
            for &(m, wm) in &succ[u * nv + v].stencil {
                for &(jj, wj) in &st {
                    val += wm * wj * next[m * nd + jj];
                }
            }
            if val > inner.0 {
                inner = (val, u);
            }
        }
        if inner.0 < best.0 {
            best = (inner.0, v, inner.1);
        }
    }
    Ok(best)
}

/// One backward step of the conjugate recursion. Returns (values, stage, clamped reads).
pub fn dual_backup_step(
    spec: &GameSpec,
    trans: &Transitions,
    next: &[f64],
    k: usize,
    mask: &[bool],
    policy: ShiftPolicy,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let grid = dual_grid(spec)?;
    let nd = grid.len();
    let running = running_matrix(spec, k);
    let rows: Vec<Result<(Vec<f64>, Vec<f64>, usize)>> = (0..spec.n_states())
        .into_par_iter()
        .map(|n| {
            if !mask[n] {
                return Ok((vec![-spec.cap; nd], vec![-spec.cap; nd], 0));
            }
            let st = dual_stage_row(spec, grid, next, &running, policy, |u, v| trans.get(n, u, v))?;
            let hull = lower_hull_2d(grid, &st.values)?;
            Ok((hull.values().to_vec(), st.values, st.clamped))
        })
        .collect();
    let mut values = Vec::with_capacity(spec.n_states() * nd);
    let mut stage = Vec::with_capacity(spec.n_states() * nd);
    let mut clamped = 0;
    for r in rows {
        let (v, s, c) = r?;
        values.extend(v);
        stage.extend(s);
        clamped += c;
    }
    Ok((values, stage, clamped))
}

pub fn dual_solve_with(
    spec: &GameSpec,
    trans: &Transitions,
    masks: FeasibilityMask,
    policy: ShiftPolicy,
) -> Result<ConjugateTable> {
    spec.validate()?;
    let grid = dual_grid(spec)?.clone();
    let need = spec.dual_bound().unwrap_or(0.0);
    if spec.cap <= need {
        return Err(Error::Spec(format!(
            "cap K = {} must exceed max|p| + max|g| + T max|l| = {need} for the dual tables",
            spec.cap
        )));
    }
    let l = spec.steps();
    let mut values = vec![Vec::new(); l + 1];
    let mut stage = vec![Vec::new(); l];
    values[l] = dual_terminal_table(spec)?;
    let mut clamped = 0;
    for k in (0..l).rev() {
        let (v, s, c) = dual_backup_step(spec, trans, &values[k + 1], k, masks.at(k), policy)?;
        values[k] = v;
        stage[k] = s;
        clamped += c;
    }
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("conjugate table"));
    }
    Ok(ConjugateTable {
        values,
        stage,
        masks,
        grid,
        n_states: spec.n_states(),
        cap: spec.cap,
        tau: spec.tau(),
        clamped_reads: clamped,
    })
}

pub fn dual_solve(spec: &GameSpec) -> Result<ConjugateTable> {
    let trans = spec.transitions()?;
    let masks = compute_masks(spec, &trans, false);
    dual_solve_with(spec, &trans, masks, ShiftPolicy::Clamp)
}

/// Dual vector from the primal subgradient at p: (V + s(1 - p1), V - s p1).
pub fn init_dual(spec: &GameSpec, table: &ValueTable, x: &[f64], p: &Belief) -> Result<DualVector> {
    if spec.types != 2 {
        return Err(Error::Unsupported("dual initialization needs two types".into()));
    }
    let row = table.belief_row_at(spec, 0, x)?;
    let hull = lower_hull_1d(&spec.belief.points(), &row)?;
    let p1 = p.get(0);
    let v = hull.eval(p1)?;
    let s = hull.slope(p1)?;
    DualVector::new(vec![v + s * (1.0 - p1), v - s * p1], spec.cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{beer_quiche_spec, Convention};
    use crate::primal::solve;

    #[test]
    fn quiche_init_dual() {
        let spec = beer_quiche_spec().unwrap();
        let t = solve(&spec).unwrap();
        let d = init_dual(&spec, &t, &[0.0], &spec.prior).unwrap();
        let m = Convention::Maximizer.dual(&d.entries);
        assert!((m[0] - 1.5).abs() < 1e-12 && (m[1] + 1.0).abs() < 1e-12, "{m:?}");
    }

    #[test]
    fn quiche_terminal_dual() {
        let spec = beer_quiche_spec().unwrap();
        // maximizer convention min{p1 - 2, p2 + 2} at (B, b), p = (3/2, -1)
        let v = dual_terminal(&spec, &[3.0], &[-1.5, 1.0]);
        assert!((Convention::Maximizer.value(v) + 0.5).abs() < 1e-15);
        assert_eq!(dual_terminal(&spec, &[4.0], &[-1.0, 0.0]), 0.0);
    }

    #[test]
    fn quiche_beer_node_hull() {
        let spec = beer_quiche_spec().unwrap();
        let c = dual_solve(&spec).unwrap();
        let g = &c.grid;
        let j = g.nearest(&[-1.5, 1.0]);
        assert!(c.row(1, 1)[j].abs() < 1e-12);
        for j in 0..g.len() {
            let p = g.coords(j);
            let d = p[1] - p[0];
            if (1.0..=4.0).contains(&d) {
                let expect = 2.0 / 3.0 * p[0] + p[1] / 3.0 + 2.0 / 3.0;
                assert!((c.row(1, 1)[j] - expect).abs() < 1e-9, "{p:?}");
            }
        }
        assert_eq!(c.clamped_reads, 0);
    }

    #[test]
    fn strict_shift_errors_outside() {
        let spec = beer_quiche_spec().unwrap();
        let c = dual_solve(&spec).unwrap();
        assert!(dual_stage_minimax(&spec, &c.values[2], 1, &[1.0], &[7.0, 0.0], ShiftPolicy::Strict).is_err());
        let (v, vs, _) = dual_stage_minimax(&spec, &c.values[2], 1, &[2.0], &[-1.5, 1.0], ShiftPolicy::Strict).unwrap();
        // after quiche: p2 - 1 in the minimizer convention, bully
        assert!(v.abs() < 1e-12);
        assert_eq!(vs, 0);
    }
}
