use crate::belief::{belief_project, Belief};
use crate::convex::{lower_hull_1d, lower_hull_2d, Hull1d, Hull2d};
use crate::dual::{dual_stage_row, ConjugateTable, DualStageRow, ShiftPolicy};
use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::primal::{running_matrix, stage_row, successors, StageRow, ValueTable};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// One branch of Player 1's split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P1Branch {
    pub u: usize,
    pub weight: f64,
    pub posterior: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum P1Decision {
    /// State is in the infeasible set; play the stage minimax action without splitting.
    Resign { u: usize },
    Split { branches: Vec<P1Branch> },
}

impl P1Decision {
    /// Branch probabilities conditioned on the true type: lambda_j p^j[i] / p[i].
    pub fn conditional(&self, p: &Belief, i: usize) -> Result<Vec<f64>> {
        match self {
            P1Decision::Resign { .. } => Ok(vec![1.0]),
            P1Decision::Split { branches } => {
                if p.get(i) <= 0.0 {
                    return Err(Error::Strategy(format!("type {i} has zero probability")));
                }
                Ok(branches.iter().map(|b| b.weight * b.posterior[i] / p.get(i)).collect())
            }
        }
    }

    /// Probability of each action given the true type.
    pub fn action_probs(&self, p: &Belief, i: usize, nu: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; nu];
        match self {
            P1Decision::Resign { u } => out[*u] = 1.0,
            P1Decision::Split { branches } => {
                for (b, q) in branches.iter().zip(self.conditional(p, i)?) {
                    out[b.u] += q;
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P2Branch {
    pub v: usize,
    /// Player 1's best reply attached to this vertex in the dual stage game.
    pub u_reply: usize,
    pub weight: f64,
    pub vertex: Vec<f64>,
    pub next: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum P2Decision {
    /// Infeasible state: drive toward constraint violation.
    Pursuit { v: usize },
    Split { branches: Vec<P2Branch> },
}

impl P2Decision {
    pub fn action_probs(&self, nv: usize) -> Vec<f64> {
        let mut out = vec![0.0; nv];
        match self {
            P2Decision::Pursuit { v } => out[*v] = 1.0,
            P2Decision::Split { branches } => {
                for b in branches {
                    out[b.v] += b.weight;
                }
            }
        }
        out
    }
}

/// Strategy context over solved tables. Stage rows and hulls at lattice
/// nodes are computed once and reused.
pub struct Players<'a> {
    pub spec: &'a GameSpec,
    pub primal: &'a ValueTable,
    pub dual: Option<&'a ConjugateTable>,
    p1_cache: Vec<OnceLock<(StageRow, Hull1d)>>,
    p2_cache: Vec<OnceLock<(DualStageRow, Hull2d)>>,
}

impl<'a> Players<'a> {
    pub fn new(spec: &'a GameSpec, primal: &'a ValueTable, dual: Option<&'a ConjugateTable>) -> Self {
        let n = spec.steps() * spec.n_states();
        Self {
            spec,
            primal,
            dual,
            p1_cache: (0..n).map(|_| OnceLock::new()).collect(),
            p2_cache: (0..if dual.is_some() { n } else { 0 }).map(|_| OnceLock::new()).collect(),
        }
    }

    /// Lattice node exactly matching x, if any.
    fn exact_node(&self, x: &[f64]) -> Option<usize> {
        match self.spec.grid() {
            Some(g) => {
                if !g.contains(x) {
                    return None;
                }
                let s = g.stencil(x);
                (s.len() == 1).then(|| s[0].0)
            }
            None => self.spec.node_of(x).ok(),
        }
    }

    fn compute_p1(&self, k: usize, x: &[f64]) -> Result<(StageRow, Hull1d)> {
        let succ = successors(self.spec, x)?;
        let nv = self.spec.actions.nv();
        let row = stage_row(self.spec, &self.primal.values[k + 1], &running_matrix(self.spec, k), |u, v| {
            &succ[u * nv + v]
        });
        let hull = lower_hull_1d(&self.spec.belief.points(), &row.values)?;
        Ok((row, hull))
    }

    pub fn p1_stage(&self, k: usize, x: &[f64]) -> Result<(StageRow, Hull1d)> {
        if k >= self.spec.steps() {
            return Err(Error::Strategy("no decision at the terminal time".into()));
        }
        match self.exact_node(x) {
            Some(n) => {
                let cell = &self.p1_cache[k * self.spec.n_states() + n];
                if let Some(v) = cell.get() {
                    return Ok(v.clone());
                }
                let v = self.compute_p1(k, x)?;
                Ok(cell.get_or_init(|| v).clone())
            }
            None => self.compute_p1(k, x),
        }
    }

    fn compute_p2(&self, k: usize, x: &[f64], table: &ConjugateTable) -> Result<(DualStageRow, Hull2d)> {
        let succ = successors(self.spec, x)?;
        let nv = self.spec.actions.nv();
        let row = dual_stage_row(
            self.spec,
            &table.grid,
            &table.values[k + 1],
            &running_matrix(self.spec, k),
            ShiftPolicy::Clamp,
            |u, v| &succ[u * nv + v],
        )?;
        let hull = lower_hull_2d(&table.grid, &row.values)?;
        Ok((row, hull))
    }

    pub fn p2_stage(&self, k: usize, x: &[f64]) -> Result<(DualStageRow, Hull2d)> {
        let table = self.dual.ok_or_else(|| Error::Strategy("no conjugate table".into()))?;
        if k >= self.spec.steps() {
            return Err(Error::Strategy("no decision at the terminal time".into()));
        }
        match self.exact_node(x) {
            Some(n) => {
                let cell = &self.p2_cache[k * self.spec.n_states() + n];
                if let Some(v) = cell.get() {
                    return Ok(v.clone());
                }
                let v = self.compute_p2(k, x, table)?;
                Ok(cell.get_or_init(|| v).clone())
            }
            None => self.compute_p2(k, x, table),
        }
    }

    fn feasible(&self, k: usize, x: &[f64]) -> Result<bool> {
        Ok(self.primal.masks.at(k)[self.spec.node_of(x)?])
    }

    /// Player 1's behavioral decision at (t_k, x, p) without sampling.
    pub fn p1_decision(&self, k: usize, x: &[f64], p: &Belief) -> Result<P1Decision> {
        let (row, hull) = self.p1_stage(k, x)?;
        if !self.feasible(k, x)? {
            let (i, f) = self.spec.belief.bracket(p.get(0));
            let b = if f > 0.5 { i + 1 } else { i };
            return Ok(P1Decision::Resign { u: row.u[b] });
        }
        let plan = hull.split_at(p.get(0))?;
        let mut branches: Vec<P1Branch> = Vec::new();
        for ((&node, &w), pt) in plan.nodes.iter().zip(&plan.weights).zip(&plan.points) {
            let u = row.u[node];
            let post = [pt[0], 1.0 - pt[0]];
            if let Some(b) = branches.iter_mut().find(|b| b.u == u) {
                let tot = b.weight + w;
                for (q, r) in b.posterior.iter_mut().zip(post) {
                    *q = (*q * b.weight + r * w) / tot;
                }
                b.weight = tot;
            } else {
                branches.push(P1Branch { u, weight: w, posterior: post.to_vec() });
            }
        }
        Ok(P1Decision::Split { branches })
    }

    /// Player 1 acts: returns the decision, the sampled action and the new belief.
    pub fn p1_act<R: Rng>(
        &self,
        k: usize,
        x: &[f64],
        p: &Belief,
        true_type: usize,
        rng: &mut R,
    ) -> Result<(P1Decision, usize, Belief)> {
        if p.get(true_type) <= 0.0 {
            return Err(Error::Strategy(format!(
                "belief assigns zero probability to the true type {true_type}"
            )));
        }
        let d = self.p1_decision(k, x, p)?;
        match &d {
            P1Decision::Resign { u } => {
                let u = *u;
                Ok((d, u, p.clone()))
            }
            P1Decision::Split { branches } => {
                let probs = d.conditional(p, true_type)?;
                let j = sample(&probs, rng);
                let post = belief_project(&branches[j].posterior)?;
                Ok((d.clone(), branches[j].u, post))
            }
        }
    }

    /// Player 2's behavioral decision at (t_k, x, p_hat) without sampling.
    pub fn p2_decision(&self, k: usize, x: &[f64], p_hat: &[f64]) -> Result<P2Decision> {
        let table = self.dual.ok_or_else(|| Error::Strategy("no conjugate table".into()))?;
        if !table.masks.at(k)[self.spec.node_of(x)?] {
            return Ok(P2Decision::Pursuit { v: pursuit_action(self.spec, &table.masks.masks[k + 1], x)? });
        }
        if p_hat.len() != self.spec.types || p_hat.iter().any(|h| !h.is_finite()) {
            return Err(Error::OutOfDomain(format!("dual vector {p_hat:?}")));
        }
        // off-lattice vectors are clamped, as the conjugate backup clamps its reads
        let mut q = p_hat.to_vec();
        table.grid.clip(&mut q);
        let (row, hull) = self.p2_stage(k, x)?;
        let plan = hull.split_at(&q)?;
        let nv = self.spec.actions.nv();
        let running = running_matrix(self.spec, k);
        let tau = self.spec.tau();
        let branches = plan
            .nodes
            .iter()
            .zip(&plan.weights)
            .zip(&plan.points)
            .map(|((&node, &w), pt)| {
                let (v, u) = (row.v[node], row.u[node]);
                let next = (0..self.spec.types).map(|i| pt[i] - tau * running[i][u * nv + v]).collect();
                P2Branch { v, u_reply: u, weight: w, vertex: pt.clone(), next }
            })
            .collect();
        Ok(P2Decision::Split { branches })
    }

    pub fn p2_act<R: Rng>(
        &self,
        k: usize,
        x: &[f64],
        p_hat: &[f64],
        rng: &mut R,
    ) -> Result<(P2Decision, usize, Vec<f64>)> {
        let d = self.p2_decision(k, x, p_hat)?;
        match &d {
            P2Decision::Pursuit { v } => {
                let v = *v;
                Ok((d, v, p_hat.to_vec()))
            }
            P2Decision::Split { branches } => {
                let w: Vec<f64> = branches.iter().map(|b| b.weight).collect();
                let j = sample(&w, rng);
                let (v, next) = (branches[j].v, branches[j].next.clone());
                Ok((d, v, next))
            }
        }
    }
}

/// The v that leaves the most P1 actions with an infeasible successor;
/// ties go to the deepest mean violation c(x').
pub fn pursuit_action(spec: &GameSpec, next_mask: &[bool], x: &[f64]) -> Result<usize> {
    let (nu, nv) = (spec.actions.nu(), spec.actions.nv());
    let mut best = (0usize, f64::NEG_INFINITY, 0usize);
    for v in 0..nv {
        let mut count = 0;
        let mut depth = 0.0;
        for u in 0..nu {
            let s = spec.successor(x, u, v)?;
            if !next_mask[s.nearest] {
                count += 1;
            }
            depth += spec.c(&s.state) / nu as f64;
        }
        if count > best.0 || (count == best.0 && depth > best.1) {
            best = (count, depth, v);
        }
    }
    Ok(best.2)
}

/// Bayes update of the public belief after observing `u`.
pub fn bayes_posterior(p: &Belief, decision: &P1Decision, u: usize) -> Result<Belief> {
    let joint: Vec<f64> = (0..p.len())
        .map(|i| {
            let like = match decision {
                P1Decision::Resign { u: r } => f64::from(u8::from(*r == u)),
                P1Decision::Split { branches } if p.get(i) > 0.0 => branches
                    .iter()
                    .filter(|b| b.u == u)
                    .map(|b| b.weight * b.posterior[i] / p.get(i))
                    .sum(),
                P1Decision::Split { .. } => 0.0,
            };
            p.get(i) * like
        })
        .collect();
    let s: f64 = joint.iter().sum();
    if s <= 1e-15 {
        return Err(Error::Strategy(format!("action {u} has zero probability under the announced strategy")));
    }
    belief_project(&joint)
}

fn sample<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let r = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (j, w) in weights.iter().enumerate() {
        acc += w;
        if r < acc {
            return j;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::{dual_solve, init_dual};
    use crate::games::beer_quiche_spec;
    use crate::primal::solve;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quiche_p1_conditionals() {
        let spec = beer_quiche_spec().unwrap();
        let t = solve(&spec).unwrap();
        let pl = Players::new(&spec, &t, None);
        let d = pl.p1_decision(0, &[0.0], &spec.prior).unwrap();
        let tough = d.action_probs(&spec.prior, 0, 2).unwrap();
        let weak = d.action_probs(&spec.prior, 1, 2).unwrap();
        assert!((tough[0] - 1.0).abs() < 1e-12);
        assert!((weak[1] - 0.75).abs() < 1e-12 && (weak[0] - 0.25).abs() < 1e-12);
        let after_b = bayes_posterior(&spec.prior, &d, 0).unwrap();
        assert!((after_b.get(0) - 2.0 / 3.0).abs() < 1e-12);
        let after_q = bayes_posterior(&spec.prior, &d, 1).unwrap();
        assert!(after_q.get(0).abs() < 1e-12);
    }

    #[test]
    fn quiche_p2_mixes_after_beer() {
        let spec = beer_quiche_spec().unwrap();
        let t = solve(&spec).unwrap();
        let c = dual_solve(&spec).unwrap();
        let pl = Players::new(&spec, &t, Some(&c));
        let ph = init_dual(&spec, &t, &[0.0], &spec.prior).unwrap().entries;
        let root = pl.p2_decision(0, &[0.0], &ph).unwrap();
        if let P2Decision::Split { branches } = &root {
            assert_eq!(branches.len(), 1);
        }
        let b = pl.p2_decision(1, &[1.0], &ph).unwrap().action_probs(2);
        assert!((b[0] - 0.5).abs() < 1e-12 && (b[1] - 0.5).abs() < 1e-12, "{b:?}");
        let q = pl.p2_decision(1, &[2.0], &ph).unwrap().action_probs(2);
        assert!((q[0] - 1.0).abs() < 1e-12, "{q:?}");
    }

    #[test]
    fn zero_probability_type_rejected() {
        let spec = beer_quiche_spec().unwrap();
        let t = solve(&spec).unwrap();
        let pl = Players::new(&spec, &t, None);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = Belief::binary(1.0).unwrap();
        assert!(pl.p1_act(0, &[0.0], &p, 1, &mut rng).is_err());
        let d = pl.p1_decision(0, &[0.0], &p).unwrap();
        assert!(bayes_posterior(&p, &d, 1).is_err());
    }
}
