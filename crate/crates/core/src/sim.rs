use crate::belief::Belief;
use crate::convex::lower_hull_1d;
use crate::dual::init_dual;
use crate::error::{Error, Result};
use crate::primal::interp_belief;
use crate::strategy::{Players, P2Decision};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How the informed player's type is chosen for a rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TypeSource {
    Fixed(usize),
    /// Drawn from the prior with the rollout's generator.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub u: Vec<usize>,
    pub v: Vec<usize>,
    pub beliefs: Vec<Vec<f64>>,
    pub duals: Vec<Vec<f64>>,
    pub resign: Vec<bool>,
    pub pursuit: Vec<bool>,
    pub clip: Vec<bool>,
    pub realized_type: usize,
    pub running: Vec<f64>,
    pub terminal: f64,
    pub violated: bool,
    pub payoff: f64,
}

impl TrajectoryRecord {
    /// Payoff rebuilt from the recorded pieces.
    pub fn recomputed_payoff(&self, cap: f64) -> f64 {
        if self.violated {
            cap
        } else {
            self.terminal + self.running.iter().sum::<f64>()
        }
    }

    /// First step whose posterior puts all mass on one type; L if never.
    pub fn reveal_step(&self) -> usize {
        let l = self.u.len();
        let deg = |b: &Vec<f64>| b.iter().any(|w| (w - 1.0).abs() <= 1e-9);
        if deg(&self.beliefs[0]) {
            return 0;
        }
        (0..l).find(|&k| deg(&self.beliefs[k + 1])).unwrap_or(l)
    }
}

/// Simultaneous-move rollout. Without a conjugate table Player 2 plays the
/// primal minimax reply at the public belief.
pub fn rollout(players: &Players, x0: &[f64], p0: &Belief, types: TypeSource, seed: u64) -> Result<TrajectoryRecord> {
    let spec = players.spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let realized_type = match types {
        TypeSource::Fixed(i) if i < spec.types => i,
        TypeSource::Fixed(i) => return Err(Error::Strategy(format!("type {i} out of range"))),
        TypeSource::Sampled => {
            let r: f64 = rng.gen();
            let mut acc = 0.0;
            let mut t = spec.types - 1;
            for i in 0..spec.types {
                acc += p0.get(i);
                if r < acc {
                    t = i;
                    break;
                }
            }
            t
        }
    };
    let l = spec.steps();
    let mut p = p0.clone();
    let mut p_hat = match players.dual {
        Some(_) => init_dual(spec, players.primal, x0, p0)?.entries,
        None => Vec::new(),
    };
    let mut x = x0.to_vec();
    let mut rec = TrajectoryRecord {
        seed,
        times: spec.time.times(),
        states: vec![x.clone()],
        u: Vec::with_capacity(l),
        v: Vec::with_capacity(l),
        beliefs: vec![p.weights().to_vec()],
        duals: vec![p_hat.clone()],
        resign: Vec::with_capacity(l),
        pursuit: Vec::with_capacity(l),
        clip: Vec::with_capacity(l),
        realized_type,
        running: Vec::with_capacity(l),
        terminal: 0.0,
        violated: !spec.feasible_state(&x),
        payoff: 0.0,
    };
    for k in 0..l {
        let (d1, u, post) = players.p1_act(k, &x, &p, realized_type, &mut rng)?;
        let (v, next_hat, pursuit) = match players.dual {
            Some(_) => {
                let (d2, v, nh) = players.p2_act(k, &x, &p_hat, &mut rng)?;
                (v, nh, matches!(d2, P2Decision::Pursuit { .. }))
            }
            None => {
                let (row, _) = players.p1_stage(k, &x)?;
                let (i, f) = spec.belief.bracket(p.get(0));
                (row.v[if f > 0.5 { i + 1 } else { i }], Vec::new(), false)
            }
        };
        let s = spec.successor(&x, u, v)?;
        rec.running.push(spec.tau() * spec.running(realized_type, k, u, v));
        rec.resign.push(matches!(d1, crate::strategy::P1Decision::Resign { .. }));
        rec.pursuit.push(pursuit);
        rec.clip.push(s.clipped);
        rec.u.push(u);
        rec.v.push(v);
        x = s.state;
        if !spec.feasible_state(&x) {
            rec.violated = true;
        }
        p = post;
        p_hat = next_hat;
        rec.states.push(x.clone());
        rec.beliefs.push(p.weights().to_vec());
        rec.duals.push(p_hat.clone());
    }
    rec.terminal = spec.g(realized_type, &x);
    rec.payoff = rec.recomputed_payoff(spec.cap);
    Ok(rec)
}

/// Mean reveal step over records.
pub fn reveal_delay(records: &[TrajectoryRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().map(|r| r.reveal_step() as f64).sum::<f64>() / records.len() as f64
}

/// Stage minimax minus the convexified value at (t_k, x, p); nonnegative.
pub fn advantage(players: &Players, k: usize, x: &[f64], p: &Belief) -> Result<f64> {
    let spec = players.spec;
    if !players.primal.masks.at(k)[spec.node_of(x)?] {
        return Err(Error::Strategy(format!("state {x:?} is infeasible at step {k}")));
    }
    let (row, hull) = players.p1_stage(k, x)?;
    let stage = interp_belief(&spec.belief, &row.values, p.get(0));
    Ok(stage - hull.eval(p.get(0))?)
}

/// Advantage along a recorded trajectory; None where the state is infeasible.
pub fn advantage_series(players: &Players, rec: &TrajectoryRecord) -> Result<Vec<Option<f64>>> {
    (0..rec.u.len())
        .map(|k| {
            let p = Belief::new(rec.beliefs[k].clone())?;
            match advantage(players, k, &rec.states[k], &p) {
                Ok(a) => Ok(Some(a)),
                Err(Error::Strategy(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub runs: usize,
    pub mean_payoff: f64,
    pub std_payoff: f64,
    pub stderr_payoff: f64,
    pub mean_reveal_delay: f64,
    pub violations: usize,
    /// Mean of p_1[0] - p_0[0] over runs.
    pub root_increment: f64,
}

/// Rollouts over the seed list (in parallel, deterministic per seed).
pub fn monte_carlo(
    players: &Players,
    x0: &[f64],
    p0: &Belief,
    types: TypeSource,
    seeds: &[u64],
) -> Result<(MonteCarloSummary, Vec<TrajectoryRecord>)> {
    let records: Vec<TrajectoryRecord> = seeds
        .par_iter()
        .map(|&s| rollout(players, x0, p0, types, s))
        .collect::<Result<_>>()?;
    let n = records.len().max(1) as f64;
    let mean = records.iter().map(|r| r.payoff).sum::<f64>() / n;
    let var = if records.len() > 1 {
        records.iter().map(|r| (r.payoff - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let root_increment = records
        .iter()
        .map(|r| r.beliefs.get(1).map(|b| b[0] - r.beliefs[0][0]).unwrap_or(0.0))
        .sum::<f64>()
        / n;
    let summary = MonteCarloSummary {
        runs: records.len(),
        mean_payoff: mean,
        std_payoff: var.sqrt(),
        stderr_payoff: (var / n).sqrt(),
        mean_reveal_delay: reveal_delay(&records),
        violations: records.iter().filter(|r| r.violated).count(),
        root_increment,
    };
    Ok((summary, records))
}

/// Convexification gap over the belief lattice at (t_k, x); zero at hull vertices.
pub fn advantage_row(players: &Players, k: usize, x: &[f64]) -> Result<Vec<f64>> {
    let (row, _) = players.p1_stage(k, x)?;
    let hull = lower_hull_1d(&players.spec.belief.points(), &row.values)?;
    Ok(row.values.iter().zip(hull.values()).map(|(s, h)| s - h).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::dual_solve;
    use crate::games::beer_quiche_spec;
    use crate::primal::solve;

    #[test]
    fn quiche_rollout_is_reproducible() {
        let spec = beer_quiche_spec().unwrap();
        let t = solve(&spec).unwrap();
        let c = dual_solve(&spec).unwrap();
        let pl = Players::new(&spec, &t, Some(&c));
        let a = rollout(&pl, &[0.0], &spec.prior, TypeSource::Fixed(1), 7).unwrap();
        let b = rollout(&pl, &[0.0], &spec.prior, TypeSource::Fixed(1), 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.states.len(), 3);
        assert!((a.recomputed_payoff(spec.cap) - a.payoff).abs() < 1e-12);
    }

    #[test]
    fn quiche_advantage_at_root() {
        let spec = beer_quiche_spec().unwrap();
        let t = solve(&spec).unwrap();
        let pl = Players::new(&spec, &t, None);
        let a = advantage(&pl, 0, &[0.0], &spec.prior).unwrap();
        assert!((a - 1.0 / 6.0).abs() < 1e-12);
        let v = advantage(&pl, 0, &[0.0], &Belief::binary(0.9).unwrap()).unwrap();
        assert!(v.abs() < 1e-12);
    }
}
