//! Builders for the reference games.

use crate::belief::{Belief, BeliefGrid};
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::game::{ActionSet, ConstraintFn, GameSpec, RunningFn, StateSpace, TerminalFn};
use crate::lattice::Grid;
use crate::time::TimeGrid;
use std::sync::Arc;

/// Sign convention of a payoff table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// Player 1 minimizes (the solver convention).
    Minimizer,
    /// Player 1 maximizes.
    Maximizer,
}

impl Convention {
    /// Map a solver value into this convention.
    pub fn value(self, v: f64) -> f64 {
        match self {
            Convention::Minimizer => v,
            Convention::Maximizer => -v,
        }
    }

    /// Map a solver dual vector into this convention.
    pub fn dual(self, p: &[f64]) -> Vec<f64> {
        p.iter().map(|&x| self.value(x)).collect()
    }
}

/// Indices of position coordinates within a state vector.
fn positions(dynamics: &Dynamics, du: usize, dv: usize) -> (Vec<usize>, Vec<usize>) {
    match dynamics {
        Dynamics::DoubleIntegrator => ((0..du).map(|a| 2 * a).collect(), (0..dv).map(|a| 2 * (du + a)).collect()),
        _ => ((0..du).collect(), (du..du + dv).collect()),
    }
}

/// g_i(x) = w |pos1 - z_i|^2 - w |pos2 - z_i|^2.
pub fn targets_terminal(dynamics: &Dynamics, du: usize, dv: usize, targets: Vec<Vec<f64>>, weight: f64) -> TerminalFn {
    let (p1, p2) = positions(dynamics, du, dv);
    Arc::new(move |i: usize, x: &[f64]| {
        let z = &targets[i];
        let d1: f64 = p1.iter().zip(z).map(|(&k, zk)| (x[k] - zk).powi(2)).sum();
        let d2: f64 = p2.iter().zip(z).map(|(&k, zk)| (x[k] - zk).powi(2)).sum();
        weight * (d1 - d2)
    })
}

/// c(x) = r - |pos1 - pos2|.
pub fn separation_constraint(dynamics: &Dynamics, du: usize, dv: usize, radius: f64) -> ConstraintFn {
    let (p1, p2) = positions(dynamics, du, dv);
    Arc::new(move |x: &[f64]| {
        let d: f64 = p1.iter().zip(&p2).map(|(&a, &b)| (x[a] - x[b]).powi(2)).sum();
        radius - d.sqrt()
    })
}

/// l(u, v) = wu |u|^2 - wv |v|^2, identical for every type.
pub fn effort_running(wu: f64, wv: f64) -> RunningFn {
    Arc::new(move |_i, _t, u: &[f64], v: &[f64]| {
        wu * u.iter().map(|a| a * a).sum::<f64>() - wv * v.iter().map(|a| a * a).sum::<f64>()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorridorParams {
    pub nodes: usize,
    pub bound: f64,
    pub speed_u: f64,
    pub speed_v: f64,
    pub target: f64,
    pub radius: f64,
    pub effort_u: f64,
    pub effort_v: f64,
    pub horizon: f64,
    pub steps: usize,
    pub belief_nodes: usize,
    pub prior: f64,
    pub cap: Option<f64>,
    pub dual: Option<Grid>,
}

impl Default for CorridorParams {
    fn default() -> Self {
        Self {
            nodes: 11,
            bound: 1.0,
            speed_u: 1.0,
            speed_v: 1.0,
            target: 0.6,
            radius: 0.05,
            effort_u: 0.0,
            effort_v: 0.0,
            horizon: 0.6,
            steps: 3,
            belief_nodes: 21,
            prior: 0.5,
            cap: None,
            dual: None,
        }
    }
}

/// Two players on a segment each; the informed one is rewarded for being
/// closer than its opponent to the type's target and must keep a
/// separation of at least `radius`.
pub fn corridor(p: &CorridorParams) -> Result<GameSpec> {
    let grid = Grid::uniform(2, -p.bound, p.bound, p.nodes)?;
    let dynamics = Dynamics::SingleIntegrator;
    let actions = ActionSet::scalar(&[-p.speed_u, 0.0, p.speed_u], &[-p.speed_v, 0.0, p.speed_v])?;
    let terminal = targets_terminal(&dynamics, 1, 1, vec![vec![-p.target], vec![p.target]], 1.0);
    let running = if p.effort_u != 0.0 || p.effort_v != 0.0 {
        Some(effort_running(p.effort_u, p.effort_v))
    } else {
        None
    };
    let constraint = Some(separation_constraint(&dynamics, 1, 1, p.radius));
    let mut spec = GameSpec {
        name: "corridor".into(),
        space: StateSpace::Lattice { grid, dynamics },
        actions,
        types: 2,
        terminal,
        running,
        constraint,
        time: TimeGrid::new(p.horizon, p.steps)?,
        prior: Belief::binary(p.prior)?,
        cap: 1.0,
        belief: BeliefGrid::new(p.belief_nodes)?,
        dual_lattice: p.dual.clone(),
    };
    spec.cap = match p.cap {
        Some(k) => k,
        None => auto_cap(&spec),
    };
    spec.validate()?;
    Ok(spec)
}

/// Cap comfortably above both primal and dual requirements.
pub fn auto_cap(spec: &GameSpec) -> f64 {
    let need = spec.dual_bound().unwrap_or_else(|| spec.payoff_bound());
    (2.0 * need + 1.0).ceil()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatelessParams {
    pub horizon: f64,
    pub steps: usize,
    pub actions: usize,
    pub belief_nodes: usize,
    pub prior: f64,
    pub dual: Option<Grid>,
}

impl Default for StatelessParams {
    fn default() -> Self {
        Self { horizon: 1.0, steps: 10, actions: 101, belief_nodes: 101, prior: 0.5, dual: None }
    }
}

/// Stateless reformulation: both players pick a scalar each step and pay
/// l_i = (u - theta_i)^2 d1(t) - (v - theta_i)^2 d2(t) with theta = (-1, 1).
pub fn stateless_targets(
    d1: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    d2: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    p: &StatelessParams,
) -> Result<GameSpec> {
    if p.actions < 2 {
        return Err(Error::Spec("need at least two actions".into()));
    }
    let acts: Vec<f64> = (0..p.actions).map(|j| 1.0 - 2.0 * j as f64 / (p.actions - 1) as f64).collect();
    let actions = ActionSet::scalar(&acts, &acts)?;
    let theta = [-1.0, 1.0];
    let running: RunningFn = Arc::new(move |i, t, u: &[f64], v: &[f64]| {
        (u[0] - theta[i]).powi(2) * d1(t) - (v[0] - theta[i]).powi(2) * d2(t)
    });
    let mut spec = GameSpec {
        name: "stateless_targets".into(),
        space: StateSpace::Graph { next: vec![vec![vec![0; p.actions]; p.actions]], labels: vec!["*".into()] },
        actions,
        types: 2,
        terminal: Arc::new(|_, _| 0.0),
        running: Some(running),
        constraint: None,
        time: TimeGrid::new(p.horizon, p.steps)?,
        prior: Belief::binary(p.prior)?,
        cap: 1.0,
        belief: BeliefGrid::new(p.belief_nodes)?,
        dual_lattice: p.dual.clone(),
    };
    spec.cap = auto_cap(&spec);
    spec.validate()?;
    Ok(spec)
}

/// Node labels of the quiche game tree.
pub const BEER_QUICHE_LABELS: [&str; 7] = ["root", "B", "Q", "B,b", "B,d", "Q,b", "Q,d"];

/// Payoffs to Player 1 when it maximizes: [tough, weak] x [Bb, Bd, Qb, Qd].
pub const BEER_QUICHE_PAYOFF: [[f64; 4]; 2] = [[2.0, 1.0, 1.0, 0.0], [-2.0, 0.0, -1.0, 2.0]];

/// Two-step quiche game on a history graph, stored in the minimizer convention.
/// Player 1 picks B/Q at the root, Player 2 picks bully/defer afterwards;
/// the off-turn player's action is ignored.
pub fn beer_quiche_spec() -> Result<GameSpec> {
    let mut next = vec![vec![vec![0usize; 2]; 2]; 7];
    for u in 0..2 {
        for v in 0..2 {
            next[0][u][v] = 1 + u;
            next[1][u][v] = 3 + v;
            next[2][u][v] = 5 + v;
            for leaf in 3..7 {
                next[leaf][u][v] = leaf;
            }
        }
    }
    let terminal: TerminalFn = Arc::new(|i, x: &[f64]| {
        let n = x[0] as usize;
        if (3..7).contains(&n) {
            -BEER_QUICHE_PAYOFF[i][n - 3]
        } else {
            0.0
        }
    });
    let spec = GameSpec {
        name: "beer_quiche".into(),
        space: StateSpace::Graph { next, labels: BEER_QUICHE_LABELS.iter().map(|s| s.to_string()).collect() },
        actions: ActionSet::scalar(&[0.0, 1.0], &[0.0, 1.0])?,
        types: 2,
        terminal,
        running: None,
        constraint: None,
        time: TimeGrid::new(2.0, 2)?,
        prior: Belief::new(vec![1.0 / 3.0, 2.0 / 3.0])?,
        cap: 10.0,
        belief: BeliefGrid::new(61)?,
        dual_lattice: Some(Grid::uniform(2, -6.0, 6.0, 25)?),
    };
    spec.validate()?;
    Ok(spec)
}
