use crate::belief::{Belief, BeliefGrid};
use crate::dynamics::{dynamics_step, Dynamics};
use crate::error::{Error, Result};
use crate::lattice::{Grid, Stencil};
use crate::time::TimeGrid;
use std::fmt;
use std::sync::Arc;

/// g_i(x): type index, state.
pub type TerminalFn = Arc<dyn Fn(usize, &[f64]) -> f64 + Send + Sync>;
/// l_i(t, u, v): type index, time, actions.
pub type RunningFn = Arc<dyn Fn(usize, f64, &[f64], &[f64]) -> f64 + Send + Sync>;
/// c(x); feasible where c(x) <= 0.
pub type ConstraintFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpace {
    /// Continuous state sampled on a lattice.
    Lattice { grid: Grid, dynamics: Dynamics },
    /// Finite state graph: `next[node][u][v]`. Node `n` is the state `[n]`.
    Graph { next: Vec<Vec<Vec<usize>>>, labels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl ActionSet {
    pub fn new(u: Vec<Vec<f64>>, v: Vec<Vec<f64>>) -> Result<Self> {
        if u.is_empty() || v.is_empty() {
            return Err(Error::Spec("action sets must be nonempty".into()));
        }
        let du = u[0].len();
        let dv = v[0].len();
        if u.iter().any(|a| a.len() != du) || v.iter().any(|a| a.len() != dv) {
            return Err(Error::Spec("actions within a set must share a dimension".into()));
        }
        if u.iter().chain(v.iter()).flatten().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("action set"));
        }
        Ok(Self { u, v })
    }

    /// Scalar actions for both players.
    pub fn scalar(u: &[f64], v: &[f64]) -> Result<Self> {
        Self::new(u.iter().map(|&a| vec![a]).collect(), v.iter().map(|&a| vec![a]).collect())
    }

    pub fn nu(&self) -> usize {
        self.u.len()
    }

    pub fn nv(&self) -> usize {
        self.v.len()
    }
}

/// One successor of (x, u, v).
#[derive(Debug, Clone, PartialEq)]
pub struct Successor {
    pub state: Vec<f64>,
    pub stencil: Stencil,
    pub nearest: usize,
    pub clipped: bool,
}

#[derive(Clone)]
pub struct GameSpec {
    pub name: String,
    pub space: StateSpace,
    pub actions: ActionSet,
    pub types: usize,
    pub terminal: TerminalFn,
    pub running: Option<RunningFn>,
    pub constraint: Option<ConstraintFn>,
    pub time: TimeGrid,
    pub prior: Belief,
    pub cap: f64,
    pub belief: BeliefGrid,
    pub dual_lattice: Option<Grid>,
}

impl fmt::Debug for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameSpec")
            .field("name", &self.name)
            .field("space", &self.space)
            .field("actions", &self.actions)
            .field("types", &self.types)
            .field("running", &self.running.is_some())
            .field("constraint", &self.constraint.is_some())
            .field("time", &self.time)
            .field("prior", &self.prior)
            .field("cap", &self.cap)
            .field("belief", &self.belief)
            .field("dual_lattice", &self.dual_lattice)
            .finish()
    }
}

/// Precomputed successors for every (node, u, v).
#[derive(Debug, Clone)]
pub struct Transitions {
    nu: usize,
    nv: usize,
    succ: Vec<Successor>,
}

impl Transitions {
    pub fn get(&self, node: usize, u: usize, v: usize) -> &Successor {
        &self.succ[(node * self.nu + u) * self.nv + v]
    }

    pub fn clip_count(&self) -> usize {
        self.succ.iter().filter(|s| s.clipped).count()
    }
}

impl GameSpec {
    pub fn n_states(&self) -> usize {
        match &self.space {
            StateSpace::Lattice { grid, .. } => grid.len(),
            StateSpace::Graph { next, .. } => next.len(),
        }
    }

    pub fn state(&self, node: usize) -> Vec<f64> {
        match &self.space {
            StateSpace::Lattice { grid, .. } => grid.coords(node),
            StateSpace::Graph { .. } => vec![node as f64],
        }
    }

    pub fn grid(&self) -> Option<&Grid> {
        match &self.space {
            StateSpace::Lattice { grid, .. } => Some(grid),
            StateSpace::Graph { .. } => None,
        }
    }

    pub fn tau(&self) -> f64 {
        self.time.tau()
    }

    pub fn steps(&self) -> usize {
        self.time.steps()
    }

    pub fn g(&self, i: usize, x: &[f64]) -> f64 {
        (self.terminal)(i, x)
    }

    pub fn c(&self, x: &[f64]) -> f64 {
        match &self.constraint {
            Some(c) => c(x),
            None => -1.0,
        }
    }

    pub fn feasible_state(&self, x: &[f64]) -> bool {
        self.c(x) <= 0.0
    }

    /// l_i at t_k for action indices.
    pub fn running(&self, i: usize, k: usize, u: usize, v: usize) -> f64 {
        match &self.running {
            Some(l) => l(i, self.time.t(k), &self.actions.u[u], &self.actions.v[v]),
            None => 0.0,
        }
    }

    pub fn has_running(&self) -> bool {
        self.running.is_some()
    }

    /// Graph node or lattice nearest node of a state.
    pub fn node_of(&self, x: &[f64]) -> Result<usize> {
        match &self.space {
            StateSpace::Lattice { grid, .. } => {
                if !grid.contains(x) {
                    return Err(Error::OutOfDomain(format!("state {x:?} outside lattice")));
                }
                Ok(grid.nearest(x))
            }
            StateSpace::Graph { next, .. } => {
                let n = x.first().copied().unwrap_or(-1.0);
                if n < 0.0 || n.fract() != 0.0 || n as usize >= next.len() {
                    return Err(Error::OutOfDomain(format!("graph state {x:?}")));
                }
                Ok(n as usize)
            }
        }
    }

    pub fn successor(&self, x: &[f64], u: usize, v: usize) -> Result<Successor> {
        match &self.space {
            StateSpace::Lattice { grid, dynamics } => {
                let (state, clipped) =
                    dynamics_step(dynamics, x, &self.actions.u[u], &self.actions.v[v], self.tau(), Some(grid))?;
                let stencil = grid.stencil(&state);
                let nearest = grid.nearest(&state);
                Ok(Successor { state, stencil, nearest, clipped })
            }
            StateSpace::Graph { next, .. } => {
                let n = self.node_of(x)?;
                let m = next[n][u][v];
                Ok(Successor { state: vec![m as f64], stencil: vec![(m, 1.0)], nearest: m, clipped: false })
            }
        }
    }

    pub fn transitions(&self) -> Result<Transitions> {
        let (nu, nv) = (self.actions.nu(), self.actions.nv());
        let mut succ = Vec::with_capacity(self.n_states() * nu * nv);
        for node in 0..self.n_states() {
            let x = self.state(node);
            for u in 0..nu {
                for v in 0..nv {
                    succ.push(self.successor(&x, u, v)?);
                }
            }
        }
        Ok(Transitions { nu, nv, succ })
    }

    /// max_i max_x |g_i(x)| over the state nodes.
    pub fn max_abs_terminal(&self) -> f64 {
        let mut m: f64 = 0.0;
        for node in 0..self.n_states() {
            let x = self.state(node);
            for i in 0..self.types {
                m = m.max(self.g(i, &x).abs());
            }
        }
        m
    }

    /// max |l_i(t_k, u, v)| over the grid.
    pub fn max_abs_running(&self) -> f64 {
        if self.running.is_none() {
            return 0.0;
        }
        let mut m: f64 = 0.0;
        for k in 0..self.steps() {
            for i in 0..self.types {
                for u in 0..self.actions.nu() {
                    for v in 0..self.actions.nv() {
                        m = m.max(self.running(i, k, u, v).abs());
                    }
                }
            }
        }
        m
    }

    /// Smallest admissible cap for the primal tables.
    pub fn payoff_bound(&self) -> f64 {
        self.max_abs_terminal() + self.time.horizon() * self.max_abs_running()
    }

    pub fn validate(&self) -> Result<()> {
        if self.types < 2 {
            return Err(Error::Spec("at least two types are required".into()));
        }
        if self.prior.len() != self.types {
            return Err(Error::Spec(format!(
                "prior has {} entries for {} types",
                self.prior.len(),
                self.types
            )));
        }
        match &self.space {
            StateSpace::Lattice { grid, dynamics } => {
                dynamics.check(grid.dim(), self.actions.u[0].len(), self.actions.v[0].len())?;
            }
            StateSpace::Graph { next, labels } => {
                if next.is_empty() {
                    return Err(Error::Spec("graph has no nodes".into()));
                }
                if !labels.is_empty() && labels.len() != next.len() {
                    return Err(Error::Spec("graph labels do not match node count".into()));
                }
                for row in next {
                    if row.len() != self.actions.nu() || row.iter().any(|r| r.len() != self.actions.nv()) {
                        return Err(Error::Spec("graph transition table does not match action sets".into()));
                    }
                    if row.iter().flatten().any(|&m| m >= next.len()) {
                        return Err(Error::Spec("graph transition points outside the node set".into()));
                    }
                }
            }
        }
        let bound = self.payoff_bound();
        if !bound.is_finite() {
            return Err(Error::NonFinite("payoffs"));
        }
        if !(self.cap.is_finite() && self.cap > bound) {
            return Err(Error::Spec(format!(
                "cap K = {} must exceed max|g| + T max|l| = {bound}",
                self.cap
            )));
        }
        if let Some(d) = &self.dual_lattice {
            if d.dim() != self.types {
                return Err(Error::Spec("dual lattice dimension must equal the type count".into()));
            }
        }
        Ok(())
    }

    /// Cap requirement for the conjugate tables.
    pub fn dual_bound(&self) -> Option<f64> {
        let d = self.dual_lattice.as_ref()?;
        let m = d.lo().iter().chain(d.hi()).fold(0.0f64, |a, b| a.max(b.abs()));
        Some(m + self.payoff_bound())
    }
}
