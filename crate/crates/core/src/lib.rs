//! Backward induction solvers for finite-horizon zero-sum games with
//! one-sided information and state constraints.
//!
//! Player 1 knows its type and minimizes; Player 2 maximizes and only
//! knows the prior. Primal tables live on (state lattice x belief lattice),
//! conjugate tables on (state lattice x dual-vector lattice).

pub mod belief;
pub mod convex;
pub mod dual;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod games;
pub mod lattice;
pub mod oracles;
pub mod primal;
pub mod reach;
pub mod sim;
pub mod strategy;
pub mod time;

pub use belief::{belief_project, Belief, BeliefGrid};
pub use convex::{lower_hull_1d, lower_hull_2d, vex_error_bound, Hull1d, Hull2d, HullFace, SplitPlan};
pub use dual::{dual_solve, init_dual, ConjugateTable, DualVector, ShiftPolicy};
pub use dynamics::{dynamics_step, Dynamics};
pub use error::{Error, Result};
pub use game::{ActionSet, GameSpec, StateSpace, Transitions};
pub use lattice::Grid;
pub use primal::{solve, ValueTable};
pub use reach::FeasibilityMask;
pub use time::TimeGrid;
