//! Independent reference solutions used to check the solvers.

pub mod beer_quiche;
pub mod brute_force;
pub mod stateless;
pub mod reach_tree;
pub mod riccati;

pub use beer_quiche::BeerQuiche;
pub use brute_force::{brute_force_value, BruteForce};
pub use stateless::StatelessGame;
pub use reach_tree::{infeasible_by_search, search_masks};
pub use riccati::{critical_time, football, riccati_integrate, RiccatiSolution};
