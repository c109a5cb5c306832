//! Benchmark fixtures.

use osig_core::games::{corridor, CorridorParams};
use osig_core::{GameSpec, Grid};

/// Corridor game with `nodes` per axis and a 25-node dual lattice.
pub fn corridor_spec(nodes: usize, steps: usize) -> GameSpec {
    let dual = Grid::uniform(2, -3.0, 3.0, 5).unwrap();
    corridor(&CorridorParams {
        nodes,
        steps,
        effort_u: 0.1,
        effort_v: 0.05,
        dual: Some(dual),
        ..CorridorParams::default()
    })
    .unwrap()
}

/// Nonconvex samples on an `n` x `n` grid over [-1, 1]^2.
pub fn bumpy_surface(n: usize) -> (Grid, Vec<f64>) {
    let grid = Grid::uniform(2, -1.0, 1.0, n).unwrap();
    let samples = (0..grid.len())
        .map(|i| {
            let x = grid.coords(i);
            (3.0 * x[0]).sin() * (2.0 * x[1]).cos() + 0.5 * (x[0] * x[0] + x[1] * x[1])
        })
        .collect();
    (grid, samples)
}
