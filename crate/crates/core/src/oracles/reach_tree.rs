use crate::error::Result;
use crate::game::GameSpec;
use crate::reach::FeasibilityMask;

/// Depth-first game-tree search: infeasible at step k iff c(x) > 0 or every
/// u admits a v after which the (node-snapped) successor is infeasible.
pub fn infeasible_by_search(spec: &GameSpec, k: usize, x: &[f64]) -> Result<bool> {
    if spec.c(x) > 0.0 {
        return Ok(true);
    }
    if k >= spec.steps() {
        return Ok(false);
    }
    for u in 0..spec.actions.nu() {
        let mut caught = false;
        for v in 0..spec.actions.nv() {
            let s = spec.successor(x, u, v)?;
            let snapped = spec.state(s.nearest);
            if infeasible_by_search(spec, k + 1, &snapped)? {
                caught = true;
                break;
            }
        }
        if !caught {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Feasibility of every node at every step by independent searches.
pub fn search_masks(spec: &GameSpec) -> Result<FeasibilityMask> {
    let masks = (0..=spec.steps())
        .map(|k| {
            (0..spec.n_states())
                .map(|n| infeasible_by_search(spec, k, &spec.state(n)).map(|b| !b))
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeasibilityMask { masks })
}
