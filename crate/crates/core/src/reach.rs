use crate::error::{Error, Result};
use crate::game::{GameSpec, Transitions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Per-timestep feasibility over state nodes (true = feasible).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityMask {
    pub masks: Vec<Vec<bool>>,
}

impl FeasibilityMask {
    pub fn at(&self, k: usize) -> &[bool] {
        &self.masks[k]
    }

    pub fn steps(&self) -> usize {
        self.masks.len() - 1
    }

    pub fn infeasible_count(&self, k: usize) -> usize {
        self.masks[k].iter().filter(|m| !**m).count()
    }
}

pub fn terminal_mask(spec: &GameSpec) -> Vec<bool> {
    (0..spec.n_states()).map(|n| spec.feasible_state(&spec.state(n))).collect()
}

/// Node is infeasible iff c(x) > 0, or every u admits a v whose successor
/// is infeasible at the next step. `conservative` treats a successor as
/// infeasible when any surrounding cell corner is.
pub fn backup_mask(spec: &GameSpec, trans: &Transitions, next: &[bool], conservative: bool) -> Vec<bool> {
    let (nu, nv) = (spec.actions.nu(), spec.actions.nv());
    (0..spec.n_states())
        .into_par_iter()
        .map(|n| {
            if !spec.feasible_state(&spec.state(n)) {
                return false;
            }
            let forced = (0..nu).all(|u| {
                (0..nv).any(|v| {
                    let s = trans.get(n, u, v);
                    match (conservative, spec.grid()) {
                        (true, Some(g)) => g.cell_corners(&s.state).iter().any(|&m| !next[m]),
                        _ => !next[s.nearest],
                    }
                })
            });
            !forced
        })
        .collect()
}

pub fn compute_masks(spec: &GameSpec, trans: &Transitions, conservative: bool) -> FeasibilityMask {
    let l = spec.steps();
    let mut masks = vec![Vec::new(); l + 1];
    masks[l] = terminal_mask(spec);
    for k in (0..l).rev() {
        masks[k] = backup_mask(spec, trans, &masks[k + 1], conservative);
    }
    FeasibilityMask { masks }
}

/// Nearest-node lookup of the mask at step k.
pub fn is_feasible(spec: &GameSpec, mask: &FeasibilityMask, k: usize, x: &[f64]) -> Result<bool> {
    if k >= mask.masks.len() {
        return Err(Error::OutOfDomain(format!("time index {k} beyond the horizon")));
    }
    Ok(mask.masks[k][spec.node_of(x)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{corridor, CorridorParams};

    #[test]
    fn corridor_terminal_examples() {
        let spec = corridor(&CorridorParams { radius: 0.05, ..Default::default() }).unwrap();
        let m = terminal_mask(&spec);
        let g = spec.grid().unwrap();
        assert!(m[g.nearest(&[0.5, -0.5])]);
        assert!(!m[g.nearest(&[0.0, 0.0])]);
    }

    #[test]
    fn absorbing_extremes() {
        let spec = corridor(&CorridorParams { radius: 0.05, ..Default::default() }).unwrap();
        let trans = spec.transitions().unwrap();
        let n = spec.n_states();
        let all_bad = backup_mask(&spec, &trans, &vec![false; n], false);
        assert!(all_bad.iter().all(|m| !m));
        let free = corridor(&CorridorParams { radius: -1.0, ..Default::default() }).unwrap();
        let t2 = free.transitions().unwrap();
        let all_ok = backup_mask(&free, &t2, &vec![true; n], false);
        assert!(all_ok.iter().all(|m| *m));
    }

    #[test]
    fn monotone_and_conservative() {
        let spec = corridor(&CorridorParams { radius: 0.25, speed_u: 1.0, speed_v: 2.0, ..Default::default() }).unwrap();
        let trans = spec.transitions().unwrap();
        let m = compute_masks(&spec, &trans, false);
        let tighter: Vec<bool> = m.masks[1].iter().enumerate().map(|(i, f)| *f && i % 3 != 0).collect();
        let back = backup_mask(&spec, &trans, &tighter, false);
        for n in 0..spec.n_states() {
            assert!(!(back[n] && !m.masks[0][n]), "monotone in the next-step mask");
        }
        let c = compute_masks(&spec, &trans, true);
        for k in 0..=spec.steps() {
            for n in 0..spec.n_states() {
                assert!(!(c.masks[k][n] && !m.masks[k][n]), "conservative must be a subset");
            }
        }
    }
}
