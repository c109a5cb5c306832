//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use osig_core::convex::lower_hull_1d;
use osig_core::dual::dual_solve;
use osig_core::games::{beer_quiche_spec, corridor, stateless_targets, Convention, CorridorParams, StatelessParams};
use osig_core::oracles::{brute_force_value, critical_time, football, search_masks, BeerQuiche, StatelessGame};
use osig_core::primal::solve;
use osig_core::reach::compute_masks;
use osig_core::sim::{monte_carlo, TypeSource};
use osig_core::strategy::{P1Decision, Players};
use osig_core::{init_dual, lower_hull_2d, Belief, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: Vec<(&str, Duration, Check)> = vec![
        ("1 beer-quiche primal exactness", Duration::from_secs(1), c1_quiche_primal),
        ("2 beer-quiche dual", Duration::from_secs(1), c2_quiche_dual),
        ("3 critical time", Duration::from_secs(5), c3_critical_time),
        ("4 stateless convergence", Duration::from_secs(30), c4_stateless),
        ("5 brute-force equivalence", Duration::from_secs(120), c5_brute_force),
        ("6 lattice refinement", Duration::from_secs(10), c6_refinement),
        ("7 martingale and payoff", Duration::from_secs(10), c7_martingale),
        ("8 reachability oracle", Duration::from_secs(30), c8_reach),
        ("9 property suites", Duration::from_secs(120), c9_properties),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let pass = out.pass && took <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {name}: {} ({:.2}s, budget {}s)",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn c1_quiche_primal() -> Outcome {
    let spec = beer_quiche_spec().unwrap();
    let table = solve(&spec).unwrap();
    let v = Convention::Minimizer.value(table.value_at(&spec, 0, &[0.0], &spec.prior).unwrap());
    let target = BeerQuiche::new(1.0 / 3.0).value_in(Convention::Minimizer);
    let err_v = (v - target).abs();
    let players = Players::new(&spec, &table, None);
    let d = players.p1_decision(0, &[0.0], &spec.prior).unwrap();
    let P1Decision::Split { branches } = &d else {
        return outcome(false, "root decision is a resignation".into());
    };
    let mut split: Vec<(f64, f64)> = branches.iter().map(|b| (b.posterior[0], b.weight)).collect();
    split.sort_by(|a, b| a.0.total_cmp(&b.0));
    let split_ok = split.len() == 2
        && (split[0].0 - 0.0).abs() < 1e-9
        && (split[1].0 - 2.0 / 3.0).abs() < 1e-9
        && split.iter().all(|s| (s.1 - 0.5).abs() < 1e-9);
    let tough = d.action_probs(&spec.prior, 0, 2).unwrap();
    let weak = d.action_probs(&spec.prior, 1, 2).unwrap();
    let err_c = (tough[0] - 1.0).abs().max((weak[1] - 0.75).abs());
    outcome(
        err_v <= 1e-9 && split_ok && err_c <= 1e-9,
        format!("|V - 1/6| = {err_v:.1e}, split {split:?}, conditional error {err_c:.1e}"),
    )
}

fn c2_quiche_dual() -> Outcome {
    let spec = beer_quiche_spec().unwrap();
    let table = solve(&spec).unwrap();
    let conj = dual_solve(&spec).unwrap();
    let d = init_dual(&spec, &table, &[0.0], &spec.prior).unwrap();
    let m = Convention::Maximizer.dual(&d.entries);
    let err_d = (m[0] - 1.5).abs().max((m[1] + 1.0).abs());
    let players = Players::new(&spec, &table, Some(&conj));
    let after_b = players.p2_decision(1, &[1.0], &d.entries).unwrap().action_probs(2);
    let after_q = players.p2_decision(1, &[2.0], &d.entries).unwrap().action_probs(2);
    let err_b = (after_b[0] - 0.5).abs().max((after_b[1] - 0.5).abs());
    let err_q = (after_q[0] - 1.0).abs();
    outcome(
        err_d <= 1e-9 && err_b <= 1e-9 && err_q <= 1e-9,
        format!("dual {m:?}, bully after B {:.6}, bully after Q {:.6}", after_b[0], after_q[0]),
    )
}

fn c3_critical_time() -> Outcome {
    let step = 1e-3;
    let (s1, s2) = football::solve(football::TERMINAL_WEIGHT, step).unwrap();
    let tr = critical_time(&s1.d, &s2.d, &s1.times);
    outcome((tr - 0.4).abs() <= step + 1e-12, format!("t_r = {tr:.4} (target 0.4 +- {step})"))
}

fn stateless_oracle() -> StatelessGame {
    let (s1, s2) = football::solve(football::TERMINAL_WEIGHT, 1e-3).unwrap();
    StatelessGame::new(Arc::new(move |t| s1.d_at(t)), Arc::new(move |t| s2.d_at(t)), 1.0, 2000).unwrap()
}

fn c4_stateless() -> Outcome {
    let oracle = Arc::new(stateless_oracle());
    let d0 = oracle.dtilde_at(0.0).abs();
    let mut errors = Vec::new();
    let mut splits = Vec::new();
    let mut split_ok = true;
    for steps in [10, 20, 40] {
        let (s1, s2) = football::solve(football::TERMINAL_WEIGHT, 1e-3).unwrap();
        let spec = stateless_targets(
            Arc::new(move |t| s1.d_at(t)),
            Arc::new(move |t| s2.d_at(t)),
            &StatelessParams { steps, ..Default::default() },
        )
        .unwrap();
        let table = solve(&spec).unwrap();
        let mut err: f64 = 0.0;
        for k in 0..=steps {
            let t = spec.time.t(k);
            for (b, p) in spec.belief.points().into_iter().enumerate() {
                err = err.max((table.get(k, 0, b) - oracle.value(t, p)).abs());
            }
        }
        errors.push(err);
        let players = Players::new(&spec, &table, None);
        let half = Belief::binary(0.5).unwrap();
        let first = (0..steps).find(|&k| match players.p1_decision(k, &[0.0], &half).unwrap() {
            P1Decision::Split { branches } => branches.len() > 1,
            P1Decision::Resign { .. } => false,
        });
        let expect = oracle.split_step(steps);
        split_ok &= first == Some(expect);
        splits.push((first, expect));
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let final_ok = errors[2] <= 0.05 * d0;
    outcome(
        monotone && final_ok && split_ok,
        format!(
            "max errors {:?} (limit {:.3e} at L=40), first split (solver, expected) {splits:?}",
            errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>(),
            0.05 * d0
        ),
    )
}

fn random_corridor(rng: &mut ChaCha8Rng) -> CorridorParams {
    let horizon = [0.6, 0.9][rng.gen_range(0..2)];
    let tau = horizon / 3.0;
    // speeds that move an integer number of 0.2-wide cells per step
    let cells = |rng: &mut ChaCha8Rng| rng.gen_range(1..=2) as f64 * 0.2 / tau;
    CorridorParams {
        nodes: 11,
        speed_u: cells(rng),
        speed_v: cells(rng),
        target: rng.gen_range(0.2..0.9),
        radius: rng.gen_range(0.05..0.35),
        effort_u: rng.gen_range(0.0..0.5),
        effort_v: rng.gen_range(0.0..0.5),
        horizon,
        steps: 3,
        belief_nodes: 21,
        prior: 0.5,
        ..Default::default()
    }
}

fn c5_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_ratio: f64 = 0.0;
    let mut off: f64 = 0.0;
    let mut fails = 0;
    for _ in 0..20 {
        let params = random_corridor(&mut rng);
        let spec = corridor(&params).unwrap();
        let table = solve(&spec).unwrap();
        let g = spec.grid().unwrap().clone();
        let node = loop {
            let n = rng.gen_range(0..g.len());
            if spec.feasible_state(&g.coords(n)) {
                break n;
            }
        };
        let x0 = g.coords(node);
        let bf = brute_force_value(&spec, &x0, 10).unwrap();
        // tree states within the stencil snapping distance of a node read that
        // node exactly, so they contribute no state-interpolation slack
        off = off.max(bf.off_lattice);
        let slack = if bf.off_lattice <= 1e-9 { 0.0 } else { f64::INFINITY };
        let tol = 2.0 * spec.belief.spacing() * bf.lipschitz_p + slack;
        let mut err: f64 = 0.0;
        for (b, p) in spec.belief.points().into_iter().enumerate() {
            err = err.max((table.get(0, node, b) - bf.value_at(p)).abs());
        }
        if err > tol + 1e-12 {
            fails += 1;
        }
        worst_ratio = worst_ratio.max(err / tol.max(1e-300));
    }
    outcome(fails == 0, format!("{fails}/20 games outside tolerance, worst error/tolerance {worst_ratio:.3}, max off-lattice distance {off:.1e}"))
}

fn c6_refinement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let grid = |n: usize| (0..=n).map(|j| j as f64 / n as f64).collect::<Vec<_>>();
    let (coarse, fine, reference) = (20, 40, 400);
    let (mut halving, mut bound) = (0, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let terms: Vec<(f64, f64, f64)> = (0..4)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.5..3.0), rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let f = |p: f64| -> f64 { terms.iter().map(|(a, w, ph)| a * (std::f64::consts::TAU * w * p + ph).sin()).sum() };
        let lip: f64 = terms.iter().map(|(a, w, _)| a.abs() * std::f64::consts::TAU * w).sum();
        let xr = grid(reference);
        let href = lower_hull_1d(&xr, &xr.iter().map(|&p| f(p)).collect::<Vec<_>>()).unwrap();
        let err = |n: usize| -> f64 {
            let xs = grid(n);
            let h = lower_hull_1d(&xs, &xs.iter().map(|&p| f(p)).collect::<Vec<_>>()).unwrap();
            xr.iter().zip(href.values()).map(|(&p, r)| (h.eval(p).unwrap() - r).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(coarse), err(fine));
        if e2 > e1 / 2.0 + 1e-12 {
            halving += 1;
        }
        if e1 > 2.0 * lip / coarse as f64 || e2 > 2.0 * lip / fine as f64 {
            bound += 1;
        }
        if e1 > 1e-12 {
            worst = worst.max(e2 / e1);
        }
    }
    outcome(
        halving == 0 && bound == 0,
        format!("halving fails for {halving}/50 functions (worst err(d/2)/err(d) = {worst:.3}), 2dL bound fails for {bound}/50"),
    )
}

fn c7_martingale() -> Outcome {
    let spec = beer_quiche_spec().unwrap();
    let table = solve(&spec).unwrap();
    let conj = dual_solve(&spec).unwrap();
    let players = Players::new(&spec, &table, Some(&conj));
    let n = 10_000u64;
    let seeds: Vec<u64> = (0..n).collect();
    let (summary, _) = monte_carlo(&players, &[0.0], &spec.prior, TypeSource::Sampled, &seeds).unwrap();
    let inc_tol = 4.0 * (0.25 / n as f64).sqrt();
    let mean = Convention::Maximizer.value(summary.mean_payoff);
    let ok = summary.root_increment.abs() <= inc_tol && (mean + 1.0 / 6.0).abs() <= 3.0 * summary.stderr_payoff;
    outcome(
        ok,
        format!(
            "root increment {:.4} (limit {inc_tol:.3}), mean payoff {mean:.4} +- {:.4} vs -1/6",
            summary.root_increment, summary.stderr_payoff
        ),
    )
}

fn c8_reach() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut mismatches = 0;
    let mut infeasible = 0;
    for _ in 0..10 {
        let params = CorridorParams {
            nodes: [5, 7, 9, 11][rng.gen_range(0..4)],
            speed_u: rng.gen_range(0.3..1.5),
            speed_v: rng.gen_range(0.3..1.5),
            radius: rng.gen_range(0.05..0.6),
            horizon: rng.gen_range(0.3..0.9),
            steps: rng.gen_range(2..=3),
            belief_nodes: 3,
            ..Default::default()
        };
        let spec = corridor(&params).unwrap();
        let trans = spec.transitions().unwrap();
        let fast = compute_masks(&spec, &trans, false);
        let slow = search_masks(&spec).unwrap();
        infeasible += fast.infeasible_count(0);
        if fast != slow {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches}/10 instances differ ({infeasible} infeasible root nodes in total)"))
}

fn convex_rows_primal(values: &[Vec<f64>], nb: usize, xs: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for row in values.iter().flat_map(|v| v.chunks(nb)) {
        let h = lower_hull_1d(xs, row).unwrap();
        for (a, b) in row.iter().zip(h.values()) {
            worst = worst.max(a - b);
        }
    }
    worst
}

fn convex_rows_dual(values: &[Vec<f64>], grid: &Grid) -> f64 {
    let mut worst: f64 = 0.0;
    for row in values.iter().flat_map(|v| v.chunks(grid.len())) {
        let h = lower_hull_2d(grid, row).unwrap();
        for (a, b) in row.iter().zip(h.values()) {
            worst = worst.max(a - b);
        }
    }
    worst
}

fn c9_properties() -> Outcome {
    let dual = Grid::uniform(2, -3.0, 3.0, 25).unwrap();
    let params = CorridorParams { effort_u: 0.2, effort_v: 0.1, dual: Some(dual.clone()), ..Default::default() };
    let spec = corridor(&params).unwrap();
    let table = solve(&spec).unwrap();
    let conj = dual_solve(&spec).unwrap();
    let ps = spec.belief.points();
    let nb = spec.belief.nodes;

    // convexity after every backup
    let quiche = beer_quiche_spec().unwrap();
    let qt = solve(&quiche).unwrap();
    let qc = dual_solve(&quiche).unwrap();
    let convex_gap = convex_rows_primal(&table.values, nb, &ps)
        .max(convex_rows_primal(&qt.values, quiche.belief.nodes, &quiche.belief.points()))
        .max(convex_rows_dual(&conj.values, &dual))
        .max(convex_rows_dual(&qc.values, &qc.grid));

    // Fenchel inequality on feasible states
    let mut lip: f64 = 1.0;
    for k in 0..=spec.steps() {
        for n in 0..spec.n_states() {
            if !table.masks.at(k)[n] {
                continue;
            }
            for w in table.row(k, n).windows(2) {
                lip = lip.max((w[1] - w[0]).abs() / spec.belief.spacing());
            }
        }
    }
    let tol = 4.0 * spec.belief.spacing().max(dual.max_spacing()) * lip;
    let mut fenchel_violation: f64 = 0.0;
    let mut equality_gap: f64 = 0.0;
    let dual_points: Vec<Vec<f64>> = (0..dual.len()).map(|j| dual.coords(j)).collect();
    for k in 0..=spec.steps() {
        for n in 0..spec.n_states() {
            if !table.masks.at(k)[n] {
                continue;
            }
            let vr = table.row(k, n);
            let cr = conj.row(k, n);
            for (b, &p) in ps.iter().enumerate() {
                for (j, h) in dual_points.iter().enumerate() {
                    let lhs = h[0] * p + h[1] * (1.0 - p) - vr[b];
                    fenchel_violation = fenchel_violation.max(lhs - cr[j]);
                }
            }
        }
    }
    let x0 = spec.grid().unwrap().coords(0);
    let root = spec.node_of(&x0).unwrap();
    for (b, &p) in ps.iter().enumerate() {
        if !table.masks.at(0)[root] {
            break;
        }
        let bel = Belief::binary(p).unwrap();
        let h = init_dual(&spec, &table, &x0, &bel).unwrap().entries;
        if dual.contains(&h) {
            let c = conj.value_at(&spec, 0, &x0, &h).unwrap();
            equality_gap = equality_gap.max((c - (h[0] * p + h[1] * (1.0 - p) - table.get(0, root, b))).abs());
        }
    }

    // complete-information reduction at p in {0, 1}
    let masks = search_masks(&spec).unwrap();
    let (nu, nv) = (spec.actions.nu(), spec.actions.nv());
    let mut reduction_gap: f64 = 0.0;
    for (i, b) in [(1usize, 0usize), (0, nb - 1)] {
        let mut w: Vec<f64> = (0..spec.n_states())
            .map(|n| {
                let x = spec.state(n);
                if spec.feasible_state(&x) { spec.g(i, &x) } else { spec.cap }
            })
            .collect();
        for k in (0..spec.steps()).rev() {
            let next = w.clone();
            for (n, slot) in w.iter_mut().enumerate() {
                if !masks.at(k)[n] {
                    *slot = spec.cap;
                    continue;
                }
                let x = spec.state(n);
                let mut best = f64::INFINITY;
                for u in 0..nu {
                    let mut worst = f64::NEG_INFINITY;
                    for v in 0..nv {
                        let s = spec.successor(&x, u, v).unwrap();
                        let cont: f64 = s.stencil.iter().map(|(m, c)| c * next[*m]).sum();
                        worst = worst.max(cont + spec.tau() * spec.running(i, k, u, v));
                    }
                    best = best.min(worst);
                }
                *slot = best;
            }
            for n in 0..spec.n_states() {
                reduction_gap = reduction_gap.max((table.get(k, n, b) - w[n]).abs());
            }
        }
    }

    let ok = convex_gap <= 1e-9 && fenchel_violation <= tol && equality_gap <= tol && reduction_gap == 0.0;
    outcome(
        ok,
        format!(
            "convexity gap {convex_gap:.1e}, Fenchel violation {fenchel_violation:.2e} / equality gap {equality_gap:.2e} (tol {tol:.3}), complete-information gap {reduction_gap:.1e}"
        ),
    )
}
