//! Oracle comparison suite behind `osig verify`.

use anyhow::Result;
use osig_core::games::{beer_quiche_spec, corridor, stateless_targets, Convention, CorridorParams, StatelessParams};
use osig_core::oracles::{brute_force_value, critical_time, football, BeerQuiche, StatelessGame};
use osig_core::strategy::Players;
use osig_core::{lower_hull_1d, solve};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

pub const CHECKS: [&str; 5] = ["quiche", "critical-time", "stateless", "brute-force", "refinement"];

pub struct Report {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

pub fn run(name: &str) -> Result<Report> {
    Ok(match name {
        "quiche" => quiche()?,
        "critical-time" => critical()?,
        "stateless" => stateless()?,
        "brute-force" => brute_force()?,
        "refinement" => refinement()?,
        other => anyhow::bail!("unknown check `{other}`; expected one of {CHECKS:?}"),
    })
}

fn quiche() -> Result<Report> {
    let spec = beer_quiche_spec()?;
    let table = solve(&spec)?;
    let v = table.value_at(&spec, 0, &[0.0], &spec.prior)?;
    let err = (Convention::Maximizer.value(v) - BeerQuiche::new(1.0 / 3.0).value()).abs();
    let players = Players::new(&spec, &table, None);
    let d = players.p1_decision(0, &[0.0], &spec.prior)?;
    let weak_quiche = d.action_probs(&spec.prior, 1, 2)?[1];
    let pass = err <= 1e-9 && (weak_quiche - 0.75).abs() <= 1e-9;
    Ok(Report {
        name: "quiche",
        pass,
        detail: format!("|V(0, root, 1/3) + 1/6| = {err:.1e}, Pr(Q | weak) = {weak_quiche:.9}"),
    })
}

fn critical() -> Result<Report> {
    let (s1, s2) = football::solve(football::TERMINAL_WEIGHT, 1e-3)?;
    let tr = critical_time(&s1.d, &s2.d, &s1.times);
    Ok(Report { name: "critical-time", pass: (tr - 0.4).abs() <= 1e-3 + 1e-12, detail: format!("t_r = {tr:.4}") })
}

fn stateless() -> Result<Report> {
    let (s1, s2) = football::solve(football::TERMINAL_WEIGHT, 1e-3)?;
    let (a1, a2) = (s1.clone(), s2.clone());
    let oracle = StatelessGame::new(Arc::new(move |t| a1.d_at(t)), Arc::new(move |t| a2.d_at(t)), 1.0, 2000)?;
    let steps = 40;
    let spec = stateless_targets(
        Arc::new(move |t| s1.d_at(t)),
        Arc::new(move |t| s2.d_at(t)),
        &StatelessParams { steps, ..Default::default() },
    )?;
    let table = solve(&spec)?;
    let mut err: f64 = 0.0;
    for k in 0..=steps {
        for (b, p) in spec.belief.points().into_iter().enumerate() {
            err = err.max((table.get(k, 0, b) - oracle.value(spec.time.t(k), p)).abs());
        }
    }
    let limit = 0.05 * oracle.dtilde_at(0.0).abs();
    Ok(Report {
        name: "stateless",
        pass: err <= limit,
        detail: format!("L = {steps}: max |V - 4p(1-p)D(t)| = {err:.3e} (limit {limit:.3e})"),
    })
}

fn brute_force() -> Result<Report> {
    let mut worst: f64 = 0.0;
    let mut fails = 0;
    let cases = [(0.6, 0.05, 0.0, 0.0), (0.4, 0.2, 0.3, 0.1), (0.8, 0.1, 0.0, 0.4), (0.5, 0.3, 0.2, 0.2)];
    for &(target, radius, eu, ev) in &cases {
        let spec = corridor(&CorridorParams { target, radius, effort_u: eu, effort_v: ev, ..Default::default() })?;
        let table = solve(&spec)?;
        let g = spec.grid().expect("lattice game").clone();
        let x0 = [-0.4, 0.4];
        let node = g.nearest(&x0);
        let bf = brute_force_value(&spec, &g.coords(node), 10)?;
        let tol = 2.0 * spec.belief.spacing() * bf.lipschitz_p;
        let mut err: f64 = 0.0;
        for (b, p) in spec.belief.points().into_iter().enumerate() {
            err = err.max((table.get(0, node, b) - bf.value_at(p)).abs());
        }
        if err > tol + 1e-12 || bf.off_lattice > 1e-9 {
            fails += 1;
        }
        worst = worst.max(err / tol.max(1e-300));
    }
    Ok(Report {
        name: "brute-force",
        pass: fails == 0,
        detail: format!("{fails}/{} games outside 2 d L, worst error/tolerance {worst:.3}", cases.len()),
    })
}

fn refinement() -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let grid = |n: usize| (0..=n).map(|j| j as f64 / n as f64).collect::<Vec<_>>();
    let xr = grid(400);
    let (mut halving, mut bound) = (0, 0);
    for _ in 0..50 {
        let terms: Vec<(f64, f64, f64)> = (0..4)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.5..3.0), rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let f = |p: f64| -> f64 { terms.iter().map(|(a, w, ph)| a * (std::f64::consts::TAU * w * p + ph).sin()).sum() };
        let lip: f64 = terms.iter().map(|(a, w, _)| a.abs() * std::f64::consts::TAU * w).sum();
        let href = lower_hull_1d(&xr, &xr.iter().map(|&p| f(p)).collect::<Vec<_>>())?;
        let err = |n: usize| -> Result<f64> {
            let xs = grid(n);
            let h = lower_hull_1d(&xs, &xs.iter().map(|&p| f(p)).collect::<Vec<_>>())?;
            let mut e: f64 = 0.0;
            for (&p, r) in xr.iter().zip(href.values()) {
                e = e.max((h.eval(p)? - r).abs());
            }
            Ok(e)
        };
        let (e1, e2) = (err(20)?, err(40)?);
        if e2 > e1 / 2.0 + 1e-12 {
            halving += 1;
        }
        if e1 > 2.0 * lip / 20.0 || e2 > 2.0 * lip / 40.0 {
            bound += 1;
        }
    }
    Ok(Report {
        name: "refinement",
        pass: halving == 0 && bound == 0,
        detail: format!("halving fails for {halving}/50 functions, 2dL bound fails for {bound}/50"),
    })
}
