//! JSON game configuration.

use anyhow::{bail, ensure, Context, Result};
use osig_core::games::{
    auto_cap, beer_quiche_spec, effort_running, separation_constraint, stateless_targets, targets_terminal,
    StatelessParams,
};
use osig_core::oracles::football;
use osig_core::{ActionSet, Belief, BeliefGrid, Dynamics, GameSpec, Grid, StateSpace, TimeGrid};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Free-form notes, e.g. the unit system.
    #[serde(default)]
    pub comments: Option<Value>,
    #[serde(default)]
    pub dynamics: Option<DynamicsCfg>,
    #[serde(default)]
    pub actions: Option<ActionsCfg>,
    pub types: TypesCfg,
    pub payoffs: PayoffsCfg,
    #[serde(default)]
    pub constraint: Option<ConstraintCfg>,
    pub time: TimeCfg,
    #[serde(default)]
    pub lattice: Option<LatticeCfg>,
    #[serde(default)]
    pub caps: Option<CapsCfg>,
    #[serde(default)]
    pub dual_lattice: Option<LatticeCfg>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsCfg {
    pub family: String,
    #[serde(default)]
    pub params: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionsCfg {
    pub u: ActionList,
    pub v: ActionList,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActionList {
    Range { range: [f64; 2], count: usize },
    Vectors(Vec<Vec<f64>>),
    Scalars(Vec<f64>),
}

impl ActionList {
    fn expand(&self, field: &str) -> Result<Vec<Vec<f64>>> {
        Ok(match self {
            ActionList::Range { range, count } => {
                ensure!(*count >= 2, "{field}: count must be at least 2");
                (0..*count)
                    .map(|j| vec![range[0] + (range[1] - range[0]) * j as f64 / (*count - 1) as f64])
                    .collect()
            }
            ActionList::Vectors(v) => v.clone(),
            ActionList::Scalars(v) => v.iter().map(|a| vec![*a]).collect(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypesCfg {
    pub count: usize,
    pub prior: Vec<f64>,
    /// Nodes of the belief lattice; 101 unless the builtin says otherwise.
    #[serde(default)]
    pub belief_nodes: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffsCfg {
    pub terminal: BuiltinCfg,
    #[serde(default)]
    pub instantaneous: Option<InstantaneousCfg>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinCfg {
    pub builtin: String,
    #[serde(default)]
    pub params: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstantaneousCfg {
    pub kind: String,
    #[serde(default)]
    pub params: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintCfg {
    pub kind: String,
    #[serde(default)]
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeCfg {
    pub horizon: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeCfg {
    pub bounds: Vec<[f64; 2]>,
    pub counts: Vec<usize>,
}

impl LatticeCfg {
    fn grid(&self, field: &str) -> Result<Grid> {
        ensure!(self.bounds.len() == self.counts.len(), "{field}: bounds and counts differ in length");
        Grid::new(
            self.bounds.iter().map(|b| b[0]).collect(),
            self.bounds.iter().map(|b| b[1]).collect(),
            self.counts.clone(),
        )
        .with_context(|| field.to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsCfg {
    #[serde(rename = "K", default)]
    pub k: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AffineParams {
    a: Vec<Vec<f64>>,
    bu: Vec<Vec<f64>>,
    bv: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetParams {
    targets: Vec<Vec<f64>>,
    #[serde(default = "one")]
    weight: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatelessCfg {
    #[serde(default = "default_weight")]
    weight: f64,
    #[serde(default = "default_ra")]
    r_attacker: [f64; 2],
    #[serde(default = "default_rd")]
    r_defender: [f64; 2],
    #[serde(default = "default_step")]
    riccati_step: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EffortParams {
    #[serde(default)]
    wu: f64,
    #[serde(default)]
    wv: f64,
}

fn one() -> f64 {
    1.0
}
fn default_weight() -> f64 {
    football::TERMINAL_WEIGHT
}
fn default_ra() -> [f64; 2] {
    football::R_ATTACKER
}
fn default_rd() -> [f64; 2] {
    football::R_DEFENDER
}
fn default_step() -> f64 {
    1e-3
}

fn params<T: DeserializeOwned>(v: &Value, field: &str) -> Result<T> {
    let v = if v.is_null() { Value::Object(Default::default()) } else { v.clone() };
    serde_json::from_value(v).with_context(|| format!("invalid {field}"))
}

pub fn read_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid configuration {}", path.display()))
}

pub fn load_spec(path: &Path) -> Result<GameSpec> {
    build_spec(&read_config(path)?)
}

pub fn build_spec(cfg: &Config) -> Result<GameSpec> {
    ensure!(cfg.types.count == cfg.types.prior.len(), "types.prior must have types.count entries");
    let prior = Belief::new(cfg.types.prior.clone()).context("types.prior")?;
    let time = TimeGrid::new(cfg.time.horizon, cfg.time.steps).context("time")?;
    let dual = cfg.dual_lattice.as_ref().map(|d| d.grid("dual_lattice")).transpose()?;
    let mut spec = match cfg.payoffs.terminal.builtin.as_str() {
        "beer_quiche" => {
            ensure!(cfg.types.count == 2, "types.count must be 2 for beer_quiche");
            ensure!(cfg.time.steps == 2, "time.steps must be 2 for beer_quiche");
            ensure!(cfg.payoffs.instantaneous.is_none(), "payoffs.instantaneous is not used by beer_quiche");
            let mut s = beer_quiche_spec()?;
            s.time = time;
            if let Some(n) = cfg.types.belief_nodes {
                s.belief = BeliefGrid::new(n).context("types.belief_nodes")?;
            }
            if let Some(d) = dual {
                s.dual_lattice = Some(d);
            }
            s
        }
        "hexner_targets" | "stateless_targets" => {
            let p: StatelessCfg = params(&cfg.payoffs.terminal.params, "payoffs.terminal.params")?;
            ensure!(cfg.types.count == 2, "types.count must be 2 for {}", cfg.payoffs.terminal.builtin);
            let actions = match &cfg.actions {
                None => 101,
                Some(ActionsCfg { u: ActionList::Range { range, count }, .. }) if *range == [-1.0, 1.0] => *count,
                Some(_) => bail!("actions.u must be {{\"range\": [-1, 1], \"count\": n}} for the stateless game"),
            };
            let (d1, d2) = stateless_weights(&p, cfg.time.horizon)?;
            stateless_targets(
                d1,
                d2,
                &StatelessParams {
                    horizon: cfg.time.horizon,
                    steps: cfg.time.steps,
                    actions,
                    belief_nodes: cfg.types.belief_nodes.unwrap_or(101),
                    prior: cfg.types.prior[0],
                    dual,
                },
            )?
        }
        "corridor" => {
            let belief = BeliefGrid::new(cfg.types.belief_nodes.unwrap_or(101)).context("types.belief_nodes")?;
            lattice_spec(cfg, time, belief, dual)?
        }
        other => bail!("payoffs.terminal.builtin: unknown builtin `{other}`"),
    };
    spec.prior = prior;
    spec.cap = match cfg.caps.as_ref().and_then(|c| c.k) {
        Some(k) => k,
        None => auto_cap(&spec),
    };
    spec.validate().context("caps.K")?;
    Ok(spec)
}

type Weight = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

fn stateless_weights(p: &StatelessCfg, horizon: f64) -> Result<(Weight, Weight)> {
    use osig_core::oracles::riccati_integrate;
    let m = (horizon / p.riccati_step).round().max(1.0) as usize;
    let times: Vec<f64> = (0..=m).map(|j| horizon * j as f64 / m as f64).collect();
    let r = |d: [f64; 2]| osig_core::oracles::riccati::diag(&d);
    let s1 = riccati_integrate(&football::a(), &football::b(), &r(p.r_attacker), &football::k_terminal(p.weight), &football::z(), &times)?;
    let s2 = riccati_integrate(&football::a(), &football::b(), &r(p.r_defender), &football::k_terminal(p.weight), &football::z(), &times)?;
    Ok((Arc::new(move |t| s1.d_at(t)), Arc::new(move |t| s2.d_at(t))))
}

fn lattice_spec(cfg: &Config, time: TimeGrid, belief: BeliefGrid, dual: Option<Grid>) -> Result<GameSpec> {
    let grid = cfg.lattice.as_ref().context("lattice is required for corridor")?.grid("lattice")?;
    let dyn_cfg = cfg.dynamics.as_ref().context("dynamics is required for corridor")?;
    let dynamics = match dyn_cfg.family.as_str() {
        "single_integrator" => Dynamics::SingleIntegrator,
        "double_integrator" => Dynamics::DoubleIntegrator,
        "affine" => {
            let p: AffineParams = params(&dyn_cfg.params, "dynamics.params")?;
            Dynamics::Affine { a: p.a, bu: p.bu, bv: p.bv }
        }
        other => bail!("dynamics.family: unknown family `{other}`"),
    };
    let acts = cfg.actions.as_ref().context("actions is required for corridor")?;
    let actions = ActionSet::new(acts.u.expand("actions.u")?, acts.v.expand("actions.v")?).context("actions")?;
    let (du, dv) = (actions.u[0].len(), actions.v[0].len());
    dynamics.check(grid.dim(), du, dv).context("dynamics")?;
    let tp: TargetParams = params(&cfg.payoffs.terminal.params, "payoffs.terminal.params")?;
    ensure!(tp.targets.len() == cfg.types.count, "payoffs.terminal.params.targets needs one target per type");
    ensure!(
        tp.targets.iter().all(|t| t.len() == du && du == dv),
        "payoffs.terminal.params.targets must match the position dimension"
    );
    let terminal = targets_terminal(&dynamics, du, dv, tp.targets, tp.weight);
    let running = match &cfg.payoffs.instantaneous {
        None => None,
        Some(i) if i.kind == "none" => None,
        Some(i) if i.kind == "effort" => {
            let p: EffortParams = params(&i.params, "payoffs.instantaneous.params")?;
            Some(effort_running(p.wu, p.wv))
        }
        Some(i) => bail!("payoffs.instantaneous.kind: unknown kind `{}`", i.kind),
    };
    let constraint = match &cfg.constraint {
        None => None,
        Some(c) if c.kind == "none" => None,
        Some(c) if c.kind == "separation" => {
            ensure!(c.radius >= 0.0, "constraint.radius must be nonnegative");
            Some(separation_constraint(&dynamics, du, dv, c.radius))
        }
        Some(c) => bail!("constraint.kind: unknown kind `{}`", c.kind),
    };
    Ok(GameSpec {
        name: "corridor".into(),
        space: StateSpace::Lattice { grid, dynamics },
        actions,
        types: cfg.types.count,
        terminal,
        running,
        constraint,
        time,
        prior: Belief::new(cfg.types.prior.clone())?,
        cap: 1.0,
        belief,
        dual_lattice: dual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corridor_json() -> Value {
        serde_json::json!({
            "comments": "positions in m, time in s",
            "dynamics": {"family": "single_integrator"},
            "actions": {"u": [-1.0, 0.0, 1.0], "v": {"range": [-1.0, 1.0], "count": 3}},
            "types": {"count": 2, "prior": [0.5, 0.5], "belief_nodes": 21},
            "payoffs": {"terminal": {"builtin": "corridor", "params": {"targets": [[-0.6], [0.6]]}}},
            "constraint": {"kind": "separation", "radius": 0.05},
            "time": {"horizon": 1.0, "steps": 10},
            "lattice": {"bounds": [[-1, 1], [-1, 1]], "counts": [11, 11]}
        })
    }

    #[test]
    fn corridor_config() {
        let cfg: Config = serde_json::from_value(corridor_json()).unwrap();
        let spec = build_spec(&cfg).unwrap();
        assert!((spec.tau() - 0.1).abs() < 1e-15);
        // separation radius: c = r - |x1 - x2| is r at coincident positions
        assert!((spec.c(&[0.3, 0.3]) - 0.05).abs() < 1e-15);
        assert_eq!(spec.actions.nv(), 3);
    }

    #[test]
    fn unknown_key_named() {
        let mut j = corridor_json();
        j["time"]["stepz"] = 3.into();
        let err = serde_json::from_value::<Config>(j).unwrap_err().to_string();
        assert!(err.contains("stepz"), "{err}");
    }

    #[test]
    fn small_cap_rejected() {
        let mut j = corridor_json();
        j["caps"] = serde_json::json!({"K": 0.5});
        let cfg: Config = serde_json::from_value(j).unwrap();
        let err = format!("{:#}", build_spec(&cfg).unwrap_err());
        assert!(err.contains("caps.K"), "{err}");
    }

    #[test]
    fn quiche_prior() {
        let j = serde_json::json!({
            "types": {"count": 2, "prior": [0.3333333333333333, 0.6666666666666667], "belief_nodes": 61},
            "payoffs": {"terminal": {"builtin": "beer_quiche"}},
            "time": {"horizon": 2.0, "steps": 2},
            "caps": {"K": 10.0}
        });
        let spec = build_spec(&serde_json::from_value(j).unwrap()).unwrap();
        assert!((spec.prior.get(0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(spec.n_states(), 7);
    }
}
