mod config;
mod export;
mod tables;
mod verify;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use osig_core::sim::{advantage_row, monte_carlo, TypeSource};
use osig_core::strategy::Players;
use osig_core::{dual_solve, ConjugateTable, GameSpec, ShiftPolicy, ValueTable};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const PRIMAL_FILE: &str = "primal.osig";
const DUAL_FILE: &str = "dual.osig";
const MASK_FILE: &str = "mask.osig";

#[derive(Parser)]
#[command(name = "osig", version, about = "Solve and simulate zero-sum games with one-sided information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Primal backward induction; writes primal.osig and mask.osig.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Conjugate backward induction; writes dual.osig and mask.osig.
    DualSolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Fail instead of clamping shifted dual vectors that leave the lattice.
        #[arg(long)]
        strict: bool,
    },
    /// Feasibility masks per timestep; writes mask.osig.
    Reach {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Treat a successor as infeasible if any surrounding lattice corner is.
        #[arg(long)]
        conservative: bool,
    },
    /// Seeded rollouts written as JSON lines.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        tables: PathBuf,
        #[arg(long, default_value_t = 100)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Initial state, comma separated. Defaults to node 0 of a graph game.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        /// Fix Player 1's type instead of sampling it from the prior.
        #[arg(long = "type")]
        player_type: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the solvers with the reference oracles.
    Verify {
        /// Run only these checks.
        #[arg(long = "check", value_parser = verify::CHECKS)]
        checks: Vec<String>,
    },
    /// CSV data for plots.
    Export {
        #[command(subcommand)]
        what: Export,
    },
}

#[derive(Subcommand)]
enum Export {
    /// Value over the belief lattice at (t_k, x): columns p, V.
    Value {
        #[command(flatten)]
        at: Slice,
    },
    /// Convexification gap over the belief lattice at (t_k, x): columns p, advantage.
    Advantage {
        #[command(flatten)]
        at: Slice,
    },
    /// Mean reveal step and payoff from every feasible initial state.
    Reveal {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        tables: PathBuf,
        #[arg(long, default_value_t = 50)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Flatten JSONL rollouts into one row per step.
    Trajectories {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct Slice {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    tables: PathBuf,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
struct VerificationFailed(usize);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} verification checks failed", self.0)
    }
}

impl std::error::Error for VerificationFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<VerificationFailed>().is_some() {
        return 2;
    }
    let numeric = err.chain().any(|c| {
        matches!(c.downcast_ref::<osig_core::Error>(), Some(osig_core::Error::NonFinite(_) | osig_core::Error::Guard(_)))
    });
    if numeric {
        3
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Solve { config, out } => {
            let spec = config::load_spec(&config)?;
            let table = osig_core::solve(&spec)?;
            std::fs::create_dir_all(&out)?;
            tables::write_primal(&out.join(PRIMAL_FILE), &spec, &table)?;
            tables::write_mask(&out.join(MASK_FILE), &spec, &table.masks)?;
            if spec.grid().is_none() {
                let v = table.value_at(&spec, 0, &spec.state(0), &spec.prior)?;
                println!("V(0, node 0, prior) = {}", export::fmt12(v));
            }
            println!("clipped successors: {}", table.clipped);
        }
        Command::DualSolve { config, out, strict } => {
            let spec = config::load_spec(&config)?;
            let policy = if strict { ShiftPolicy::Strict } else { ShiftPolicy::Clamp };
            let table = if strict {
                let trans = spec.transitions()?;
                let masks = osig_core::reach::compute_masks(&spec, &trans, false);
                osig_core::dual::dual_solve_with(&spec, &trans, masks, policy)?
            } else {
                dual_solve(&spec)?
            };
            std::fs::create_dir_all(&out)?;
            tables::write_dual(&out.join(DUAL_FILE), &spec, &table)?;
            tables::write_mask(&out.join(MASK_FILE), &spec, &table.masks)?;
            println!("clamped dual reads: {}", table.clamped_reads);
        }
        Command::Reach { config, out, conservative } => {
            let spec = config::load_spec(&config)?;
            let trans = spec.transitions()?;
            let masks = osig_core::reach::compute_masks(&spec, &trans, conservative);
            std::fs::create_dir_all(&out)?;
            tables::write_mask(&out.join(MASK_FILE), &spec, &masks)?;
            for k in 0..=masks.steps() {
                println!("k = {k}: {} infeasible of {}", masks.infeasible_count(k), spec.n_states());
            }
        }
        Command::Simulate { config, tables: dir, runs, seed, x0, player_type, out } => {
            let spec = config::load_spec(&config)?;
            let (primal, dual) = load_tables(&dir, &spec)?;
            let players = Players::new(&spec, &primal, dual.as_ref());
            let x0 = root_state(&spec, x0)?;
            let types = match player_type {
                Some(i) if i < spec.types => TypeSource::Fixed(i),
                Some(i) => bail!("--type {i} out of range"),
                None => TypeSource::Sampled,
            };
            let seeds: Vec<u64> = (seed..seed + runs).collect();
            let (summary, records) = monte_carlo(&players, &x0, &spec.prior, types, &seeds)?;
            let mut sink: Box<dyn Write> = match &out {
                Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
                None => Box::new(std::io::stdout().lock()),
            };
            for r in &records {
                writeln!(sink, "{}", serde_json::to_string(r)?)?;
            }
            sink.flush()?;
            if out.is_some() {
                println!(
                    "runs {} mean payoff {} +- {} reveal step {} violations {}",
                    summary.runs,
                    export::fmt12(summary.mean_payoff),
                    export::fmt12(summary.stderr_payoff),
                    export::fmt12(summary.mean_reveal_delay),
                    summary.violations
                );
            }
        }
        Command::Verify { checks } => {
            let names: Vec<String> =
                if checks.is_empty() { verify::CHECKS.iter().map(|s| s.to_string()).collect() } else { checks };
            let mut failed = 0;
            for name in &names {
                let r = verify::run(name)?;
                if !r.pass {
                    failed += 1;
                }
                println!("[{}] {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            if failed > 0 {
                return Err(VerificationFailed(failed).into());
            }
        }
        Command::Export { what } => export_cmd(what)?,
    }
    Ok(())
}

fn export_cmd(what: Export) -> Result<()> {
    match what {
        Export::Value { at } => {
            let spec = config::load_spec(&at.config)?;
            let (primal, _) = load_tables(&at.tables, &spec)?;
            anyhow::ensure!(at.k <= spec.steps(), "--k beyond the horizon");
            let x = root_state(&spec, at.x0)?;
            let row = primal.belief_row_at(&spec, at.k, &x)?;
            let rows: Vec<Vec<f64>> = spec.belief.points().into_iter().zip(row).map(|(p, v)| vec![p, v]).collect();
            export::write_rows(at.out.as_deref(), &["p".into(), "V".into()], &rows)?;
        }
        Export::Advantage { at } => {
            let spec = config::load_spec(&at.config)?;
            let (primal, dual) = load_tables(&at.tables, &spec)?;
            anyhow::ensure!(at.k < spec.steps(), "--k must be before the horizon");
            let players = Players::new(&spec, &primal, dual.as_ref());
            let x = root_state(&spec, at.x0)?;
            let row = advantage_row(&players, at.k, &x)?;
            let rows: Vec<Vec<f64>> = spec.belief.points().into_iter().zip(row).map(|(p, v)| vec![p, v]).collect();
            export::write_rows(at.out.as_deref(), &["p".into(), "advantage".into()], &rows)?;
        }
        Export::Reveal { config, tables: dir, runs, seed, out } => {
            let spec = config::load_spec(&config)?;
            let (primal, dual) = load_tables(&dir, &spec)?;
            let players = Players::new(&spec, &primal, dual.as_ref());
            let seeds: Vec<u64> = (seed..seed + runs).collect();
            let dim = spec.state(0).len();
            let mut rows = Vec::new();
            for n in 0..spec.n_states() {
                if !primal.masks.at(0)[n] {
                    continue;
                }
                let x = spec.state(n);
                let (s, _) = monte_carlo(&players, &x, &spec.prior, TypeSource::Sampled, &seeds)?;
                let mut row = x.clone();
                row.extend([s.mean_reveal_delay, s.mean_payoff, s.violations as f64]);
                rows.push(row);
            }
            let mut header: Vec<String> = (0..dim).map(|d| format!("x{d}")).collect();
            header.extend(["reveal_step", "mean_payoff", "violations"].map(String::from));
            export::write_rows(out.as_deref(), &header, &rows)?;
        }
        Export::Trajectories { input, out } => {
            let text = std::fs::read_to_string(&input).with_context(|| format!("cannot read {}", input.display()))?;
            let records = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .enumerate()
                .map(|(j, l)| serde_json::from_str(l).with_context(|| format!("line {}", j + 1)))
                .collect::<Result<Vec<_>>>()?;
            export::trajectories(&records, out.as_deref())?;
        }
    }
    Ok(())
}

fn root_state(spec: &GameSpec, x0: Option<Vec<f64>>) -> Result<Vec<f64>> {
    match (x0, spec.grid()) {
        (Some(x), _) => {
            spec.node_of(&x).context("--x0")?;
            Ok(x)
        }
        (None, None) => Ok(spec.state(0)),
        (None, Some(_)) => bail!("--x0 is required for lattice games"),
    }
}

fn load_tables(dir: &Path, spec: &GameSpec) -> Result<(ValueTable, Option<ConjugateTable>)> {
    let (mh, masks) = tables::read_mask(&dir.join(MASK_FILE)).context("run `osig solve` first")?;
    mh.check(spec)?;
    let (ph, primal) = tables::read_primal(&dir.join(PRIMAL_FILE), masks.clone()).context("run `osig solve` first")?;
    ph.check(spec)?;
    let dual_path = dir.join(DUAL_FILE);
    let dual = if dual_path.exists() {
        let (dh, d) = tables::read_dual(&dual_path, masks)?;
        dh.check(spec)?;
        Some(d)
    } else {
        None
    };
    Ok((primal, dual))
}
