//! `bpk`: run, sample, check, analyse, translate, benchmark and train on the
//! registered example programs.

mod bench;
mod params;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use bpk_core::analysis::{
    check_safety, reach_probability, sample_estimate, Bad, Mode, SampleConfig, ValueIterationConfig,
};
use bpk_core::examples::{self, Kind, Params};
use bpk_core::explore::{build_product, explore_program, ExploreConfig, NodeKind, ProductGraph};
use bpk_core::rlenv::{evaluate, make_env, rollout, train_tabular_q, EnvConfig};
use bpk_core::smt::{run_smt, SmtRunConfig, Solver, SolverConfig};
use bpk_core::{prism, run, smv, BProgram, Event, EventSet, Policy, RunConfig, Terminal};

const VIOLATION: u8 = 1;
const USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "bpk", version, about = "Behavioral programs: execution, verification and learning")]
#[command(after_help = "Example parameters: `key=value` after the example name, or `--key value` when the \
                        key is not already a flag of the command (e.g. `bpk prob knuth_dice --n 6 --target result_0`).\n\
                        Environment: BPK_SEED sets the default seed, BPK_SMT_SOLVER the solver executable.")]
struct Cli {
    /// SMT-LIB2 solver executable (default: $BPK_SMT_SOLVER, then z3).
    #[arg(long, global = true)]
    solver: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run and print the selected events.
    Run {
        example: String,
        params: Vec<String>,
        /// first | random | priority:E1,E2,... | script:E1,E2,...
        #[arg(long, default_value = "random")]
        policy: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1000)]
        max_steps: usize,
    },
    /// Estimate the probability of firing a target event by random runs.
    Sample {
        example: String,
        params: Vec<String>,
        /// Event name, or several separated by commas.
        #[arg(long)]
        target: String,
        /// Number of runs.
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        /// Per-run CSV (run_index,hit,cumulative_mean,cumulative_SE).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search the product graph for a violation; exits 1 if one is found.
    Check {
        example: String,
        params: Vec<String>,
        /// Event names separated by commas, `deadlock`, or `repeat:E` (E twice in a row).
        #[arg(long)]
        bad: String,
    },
    /// Exact reachability probability of a target event.
    Prob {
        example: String,
        params: Vec<String>,
        #[arg(long)]
        target: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Max)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Emit an SMV or PRISM model.
    Translate {
        example: String,
        params: Vec<String>,
        #[arg(long, value_enum)]
        to: Target,
        /// Output file; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// With PRISM output to a file, also write a `.props` file for reaching this event.
        #[arg(long)]
        target: Option<String>,
    },
    /// Run a benchmark suite and write its CSV (dice, states, sampling, smt).
    Bench {
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train tabular Q-learning and report the greedy policy's reward.
    Rl {
        /// Example name; may instead come from `--config`.
        example: Option<String>,
        params: Vec<String>,
        #[arg(long)]
        episodes: Option<usize>,
        /// Environment file of `key = value` lines.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Evaluation episodes for the learned policy.
        #[arg(long, default_value_t = 100)]
        eval: usize,
        /// Learning-curve CSV (episode,cumulative_reward,epsilon).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Max,
    Min,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Smv,
    Prism,
}

fn main() -> ExitCode {
    let argv = params::desugar(std::env::args().collect());
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE)
        }
    }
}

/// `BPK_SEED`, else 0.
fn default_seed() -> anyhow::Result<u64> {
    match std::env::var("BPK_SEED") {
        Ok(v) => v.trim().parse().with_context(|| format!("BPK_SEED={v} is not an unsigned integer")),
        Err(_) => Ok(0),
    }
}

fn seed_or_default(seed: Option<u64>) -> anyhow::Result<u64> {
    seed.map_or_else(default_seed, Ok)
}

fn solver(path: &Option<PathBuf>, seed: u64) -> anyhow::Result<Solver> {
    Ok(Solver::new(&SolverConfig { path: path.clone(), seed, ..Default::default() })?)
}

fn program(example: &str, params: &[String]) -> anyhow::Result<(BProgram, Kind)> {
    let info = examples::info(example)?;
    let p = Params::parse(params.iter().map(String::as_str))?;
    Ok((examples::build(example, &p)?, info.kind))
}

fn discrete(example: &str, params: &[String]) -> anyhow::Result<BProgram> {
    match program(example, params)? {
        (p, Kind::Discrete) => Ok(p),
        (_, Kind::Smt) => bail!("{example} uses the solver arbiter; only `run` supports it"),
    }
}

fn product(p: &BProgram) -> anyhow::Result<ProductGraph> {
    let cfg = ExploreConfig::default();
    Ok(build_product(&explore_program(p, &cfg)?, cfg.product_node_cap)?)
}

fn event_names(list: &str) -> anyhow::Result<EventSet> {
    let names: Vec<String> = list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        bail!("expected at least one event name");
    }
    Ok(EventSet::predicate(list, move |e| names.iter().any(|n| n == e.name())))
}

fn event_list(list: &str) -> Vec<Event> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(Event::new).collect()
}

fn policy(spec: &str, seed: u64) -> anyhow::Result<Policy> {
    Ok(match spec.split_once(':') {
        None if spec == "first" => Policy::First,
        None if spec == "random" => Policy::Random(seed),
        Some(("priority", list)) => Policy::Priority(event_list(list)),
        Some(("script", list)) => Policy::Scripted(event_list(list)),
        _ => bail!("unknown policy '{spec}' (first, random, priority:E1,E2, script:E1,E2)"),
    })
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { example, params, policy: spec, seed, max_steps } => {
            let seed = seed_or_default(seed)?;
            match program(&example, &params)? {
                (p, Kind::Discrete) => {
                    let trace = run(&p, &RunConfig { policy: policy(&spec, seed)?, max_steps, seed })?;
                    for e in &trace.events {
                        println!("{e}");
                    }
                    println!(
                        "# terminal={} steps={} reward={}",
                        trace.terminal,
                        trace.events.len(),
                        trace.total_reward()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                (p, Kind::Smt) => {
                    let trace = run_smt(&p, &solver(&cli.solver, seed)?, &SmtRunConfig { max_steps, seed })?;
                    for a in &trace.events {
                        println!("{a}");
                    }
                    println!(
                        "# terminal={} steps={} reward={}",
                        trace.terminal,
                        trace.events.len(),
                        trace.total_reward()
                    );
                    // An unsatisfiable query ends a solver run in deadlock.
                    Ok(if trace.terminal == Terminal::Deadlock { ExitCode::from(VIOLATION) } else { ExitCode::SUCCESS })
                }
            }
        }
        Command::Sample { example, params, target, n, seed, max_steps, out } => {
            let p = discrete(&example, &params)?;
            let seed = seed_or_default(seed)?;
            let est = sample_estimate(&p, &event_names(&target)?, &SampleConfig { runs: n, seed, max_steps })?;
            println!(
                "mean={:.6} se={:.6} hits={} runs={}",
                est.mean,
                est.standard_error,
                est.hits.iter().filter(|h| **h).count(),
                n
            );
            if let Some(path) = &out {
                write_or_print(&Some(path.clone()), &est.to_csv())?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { example, params, bad } => {
            let pg = product(&discrete(&example, &params)?)?;
            let predicate = match bad.split_once(':') {
                None if bad == "deadlock" => {
                    Bad::node(|pg, n| matches!(pg.nodes[n].kind, NodeKind::Stuck { terminal: Terminal::Deadlock, .. }))
                }
                Some(("repeat", name)) => {
                    let name = name.trim().to_string();
                    Bad::consecutive(move |a, b| a.name() == name && b.name() == name)
                }
                _ => Bad::event(event_names(&bad)?),
            };
            let verdict = check_safety(&pg, &predicate);
            if verdict.holds {
                println!("holds ({} product nodes)", pg.nodes.len());
                return Ok(ExitCode::SUCCESS);
            }
            println!("violated; counterexample:");
            for e in verdict.counterexample.iter().flatten() {
                println!("  {e}");
            }
            Ok(ExitCode::from(VIOLATION))
        }
        Command::Prob { example, params, target, mode, tol } => {
            let pg = product(&discrete(&example, &params)?)?;
            let mode = match mode {
                ModeArg::Max => Mode::Max,
                ModeArg::Min => Mode::Min,
            };
            let cfg = ValueIterationConfig { tolerance: tol, ..Default::default() };
            let r = reach_probability(&pg, &event_names(&target)?, mode, &cfg)?;
            println!("{:.6}", r.value);
            Ok(ExitCode::SUCCESS)
        }
        Command::Translate { example, params, to, out, target } => {
            let x = explore_program(&discrete(&example, &params)?, &ExploreConfig::default())?;
            let text = match to {
                Target::Smv => smv::translate(&x)?,
                Target::Prism => prism::translate(&x)?,
            };
            write_or_print(&out, &text)?;
            if let Some(name) = target {
                let (Target::Prism, Some(path)) = (to, &out) else {
                    bail!("--target needs --to prism and --out");
                };
                let idx =
                    x.universe.iter().position(|e| e.name() == name).ok_or_else(|| anyhow!("no event named {name}"))?;
                let props = prism::reach_property(idx, true) + &prism::reach_property(idx, false);
                write_props(path, &props)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench { suite, out, seed } => {
            let seed = seed_or_default(seed)?;
            let csv = bench::run(&suite, seed, &cli.solver)?;
            write_or_print(&out, &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Rl { example, params, episodes, config, seed, max_steps, eval, out } => {
            let mut cfg = match &config {
                Some(path) => EnvConfig::parse(
                    &std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
                )?,
                None => EnvConfig::new(example.as_deref().ok_or_else(|| anyhow!("rl needs an example or --config"))?),
            };
            if let Some(name) = example {
                cfg.program = name;
            }
            let mut merged = cfg.params.clone();
            for (k, v) in params
                .iter()
                .map(|s| s.split_once('=').ok_or_else(|| anyhow!("expected key=value, got '{s}'")))
                .collect::<anyhow::Result<Vec<_>>>()?
            {
                merged = merged.set(k, v);
            }
            if config.is_none() || seed.is_some() {
                cfg.q.seed = seed_or_default(seed)?;
            }
            if let Some(e) = episodes {
                cfg.q.episodes = e;
            }
            let steps = max_steps.unwrap_or(cfg.max_steps);
            let solver = match examples::info(&cfg.program)?.kind {
                Kind::Smt => Some(Arc::new(solver(&cli.solver, cfg.q.seed)?)),
                Kind::Discrete => None,
            };
            let mut env = make_env(&cfg.program, &merged, steps, solver)?;
            let q = train_tabular_q(env.as_mut(), &cfg.q)?;
            if let Some(path) = &out {
                write_or_print(&Some(path.clone()), &q.curve_csv())?;
            }
            let greedy = rollout(env.as_mut(), &mut q.policy.clone(), cfg.q.seed)?;
            let mean = evaluate(env.as_mut(), &mut q.policy.clone(), eval, cfg.q.seed)?;
            println!("states={} episodes={}", q.policy.table.len(), cfg.q.episodes);
            println!("greedy_rollout_reward={greedy:.6}");
            println!("mean_reward_over_{eval}={mean:.6}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn write_props(model: &Path, props: &str) -> anyhow::Result<()> {
    let path = model.with_extension("props");
    std::fs::write(&path, props).with_context(|| format!("writing {}", path.display()))
}
