//! `erci`: command-line driver for entropic reactive control improvisation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use erci_core::drone::{gen_drone_benchmark, BenchmarkSpec, SwitchMode};
use erci_core::io::{
    core_from_json, core_to_json, fmt12, front_to_csv, game_from_json, game_to_json, policy_from_json, tables_to_json,
    verdict_from_json, verdict_to_json,
};
use erci_core::mdp::{pareto_explore_mdp, MdpSearch};
use erci_core::oracle::{check_witness, OracleError, WitnessCheck};
use erci_core::preprocess::preprocess;
use erci_core::runtime::{logged_episode, simulate, EnvStrategy};
use erci_core::sg::{sg_pareto_explore, FrontTables, SgSearch, TableOptions};
use erci_core::{par, CoreSG, Monitor, MonitorSpec, StochasticGame, Target, Verdict};

#[derive(Parser)]
#[command(name = "erci", version, about = "Entropic reactive control improvisation")]
struct Cli {
    /// Worker threads for solver internals; 1 runs sequentially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print entropies in bits instead of nats.
    #[arg(long, global = true)]
    bits: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a game file for structural problems.
    Validate {
        #[arg(long)]
        game: PathBuf,
    },
    /// Unroll a game against its monitors and write the core.
    Preprocess {
        #[command(flatten)]
        input: GameInput,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the front at the initial node and write it as CSV.
    Pareto {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solver: Solver,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the per-node tables as JSON.
        #[arg(long)]
        tables: Option<PathBuf>,
    },
    /// Decide a target and write the verdict with its improviser.
    Synthesize {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solver: Solver,
        #[arg(long, requires = "h", conflicts_with_all = ["epsilon", "delta_regret"])]
        p: Option<f64>,
        #[arg(long, requires = "p")]
        h: Option<f64>,
        /// Performance regret relative to the max-performance endpoint.
        #[arg(long, requires = "delta_regret")]
        epsilon: Option<f64>,
        /// Entropy regret relative to the max-entropy endpoint.
        #[arg(long = "delta", requires = "epsilon")]
        delta_regret: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo estimates for the improviser of a realizable verdict.
    Sample {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        verdict: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = EnvArg::WorstP)]
        env: EnvArg,
        /// Env policy JSON for `--env scripted`.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Write the first episode as JSON lines.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Re-check a verdict against the brute-force oracles.
    Verify {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        verdict: PathBuf,
    },
    /// Benchmark generators.
    Bench {
        #[command(subcommand)]
        which: BenchCmd,
    },
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Grid-world delivery drone game.
    Drone {
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 6)]
        horizon: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Interval)]
        mode: ModeArg,
        /// Output directory for game.json, hard.json and soft.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Point,
    Interval,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnvArg {
    WorstP,
    WorstH,
    Uniform,
    Scripted,
}

#[derive(Args)]
struct GameInput {
    #[arg(long)]
    game: PathBuf,
    /// Hard monitor JSON; defaults to always accepting.
    #[arg(long)]
    hard: Option<PathBuf>,
    /// Soft monitor JSON; defaults to reaching a state named `top`.
    #[arg(long)]
    soft: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    horizon: usize,
}

#[derive(Args)]
struct Input {
    #[arg(long, conflicts_with = "core")]
    game: Option<PathBuf>,
    /// Preprocessed core JSON.
    #[arg(long)]
    core: Option<PathBuf>,
    #[arg(long, requires = "game")]
    hard: Option<PathBuf>,
    #[arg(long, requires = "game")]
    soft: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    horizon: usize,
}

#[derive(Args)]
struct Solver {
    /// Initial certification threshold for game tables.
    #[arg(long, default_value_t = erci_core::sg::KAPPA0)]
    kappa: f64,
    #[arg(long, default_value_t = erci_core::mdp::LAMBDA_MAX)]
    lambda_max: f64,
    /// Bisection resolution for MDP targets.
    #[arg(long, default_value_t = erci_core::mdp::DELTA)]
    delta_lambda: f64,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_game(path: &Path) -> Result<StochasticGame> {
    Ok(game_from_json(&read(path)?)?)
}

fn load_monitor(game: &StochasticGame, path: Option<&Path>, fallback: impl FnOnce() -> Result<Monitor>) -> Result<Monitor> {
    match path {
        Some(p) => {
            let spec: MonitorSpec = serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?;
            Ok(Monitor::compile(&spec, game)?)
        }
        None => fallback(),
    }
}

fn build_core(game: &Path, hard: Option<&Path>, soft: Option<&Path>, horizon: usize) -> Result<CoreSG> {
    let g = load_game(game)?;
    let hard = load_monitor(&g, hard, || Ok(Monitor::trivial(&g)))?;
    let soft = load_monitor(&g, soft, || Monitor::reach(&g, &["top"]).context("no --soft given and no state named top"))?;
    Ok(preprocess(&g, &hard, &soft, horizon)?)
}

impl Input {
    fn load(&self) -> Result<CoreSG> {
        match (&self.game, &self.core) {
            (Some(g), _) => build_core(g, self.hard.as_deref(), self.soft.as_deref(), self.horizon),
            (None, Some(c)) => Ok(core_from_json(&read(c)?)?),
            (None, None) => bail!("one of --game or --core is required"),
        }
    }
}

struct Ctx {
    parallel: bool,
    bits: bool,
}

impl Ctx {
    fn h(&self, x: f64) -> String {
        fmt12(if self.bits { x / std::f64::consts::LN_2 } else { x })
    }

    fn unit(&self) -> &'static str {
        if self.bits {
            "bits"
        } else {
            "nats"
        }
    }
}

fn verdict_code(v: &Verdict) -> u8 {
    match v {
        Verdict::Realizable { .. } => 0,
        Verdict::Unrealizable { .. } => 2,
        Verdict::Unknown { .. } => 3,
    }
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.jobs {
        par::set_threads(n);
    }
    let ctx = Ctx { parallel: cli.jobs != Some(1), bits: cli.bits };
    match cli.cmd {
        Cmd::Validate { game } => {
            let g = load_game(&game)?;
            let report = g.validate();
            for e in &report.errors {
                println!("error {} at {}: {}", e.code, e.state, e.message);
            }
            for w in &report.warnings {
                println!("warning {} at {}: {}", w.code, w.state, w.message);
            }
            println!("{} states, {} errors, {} warnings", g.len(), report.errors.len(), report.warnings.len());
            Ok(if report.is_ok() { 0 } else { 1 })
        }
        Cmd::Preprocess { input, out } => {
            let core = build_core(&input.game, input.hard.as_deref(), input.soft.as_deref(), input.horizon)?;
            let s = core.stats();
            eprintln!("core: {} nodes, {} edges, longest path {}", s.nodes, s.edges, s.longest_path);
            write_or_print(out.as_deref(), &core_to_json(&core))?;
            Ok(0)
        }
        Cmd::Pareto { input, solver, out, tables } => {
            let core = input.load()?;
            let opts = TableOptions { kappa: solver.kappa, lambda_max: solver.lambda_max, parallel: ctx.parallel, ..Default::default() };
            let t = FrontTables::build(&core, &opts)?;
            eprintln!("{} rationalities, certified gap {}", t.grid.len(), fmt12(t.gap));
            write_or_print(out.as_deref(), &front_to_csv(&t.front(core.initial))?)?;
            if let Some(p) = tables {
                fs::write(&p, tables_to_json(&t)).with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(0)
        }
        Cmd::Synthesize { input, solver, p, h, epsilon, delta_regret, out } => {
            let core = input.load()?;
            let target = match (p, h, epsilon, delta_regret) {
                (Some(p), Some(h), _, _) => Target::Absolute { p, h },
                (_, _, Some(epsilon), Some(delta)) => Target::Regret { epsilon, delta },
                _ => bail!("give either --p and --h or --epsilon and --delta"),
            };
            let verdict = if core.is_mdp() {
                let o = MdpSearch { delta: solver.delta_lambda, lambda_max: solver.lambda_max, parallel: ctx.parallel };
                pareto_explore_mdp(&core, &target, &o)?.verdict
            } else {
                let o = SgSearch { kappa0: solver.kappa, lambda_max: solver.lambda_max, parallel: ctx.parallel, ..Default::default() };
                sg_pareto_explore(&core, &target, &o)?.verdict
            };
            let t = verdict.target();
            eprintln!("{}: target p {} h {} {}", verdict.name(), fmt12(t.p), ctx.h(t.h), ctx.unit());
            write_or_print(out.as_deref(), &verdict_to_json(&core, &verdict))?;
            Ok(verdict_code(&verdict))
        }
        Cmd::Sample { input, verdict, n, seed, env, policy, log } => {
            let core = input.load()?;
            let v = verdict_from_json(&core, &read(&verdict)?, ctx.parallel)?;
            let Verdict::Realizable { improviser, .. } = v else {
                bail!("verdict is {}, no improviser to sample", v.name());
            };
            let env = match env {
                EnvArg::WorstP => EnvStrategy::WorstPerformance,
                EnvArg::WorstH => EnvStrategy::WorstEntropy,
                EnvArg::Uniform => EnvStrategy::Uniform,
                EnvArg::Scripted => {
                    let p = policy.context("--env scripted needs --policy")?;
                    EnvStrategy::Scripted(policy_from_json(&core, &read(&p)?)?)
                }
            };
            let r = simulate(&core, &improviser, &env, n, seed, ctx.parallel);
            println!("episodes {}", r.episodes);
            println!("p_hat {} [{}, {}]", fmt12(r.p_hat), fmt12(r.p_lo), fmt12(r.p_hi));
            println!("h_hat {} +- {} {}", ctx.h(r.h_hat), ctx.h(r.h_stderr), ctx.unit());
            if let Some(path) = log {
                let lines: Vec<String> = logged_episode(&core, &improviser, &env, seed, 0)
                    .iter()
                    .map(|rec| serde_json::to_string(rec).expect("log record serializes"))
                    .collect();
                fs::write(&path, lines.join("\n") + "\n").with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(0)
        }
        Cmd::Verify { input, verdict } => {
            let core = input.load()?;
            let v = verdict_from_json(&core, &read(&verdict)?, ctx.parallel)?;
            let opts = WitnessCheck { parallel: ctx.parallel, ..Default::default() };
            let (ok, how) = match check_witness(&core, &v, &opts) {
                Ok(ok) => (ok, "enumeration"),
                // too many env policies: the backward worst case bounds every env
                Err(e @ OracleError::TooLarge { .. }) => match &v {
                    Verdict::Realizable { target, improviser, .. } => {
                        (improviser.guaranteed_point(&core).dominates(target, opts.tol), "backward worst case")
                    }
                    _ => return Err(e.into()),
                },
            };
            println!("{} verdict {} ({how})", v.name(), if ok { "confirmed" } else { "REJECTED" });
            Ok(if ok { 0 } else { 1 })
        }
        Cmd::Bench { which: BenchCmd::Drone { k, horizon, mode, out } } => {
            let mode = match mode {
                ModeArg::Point => SwitchMode::Point,
                ModeArg::Interval => SwitchMode::Interval,
            };
            let d = gen_drone_benchmark(&BenchmarkSpec::new(k, horizon), mode)?;
            let game = game_to_json(&d.game);
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir)?;
                    fs::write(dir.join("game.json"), &game)?;
                    fs::write(dir.join("hard.json"), serde_json::to_string_pretty(&d.hard.to_spec(&d.game))?)?;
                    fs::write(dir.join("soft.json"), serde_json::to_string_pretty(&d.soft.to_spec(&d.game))?)?;
                    eprintln!("{} states written to {}", d.game.len(), dir.display());
                }
                None => println!("{game}"),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("ERCI_LOG")).init();
    // usage errors exit 1; 2 is reserved for unrealizable targets
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
