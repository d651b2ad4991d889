use std::path::PathBuf;

use aggspec_bench::{load_scenario, oracle_s, run_sweep, Axis, Format, Scenario};
use aggspec_core::engine::Mode;
use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

/// Simulated aggregated speculative decoding experiments.
#[derive(Parser)]
#[command(name = "aggspec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario once, ignoring its sweep axis.
    Run(Common),
    /// Run the scenario's sweep axis, one engine per value.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Sweep a fixed speculation length over `lo..hi` (inclusive).
        #[arg(long, value_name = "LO..HI", value_parser = parse_range)]
        sweep_s: Option<[usize; 2]>,
    },
    /// Default, +majority, +selector, +pipeline, cumulatively.
    Ablate(Common),
    /// Print the speculation length minimizing LLM time per token.
    OracleS(Common),
}

/// Flags override the matching scenario-file values.
#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
}

impl Common {
    fn load(&self) -> anyhow::Result<Scenario> {
        let mut sc = load_scenario(&self.scenario)?;
        if let Some(mode) = self.mode {
            sc.mode = mode;
        }
        if let Some(seed) = self.seed {
            sc.engine.seed = seed;
        }
        if let Some(out) = &self.out {
            sc.out = out.clone();
        }
        if let Some(format) = self.format {
            sc.format = format;
        }
        Ok(sc)
    }
}

fn parse_range(s: &str) -> Result<[usize; 2], String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
    let lo: usize = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: usize = hi.trim_start_matches('=').trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    Ok([lo, hi])
}

fn sweep(sc: Scenario) -> anyhow::Result<()> {
    let sc = sc.validate()?;
    let (table, path) = run_sweep(&sc, &sc.out).with_context(|| format!("scenario `{}`", sc.name))?;
    print!("{}", table.to_text());
    log::info!("wrote {}", path.display());
    Ok(())
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AGGSPEC_LOG", "warn")).init();
    match Cli::parse().command {
        Command::Run(common) => {
            let mut sc = common.load()?;
            sc.sweep.axis = Axis::None;
            sweep(sc)
        }
        Command::Sweep { common, sweep_s } => {
            let mut sc = common.load()?;
            if let Some(range) = sweep_s {
                sc.sweep.axis = Axis::S;
                sc.sweep.s_range = Some(range);
            }
            if sc.sweep.axis == Axis::None {
                bail!("scenario has no sweep axis; set [sweep] or pass --sweep-s");
            }
            sweep(sc)
        }
        Command::Ablate(common) => {
            let mut sc = common.load()?;
            sc.sweep.axis = Axis::Ablation;
            sweep(sc)
        }
        Command::OracleS(common) => {
            let sc = common.load()?;
            let report = oracle_s(&sc)?;
            println!("{:>3}  {:>8}  {:>12}", "s", "vl", "t_llm/vl");
            for (s, vl, ratio) in &report.curve {
                println!("{s:>3}  {vl:>8.4}  {ratio:>12.4}");
            }
            println!("optimal s = {}", report.s_star);
            Ok(())
        }
    }
}
