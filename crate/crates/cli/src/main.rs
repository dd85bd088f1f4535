//! Command-line front end: training, compilation, evaluation, brute-force
//! selective search, and scaling benchmarks.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{config_text_hash, RunConfig};
use output::RunDir;

#[derive(Parser)]
#[command(name = "passforge", version, about = "Learned per-stage pass selection for quantum circuit transpilation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the run seed (training, corpus, and noise seeds).
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output root directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the pass-selection policy.
    Train(CommonArgs),
    /// Compile one circuit with a frozen policy checkpoint.
    Compile(CommonArgs),
    /// Evaluate the policy against the baselines on a corpus.
    Eval(CommonArgs),
    /// Exhaustive selective-compilation search over a toggle set.
    Bruteforce(CommonArgs),
    /// Record a pass sequence on a small instance and replay it at scale.
    Bench(CommonArgs),
}

fn init_threads() {
    if let Ok(value) = std::env::var("PASSFORGE_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    let (name, args): (&str, &CommonArgs) = match &command {
        Command::Train(a) => ("train", a),
        Command::Compile(a) => ("compile", a),
        Command::Eval(a) => ("eval", a),
        Command::Bruteforce(a) => ("bruteforce", a),
        Command::Bench(a) => ("bench", a),
    };
    let (mut cfg, text) = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.ppo.seed = seed;
        cfg.eval.corpus.seed = seed;
        cfg.noise.seed = seed;
        cfg.backend.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    let run_dir = RunDir::create(
        &cfg.output.dir,
        name,
        config_text_hash(&text),
        cfg.ppo.seed,
    )
    .context("creating run directory")?;
    println!("run directory: {}", run_dir.path.display());

    match command {
        Command::Train(_) => commands::cmd_train(&cfg, &run_dir),
        Command::Compile(_) => commands::cmd_compile(&cfg, &run_dir),
        Command::Eval(_) => commands::cmd_eval(&cfg, &run_dir),
        Command::Bruteforce(_) => commands::cmd_bruteforce(&cfg, &run_dir),
        Command::Bench(_) => commands::cmd_bench(&cfg, &run_dir),
    }
}

fn main() {
    init_threads();
    let cli = Cli::parse();
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
