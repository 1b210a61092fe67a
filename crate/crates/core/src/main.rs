use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use cellfree::combining::CombinerKind;
use cellfree::costmodel;
use cellfree::harness::{self, output, ExperimentConfig, Profile};
use cellfree::Result;

#[derive(Parser)]
#[command(
    name = "cellfree",
    version,
    about = "Uplink cell-free massive MIMO simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML file overriding the selected profile.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Base parameter set: `reference` (alias `paper`) or `desk`.
    #[arg(long, global = true, default_value = "desk")]
    profile: String,

    /// Repeat for more detail (-v progress, -vv bisection trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo pipeline and write all result files.
    Run,
    /// Print the complexity / fronthaul table and write costs.csv.
    Costs,
    /// Recompute capacity and CDF files from an existing results directory.
    Cdf,
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig> {
    let base = ExperimentConfig::profile(cli.profile.parse::<Profile>()?);
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path, &base)?,
        None => base,
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn costs(cfg: &ExperimentConfig) -> Result<()> {
    let n = &cfg.network;
    let table = costmodel::cost_table(
        n.aps as u64,
        n.antennas_per_ap as u64,
        n.users as u64,
        n.tau_p as u64,
        n.tau_u as u64,
    )?;
    println!(
        "L = {}, N_a = {}, M = {}, K = {}, tau_p = {}, tau_u = {}",
        n.aps,
        n.antennas_per_ap,
        n.total_antennas(),
        n.users,
        n.tau_p,
        n.tau_u
    );
    println!(
        "{:<12} {:>16} {:>20} {:>12}",
        "combiner", "mult/ch.use", "exact", "fronthaul"
    );
    for row in &table {
        println!(
            "{:<12} {:>16.2} {:>20} {:>12}",
            row.combiner, row.complexity, row.complexity_exact, row.fronthaul
        );
    }
    println!("(complexity excludes channel estimation)");
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| cellfree::Error::Io {
        path: cfg.output_dir.clone(),
        source: e,
    })?;
    output::write_costs(&cfg.output_dir.join("costs.csv"), &table)
}

fn run(cfg: &ExperimentConfig) -> Result<()> {
    let started = Instant::now();
    log::info!(
        "running {} setups x {} blocks, M = {}, K = {}",
        cfg.n_setups,
        cfg.n_blocks,
        cfg.network.total_antennas(),
        cfg.network.users
    );
    let results = harness::run_experiment(cfg)?;
    let mut reported: Vec<CombinerKind> = Vec::new();
    for s in &results.skipped {
        if !reported.contains(&s.combiner) {
            eprintln!("{}: {}", s.combiner, s.status);
            reported.push(s.combiner);
        }
    }
    output::write_all(&cfg.output_dir, &results)?;
    println!(
        "wrote {} records to {} in {:.1}s",
        results.records.len(),
        cfg.output_dir.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = match &cli.command {
        Command::Cdf => {
            let dir = cli
                .out
                .clone()
                .or_else(|| resolve(&cli).ok().map(|c| c.output_dir))
                .unwrap_or_else(|| PathBuf::from("out/desk"));
            output::postprocess(&dir)
        }
        cmd => resolve(&cli).and_then(|cfg| match cmd {
            Command::Run => run(&cfg),
            Command::Costs => costs(&cfg),
            Command::Cdf => unreachable!(),
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
