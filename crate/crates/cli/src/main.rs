use clap::{Args, Parser, Subcommand};
use delayrec::{run_file, Command, RunOptions, EXIT_CONFIG};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "delayrec", version, about = "Delay-coordinate reconstruction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Alpha-embedding check of a delay map
    Embed(Flags),
    /// Separated-set entropy estimate, optionally against the reconstruction
    Entropy(Flags),
    /// Chain recurrent cells of a transition graph
    Chainrec(Flags),
    /// Trajectory-separation certificate search or evaluation
    Tsp(Flags),
    /// Coincidence counts along separated orbits
    Coincide(Flags),
    /// Orbit-class inference from two observation series
    InferOrbit(Flags),
    /// Density of embedding observables in a seeded family
    ScanGeneric(Flags),
    /// Exhaustive finite and analytic chain-recurrence batteries
    OracleSuite(OracleFlags),
    /// Run whichever command the config names
    Run(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct OracleFlags {
    /// Optional; the default batteries run without one
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Overrides the config's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; defaults to $DELAYREC_OUT, then ./runs
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores
    #[arg(long)]
    threads: Option<usize>,
    /// Re-check certificates and witnesses
    #[arg(long)]
    verify: bool,
}

const DEFAULT_ORACLE_CONFIG: &str = "name = \"oracle-suite\"\ncommand = \"oracle-suite\"\n";

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, config, common) = match cli.command {
        Sub::Embed(f) => (Some(Command::Embed), Some(f.config), f.common),
        Sub::Entropy(f) => (Some(Command::Entropy), Some(f.config), f.common),
        Sub::Chainrec(f) => (Some(Command::Chainrec), Some(f.config), f.common),
        Sub::Tsp(f) => (Some(Command::Tsp), Some(f.config), f.common),
        Sub::Coincide(f) => (Some(Command::Coincide), Some(f.config), f.common),
        Sub::InferOrbit(f) => (Some(Command::InferOrbit), Some(f.config), f.common),
        Sub::ScanGeneric(f) => (Some(Command::ScanGeneric), Some(f.config), f.common),
        Sub::OracleSuite(f) => (Some(Command::OracleSuite), f.config, f.common),
        Sub::Run(f) => (None, Some(f.config), f.common),
    };
    if let Some(threads) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    let options = RunOptions {
        command,
        seed: common.seed,
        out: common.out,
        verify: common.verify,
    };
    let outcome = match config {
        Some(path) => run_file(&path, &options),
        None => delayrec::LoadedConfig::parse(DEFAULT_ORACLE_CONFIG).and_then(|c| delayrec::run(&c, &options)),
    };
    match outcome {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            println!("wrote {}", outcome.dir.display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
