use clap::{Parser, Subcommand};
use pressure_lab::cli;
use pressure_lab::config::Scenario;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pressure-lab", version, about = "Pressure estimators for hyperbolic maps")]
struct Args {
    /// Worker threads (accepted for interface stability; runs are
    /// single-threaded so that reports stay byte-deterministic).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Shared orbit cache directory (appended to across runs).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Overrides the scenario's sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments of a scenario file.
    Run {
        /// Scenario JSON path.
        config: PathBuf,
        /// Output directory (default: the scenario's output_dir, else ".").
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Re-run a report's embedded scenario and check the artifacts match.
    Verify {
        /// report.json path.
        report: PathBuf,
    },
    /// Print the runnable system kinds and their scenario JSON shapes.
    ListSystems,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}

fn run(args: Args) -> pressure_lab::Result<ExitCode> {
    match args.command {
        Command::Run { config, output_dir } => {
            let mut scenario = Scenario::from_path(&config)?;
            if let Some(seed) = args.seed {
                scenario.seed = seed;
            }
            let out = output_dir
                .or_else(|| scenario.output_dir.clone().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            let report = cli::run_scenario(&scenario, &out, args.cache_dir.as_deref())?;
            println!(
                "{}: {} pressure estimates, {} invariants, report at {}",
                report.label,
                report.pressures.len(),
                report.invariants.len(),
                out.join("report.json").display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { report } => {
            let mismatches = cli::verify_report(&report)?;
            if mismatches.is_empty() {
                println!("verified: artifacts reproduce byte-for-byte (modulo timestamp)");
                Ok(ExitCode::SUCCESS)
            } else {
                for m in &mismatches {
                    eprintln!("mismatch: {m}");
                }
                Ok(ExitCode::from(3))
            }
        }
        Command::ListSystems => {
            for (name, shape) in cli::system_registry() {
                println!("{name:12} {shape}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
