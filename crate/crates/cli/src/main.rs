use clap::{Parser, Subcommand};
use coordsim_cli::{cmd_region, cmd_simulate, cmd_verify, SimulateOptions, EXIT_FAILURE};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "coordsim",
    version,
    about = "Coordination-code simulations and rate-region queries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Replaces the seed given in the `--spec` file.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo sweep of a spec and write a CSV.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep rows already in the output file and run only the missing cells.
        #[arg(long)]
        resume: bool,
    },
    /// Solve the rate-delta curve of a spec and write a CSV.
    Region {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the acceptance suites and print a pass/fail report.
    Verify {
        /// Optional spec whose `verify` section overrides tolerances.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Simulate { spec, out, resume } => cmd_simulate(
            &spec,
            &out,
            &SimulateOptions {
                seed_override: cli.seed_override,
                resume,
            },
        ),
        Command::Region { spec, out } => cmd_region(&spec, &out, cli.seed_override),
        Command::Verify { spec } => cmd_verify(spec.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.workers {
        Some(0) => {
            eprintln!("coordsim: --workers must be at least 1");
            EXIT_FAILURE
        }
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => {
                eprintln!("coordsim: cannot start {w} workers: {e}");
                EXIT_FAILURE
            }
        },
        None => run(cli),
    };
    ExitCode::from(code as u8)
}
