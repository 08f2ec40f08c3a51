use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "wavestab", version, about = "Stability of periodic traveling waves from the abbreviated action")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output] dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and validation
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for randomized validation
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analyze a single parameter point
    Analyze,
    /// Sweep the configured variable
    Sweep,
    /// Co-periodic Evans function and discriminant scan at a single point
    Evans {
        /// Use the operator shifted by −j² inside the EK Evans system
        #[arg(long)]
        shifted: bool,
    },
    /// Whitham modulation eigenvalues (single point or sweep)
    Modulate,
    /// Randomized identity and cross-pipeline checks over the built-in models
    Validate {
        /// Points per model
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// Include Evans cross-checks
        #[arg(long)]
        evans: bool,
        /// Restrict to these sampler labels
        #[arg(long = "model")]
        models: Vec<String>,
    },
    /// Reproduce one of the catalogued cases
    Reproduce {
        case: String,
    },
}

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let ctx = commands::Context { config: cli.config, out: cli.out, workers: cli.workers, seed: cli.seed };
    let result = match cli.command {
        Command::Analyze => commands::analyze(&ctx),
        Command::Sweep => commands::sweep(&ctx),
        Command::Evans { shifted } => commands::evans(&ctx, shifted),
        Command::Modulate => commands::modulate(&ctx),
        Command::Validate { points, evans, models } => commands::validate(&ctx, points, evans, models),
        Command::Reproduce { case } => commands::reproduce(&ctx, &case),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
