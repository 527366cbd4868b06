use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use zrmhd::app::{command_run, command_verify, threads_from_env, verify_status, AppError};
use zrmhd::config::{Mode, RunConfig};

/// Zero-resistivity MHD solver: incompressible runs, low-Mach compressible
/// runs, Mach-number sweeps and an invariant self-check.
#[derive(Parser)]
#[command(name = "zrmhd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the mode selected in a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run the invariant suite; exits 0 iff every check passes.
    Verify,
    /// Print a config with every default filled in.
    DumpConfig {
        /// Config to normalize; without it the defaults for `--mode` are printed.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "incompressible")]
        mode: CliMode,
    },
    /// Run a Mach-number sweep from a config, whatever its `mode`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads (default: $ZRMHD_THREADS or 1).
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum CliMode {
    Incompressible,
    Compressible,
    LimitSweep,
    Verify,
}

impl From<CliMode> for Mode {
    fn from(m: CliMode) -> Self {
        match m {
            CliMode::Incompressible => Mode::Incompressible,
            CliMode::Compressible => Mode::Compressible,
            CliMode::LimitSweep => Mode::LimitSweep,
            CliMode::Verify => Mode::Verify,
        }
    }
}

fn execute(command: Command) -> Result<(), AppError> {
    match command {
        Command::Run { config, output_dir } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            let threads = threads_from_env()?;
            let summary = command_run(&cfg, threads)?;
            println!(
                "{} run finished at t = {} in {:.1}s; wrote {} files to {}",
                summary.mode.name(),
                summary.t_final,
                summary.wall_seconds,
                summary.files.len(),
                cfg.output_dir.display()
            );
            Ok(())
        }
        Command::Verify => {
            let report = command_verify(|c| println!("{c}"));
            let passed = report.checks.iter().filter(|c| c.passed()).count();
            println!("{passed}/{} checks passed", report.checks.len());
            verify_status(&report)
        }
        Command::DumpConfig { config, mode } => {
            let cfg = match config {
                Some(path) => RunConfig::load(path)?,
                None => RunConfig::with_mode(mode.into()),
            };
            print!("{}", cfg.to_toml());
            Ok(())
        }
        Command::Sweep {
            config,
            output_dir,
            threads,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            cfg.mode = Mode::LimitSweep;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            cfg.validate()?;
            let threads = match threads {
                Some(t) => t.max(1),
                None => threads_from_env()?,
            };
            let summary = command_run(&cfg, threads)?;
            println!(
                "sweep finished in {:.1}s; results in {}",
                summary.wall_seconds,
                cfg.output_dir.join("sweep.csv").display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
