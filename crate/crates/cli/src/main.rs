use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scb_dyn::output::Cell;
use scb_dyn::sweep::Axis;
use scb_dyn::{run_to_dir, sweep_to_dir, ExperimentConfig, RawConfig, RunError, RunReport};

/// Cooper pair box charge dynamics: exact, mean-field and dissipative.
#[derive(Parser)]
#[command(name = "scb-dyn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print nothing on success.
        #[arg(long)]
        quiet: bool,
    },
    /// Run the experiment over a grid of parameter values.
    Sweep {
        config: PathBuf,
        /// key=start:stop:count[:log]; repeat for a multi-dimensional grid.
        #[arg(long = "axis", value_name = "SPEC")]
        axes: Vec<String>,
        /// Worker threads.
        #[arg(long, env = "SCB_DYN_JOBS")]
        jobs: Option<usize>,
        /// Maximum number of grid points (default 1e6 for decay kinds, 1e3 otherwise).
        #[arg(long)]
        max_points: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<(), RunError> {
    match command {
        Command::Run { config, out, quiet } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let report = run_to_dir(&cfg, &dir)?;
            if !quiet {
                print_report(cfg.kind.name(), &report);
            }
        }
        Command::Sweep { config, axes, jobs, max_points, out, quiet } => {
            let raw = RawConfig::load(&config)?;
            let cfg = ExperimentConfig::from_raw(raw.clone())?;
            let axes = axes.iter().map(|a| Axis::parse(a)).collect::<Result<Vec<_>, _>>().map_err(RunError::Usage)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(n) = jobs {
                if n == 0 {
                    return Err(RunError::Usage("--jobs must be at least 1".into()));
                }
                pool = pool.num_threads(n);
            }
            let pool = pool.build().map_err(|e| RunError::Usage(format!("cannot start worker threads: {e}")))?;
            let report = pool.install(|| sweep_to_dir(&raw, &axes, max_points, &dir))?;
            if !quiet {
                print_report(cfg.kind.name(), &report);
            }
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            println!("{}: ok ({})", config.display(), cfg.kind.name());
        }
    }
    Ok(())
}

fn print_report(kind: &str, report: &RunReport) {
    println!("{kind}: wrote {} files to {}", report.files.len() + 1, report.out_dir.display());
    for (name, value) in &report.scalars.0 {
        match value {
            Cell::Empty => {}
            Cell::Text(t) if t.is_empty() => {}
            other => println!("  {name} = {}", other.render()),
        }
    }
}
