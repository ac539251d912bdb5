use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};

use ob2d::checks::{run_all, Level};
use ob2d::experiments::{run_sweep, run_twin, SweepAxis, SweepSpec, TwinSpec};
use ob2d::io::{resume_in_dir, run_to_dir, RunConfig};
use ob2d::timestepper::StepStatus;
use ob2d::Error;

const EXIT_BLOWUP: u8 = 3;

#[derive(Parser)]
#[command(name = "ob2d", version, about = "2D Oldroyd-B pseudo-spectral solver with a diagnostics ledger")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its ledger.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `output.dir` of the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from the checkpoint in the output directory.
        #[arg(long)]
        restart: bool,
    },
    /// Sweep one parameter over a list of values.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Horizon of every run; defaults to the config's `t_end`.
        #[arg(long)]
        t_end: Option<f64>,
        /// Run sweep points concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Run base and perturbed data side by side.
    Twin {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Time between rows of the difference ledger.
        #[arg(long, default_value_t = 0.1)]
        norm_cadence: f64,
    },
    /// Run the invariant suite.
    Check {
        #[arg(long, conflicts_with = "full")]
        quick: bool,
        #[arg(long)]
        full: bool,
    },
}

fn out_dir(cfg: &RunConfig, out: Option<PathBuf>) -> Result<PathBuf, Error> {
    out.or_else(|| cfg.output.dir.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set output.dir".into()))
}

fn status_code(status: StepStatus) -> ExitCode {
    match status {
        StepStatus::Ok => ExitCode::SUCCESS,
        _ => ExitCode::from(EXIT_BLOWUP),
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Run { config, out, restart } => {
            let cfg = RunConfig::load(&config)?;
            let dir = out_dir(&cfg, out)?;
            let outcome = if restart { resume_in_dir(&cfg, &dir)? } else { run_to_dir(&cfg, &dir)? };
            info!(
                "{} after {} steps, t = {}, {:.1}s",
                outcome.status.as_str(),
                outcome.steps,
                outcome.final_state.time,
                outcome.wall_seconds
            );
            Ok(status_code(outcome.status))
        }
        Command::Sweep { config, axis, values, out, t_end, parallel } => {
            let base = RunConfig::load(&config)?;
            let mut spec = SweepSpec::new(base, axis, values);
            if let Some(t) = t_end {
                spec.t_end = t;
            }
            let table = run_sweep(&spec, Some(&out), parallel)?;
            for r in &table.rows {
                info!("{axis}={}: {} ({} steps, {:.1}s)", r.value, r.status, r.steps, r.wall_seconds);
            }
            let worst = table.rows.iter().any(|r| r.status == "blowup" || r.status == "nonfinite");
            Ok(if worst { ExitCode::from(EXIT_BLOWUP) } else { ExitCode::SUCCESS })
        }
        Command::Twin { config, delta, out, seed, norm_cadence } => {
            let cfg = RunConfig::load(&config)?;
            let spec = TwinSpec { perturbation_size: delta, perturbation_seed: seed, norm_cadence };
            let report = run_twin(&spec, &cfg, Some(Path::new(&out)))?;
            let last = report.terminal();
            info!(
                "t = {}: |V|_2 = {:e}, |W|_2 = {:e}, max ratio {:e}",
                last.time,
                last.v_l2,
                last.w_l2,
                report.max_ratio()
            );
            Ok(status_code(report.status))
        }
        Command::Check { quick: _, full } => {
            let level = if full { Level::Full } else { Level::Quick };
            let reports = run_all(level, |r| println!("{}", r.line()));
            let failed = reports.iter().filter(|r| !r.passed).count();
            let total: f64 = reports.iter().map(|r| r.seconds).sum();
            println!("{} of {} checks passed in {total:.1}s", reports.len() - failed, reports.len());
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("OB2D_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .map_err(|_| Error::Config(format!("OB2D_THREADS must be a positive integer, got `{value}`")))?;
    if threads == 0 {
        return Err(Error::Config("OB2D_THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match configure_threads().and_then(|_| run(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
