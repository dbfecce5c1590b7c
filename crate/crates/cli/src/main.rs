use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use csi_foc::metrics::{compute_metrics, MetricsConfig};
use csi_foc::output::{metrics_json, write_outputs};
use csi_foc::plot::emit_plots;
use csi_foc::sweep::{parse_values, sweep, write_sweep_csv};
use csi_foc::trace::read_csv_file;
use csi_foc::{run_scenario, Scenario};

#[derive(Parser)]
#[command(name = "csi-foc", version, about = "I-f startup and sensorless FOC transition simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write trace, metrics, resolved scenario and plots.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the scenario's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Skip the SVG figures.
        #[arg(long)]
        no_plots: bool,
    },
    /// Run one variant per value of a single parameter and tabulate metrics.
    Sweep {
        scenario: PathBuf,
        /// Dotted path (`transition.hc_dtheta`) or JSON pointer.
        #[arg(long)]
        param: String,
        /// Comma-separated JSON values.
        #[arg(long)]
        values: String,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the standard figures from a trace CSV.
    Plot {
        trace: PathBuf,
        /// Output directory; defaults to the trace's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute metrics from a trace CSV and print them as JSON.
    Metrics { trace: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<ExitCode> {
    match cmd {
        Command::Run {
            scenario,
            out,
            seed,
            no_plots,
        } => run(&scenario, &out, seed, no_plots),
        Command::Sweep {
            scenario,
            param,
            values,
            out,
        } => {
            let base = Scenario::from_path(&scenario)?;
            let values = parse_values(&values);
            if values.is_empty() {
                bail!("--values is empty");
            }
            let rows = sweep(&base, &param, &values)?;
            match out {
                Some(path) => {
                    let f = std::fs::File::create(&path).with_context(|| format!("{}", path.display()))?;
                    write_sweep_csv(&param, &rows, f)?;
                }
                None => write_sweep_csv(&param, &rows, std::io::stdout().lock())?,
            }
            let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
            if failed > 0 {
                eprintln!("{failed} of {} variants failed", rows.len());
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Plot { trace, out } => {
            let records = read_csv_file(&trace)?;
            if records.is_empty() {
                bail!("{}: trace has no rows", trace.display());
            }
            let dir = out.unwrap_or_else(|| parent_dir(&trace));
            for p in emit_plots(&records, &dir)? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Metrics { trace } => {
            let records = read_csv_file(&trace)?;
            print!("{}", metrics_json(&compute_metrics(&records, &MetricsConfig::default())));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn parent_dir(p: &Path) -> PathBuf {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_owned(),
        _ => PathBuf::from("."),
    }
}

fn run(path: &Path, out: &Path, seed: Option<u64>, no_plots: bool) -> anyhow::Result<ExitCode> {
    let mut sc = Scenario::from_path(path)?;
    if let Some(seed) = seed {
        sc.sim.rng_seed = seed;
    }
    let started = std::time::Instant::now();
    let run = run_scenario(&sc)?;
    log::info!("simulated {} s in {:.2?}", sc.sim.t_end, started.elapsed());
    write_outputs(out, &sc, &run.trace, &run.metrics)?;
    if !no_plots {
        emit_plots(&run.trace, out)?;
    }
    print!("{}", metrics_json(&run.metrics));
    if let Some(reason) = &run.metrics.fault {
        eprintln!("fault: {reason}");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}
