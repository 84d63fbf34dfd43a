use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sensornet::scenario::{self, ScenarioConfig, ScenarioRun};
use sensornet::{Error, Result, TerminationReason};

/// Connectivity-constrained sensor placement.
#[derive(Parser)]
#[command(name = "sensornet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trajectory and summary files.
    Solve {
        /// Scenario TOML file; may be omitted when --preset is given.
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, overriding the config's `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Built-in preset to start from.
        #[arg(long)]
        preset: Option<String>,
        /// Keep every K-th iterate in the trajectory file.
        #[arg(long, value_name = "K")]
        thin: Option<usize>,
    },
    /// Run a scenario once per value of one parameter, in order.
    Sweep {
        config: Option<PathBuf>,
        /// `key=v1,v2,...`, e.g. `tau=-1,0.1,1`.
        #[arg(long, allow_hyphen_values = true)]
        param: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, value_name = "K")]
        thin: Option<usize>,
    },
    /// Tabulate the summaries found in one or more run directories.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Print CSV instead of an aligned table.
        #[arg(long)]
        csv: bool,
    },
    /// List the built-in presets.
    Presets,
}

fn base_config(
    config: Option<PathBuf>,
    preset: Option<String>,
    seed: Option<u64>,
    thin: Option<usize>,
) -> Result<ScenarioConfig> {
    let mut c = match (config, preset) {
        (Some(path), None) => scenario::load_config(path)?,
        (None, Some(name)) => scenario::preset(&name)?,
        (Some(_), Some(_)) => {
            return Err(Error::InvalidArgument(
                "give either a config path or --preset, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::InvalidArgument(
                "a config path or --preset is required".into(),
            ))
        }
    };
    if let Some(s) = seed {
        c.solver.seed = s;
    }
    if let Some(k) = thin {
        c.thin = k;
    }
    c.validate()?;
    Ok(c)
}

fn describe(out: &mut impl Write, run: &ScenarioRun) -> io::Result<()> {
    let s = &run.summary;
    writeln!(
        out,
        "{}: H={:.6e} det_M={:.6e} lambda2={:.4e} feasibility={:.2e} kkt={:.2e} iterations={} termination={:?}",
        run.run_id,
        s.coverage,
        s.det_m,
        s.lambda2,
        s.feasibility,
        s.kkt.max(),
        s.iterations,
        s.termination
    )?;
    writeln!(out, "  wrote {}", run.trajectory_path.display())?;
    writeln!(out, "  wrote {}", run.summary_path.display())
}

fn failed(runs: &[ScenarioRun]) -> bool {
    runs.iter()
        .any(|r| r.summary.termination == TerminationReason::NumericalFailure)
}

fn run(cli: Cli) -> Result<bool> {
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Solve {
            config,
            seed,
            out,
            preset,
            thin,
        } => {
            let c = base_config(config, preset, seed, thin)?;
            let run = scenario::run_scenario(&c, out.as_deref())?;
            describe(&mut stdout, &run)?;
            Ok(!failed(&[run]))
        }
        Command::Sweep {
            config,
            param,
            seed,
            out,
            preset,
            thin,
        } => {
            let c = base_config(config, preset, seed, thin)?;
            let (key, values) = scenario::parse_sweep(&param)?;
            let runs = scenario::sweep(&c, &key, &values, out.as_deref())?;
            for r in &runs {
                describe(&mut stdout, r)?;
            }
            let summaries: Vec<_> = runs.iter().map(|r| r.summary.clone()).collect();
            write!(stdout, "{}", scenario::compare_runs(&summaries).to_text())?;
            Ok(!failed(&runs))
        }
        Command::Report { dirs, csv } => {
            let mut summaries = Vec::new();
            for d in &dirs {
                summaries.extend(scenario::load_run_dir(d)?);
            }
            let table = scenario::compare_runs(&summaries);
            write!(
                stdout,
                "{}",
                if csv { table.to_csv() } else { table.to_text() }
            )?;
            Ok(true)
        }
        Command::Presets => {
            for name in scenario::preset_names() {
                writeln!(stdout, "{name}")?;
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: solver stopped with numerical_failure");
            ExitCode::from(2)
        }
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
