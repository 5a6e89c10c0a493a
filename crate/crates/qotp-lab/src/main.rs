use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qotp_lab::harness::{emit_report, run_experiment, Command, ExperimentConfig, Format, HarnessError};

/// Seeded experiment driver.
#[derive(Debug, Parser)]
#[command(name = "qotp-lab", version)]
struct Cli {
    /// One of trap-security, twirl-check, gadget-check, qotp-run, qotp-attack, sim-compare,
    /// teleport-check, brotp-check.
    command: String,
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the JSON report and the CSV sweep.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let command: Command = cli.command.parse()?;
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::new(command, 0),
    };
    if config.command != command {
        return Err(HarnessError::Config(format!("config is for {}, not {command}", config.command)));
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<bool, HarnessError> {
    let config = load(cli)?;
    let report = run_experiment(&config)?;
    for c in &report.checks {
        println!("{}", c.line());
    }
    let dir = cli.out.clone().or_else(|| config.outputs.dir.as_ref().map(PathBuf::from));
    if let Some(dir) = dir {
        let mut written = emit_report(&report, Format::Json, &dir)?;
        if !report.rows.is_empty() {
            written.extend(emit_report(&report, Format::Csv, &dir)?);
        }
        for p in written {
            eprintln!("wrote {}", p.display());
        }
    }
    if let Some(t) = report.wall_clock {
        eprintln!("{}: {:.3} s", config.command, t.as_secs_f64());
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
