use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use shor_teleport::experiment::{
    run_characterize, run_fit, run_teleport, run_validate, write_fit, ExperimentConfig, OutputFormat, Scenario, Shots,
};
use shor_teleport::Result;

#[derive(Parser)]
#[command(name = "shor-teleport", version, about = "Teleport a physical qubit into the nine-qubit Shor code")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// JSON experiment configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Exact expectation values instead of sampled shots.
    #[arg(long, global = true)]
    exact: bool,
    /// Output directory; the report goes to stdout when neither this nor the config names one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Resource fidelity, code-space probability and CHSH.
    Characterize,
    /// Teleportation fidelities per input.
    Teleport,
    /// Calibrate the noise model against target values.
    Fit,
    /// Run the self-check suite.
    Validate,
}

#[derive(ValueEnum, Clone, Copy)]
enum Format {
    Json,
    Csv,
    Both,
}

impl Verb {
    fn scenario(self) -> Scenario {
        match self {
            Verb::Characterize => Scenario::Characterize,
            Verb::Teleport => Scenario::Teleport,
            Verb::Fit => Scenario::Fit,
            Verb::Validate => Scenario::Validate,
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::new(cli.verb.scenario()),
    };
    if let Some(s) = cli.seed {
        cfg.noise.seed = s;
    }
    if cli.exact {
        cfg.shots = Shots::Exact;
    }
    if let Some(dir) = &cli.out {
        cfg.output.dir = Some(dir.clone());
    }
    if let Some(f) = cli.format {
        cfg.output.format = match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
            Format::Both => OutputFormat::Both,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report_paths(paths: &[PathBuf]) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

/// Returns whether the run succeeded.
fn run(cli: &Cli) -> Result<bool> {
    let cfg = load(cli)?;
    let dir = cfg.output.dir.clone();
    let format = cfg.output.format;
    match cli.verb {
        Verb::Characterize | Verb::Teleport => {
            let rec = if matches!(cli.verb, Verb::Characterize) { run_characterize(&cfg)? } else { run_teleport(&cfg)? };
            match dir {
                Some(d) => report_paths(&rec.write(&d, format)?),
                None if format == OutputFormat::Csv => print!("{}", rec.to_csv()?),
                None => print!("{}", rec.to_json()?),
            }
            Ok(true)
        }
        Verb::Fit => {
            let fit = run_fit(&cfg)?;
            match dir {
                Some(d) => report_paths(&write_fit(&fit, &d, format)?),
                None => println!("{}", serde_json::to_string_pretty(&fit)?),
            }
            if fit.grid_only {
                eprintln!("fit did not improve on the grid seed (grid-only)");
            }
            Ok(true)
        }
        Verb::Validate => {
            let report = run_validate(&cfg)?;
            match dir {
                Some(d) => report_paths(&report.write(&d, format)?),
                None => println!("{}", serde_json::to_string_pretty(&report)?),
            }
            for c in &report.checks {
                eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                for f in &c.failures {
                    eprintln!("    {f}");
                }
            }
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
