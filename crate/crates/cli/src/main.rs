use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use rddi_core::scenario::{self, RunReport, ScenarioConfig};
use rddi_core::{Error, ErrorKind};

/// Fallback output directory when neither `--out` nor the config sets one.
const OUTPUT_ENV: &str = "RDDI_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "rddi", version, about = "Two atoms coupled through a waveguide near cutoff")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in scenario.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Print the preset as a scenario file instead of running it.
        #[arg(long)]
        print: bool,
    },
    /// Show the built-in scenarios.
    ListPresets,
    /// Validate a scenario file without running it.
    Check { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>().map(Error::kind) {
        Some(ErrorKind::Config) => 2,
        Some(ErrorKind::Domain) => 3,
        Some(ErrorKind::Convergence) => 4,
        Some(ErrorKind::Io) | None => 1,
    }
}

fn load(path: &Path) -> anyhow::Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config { line: 0, msg: format!("cannot read {}: {e}", path.display()) })?;
    scenario::parse(&text).with_context(|| format!("in {}", path.display()))
}

fn output_dir(flag: Option<PathBuf>, cfg: &ScenarioConfig) -> PathBuf {
    flag.or_else(|| cfg.output.dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn print_report(report: &RunReport) {
    for r in &report.runs {
        if let Some(s) = r.summary {
            if report.sweep.is_empty() {
                println!(
                    "{}: C_max = {:.4} at t = {:.4e}, fitted Δ12 = {:.6}",
                    r.model.as_str(),
                    s.c_max,
                    s.t_at_c_max,
                    s.fitted_delta12
                );
            }
        }
    }
    for p in &report.sweep {
        println!(
            "W = {}: Δ12 markov = {:.6}, fitted = {:.6}, C_max = {:.4}",
            p.detuning, p.markov_delta12, p.fitted_delta12, p.c_max
        );
    }
    for (k, v) in &report.record {
        println!("{k} = {v}");
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
}

fn run_config(cfg: &ScenarioConfig, out: Option<PathBuf>) -> anyhow::Result<()> {
    let dir = output_dir(out, cfg);
    let report = scenario::run(cfg, &dir)?;
    print_report(&report);
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, out } => run_config(&load(&config)?, out),
        Command::Preset { name, out, format: Format::Csv, print } => {
            let cfg = scenario::preset(&name).map_err(|e| Error::Config { line: 0, msg: e.to_string() })?;
            if print {
                print!("{}", scenario::serialize(&cfg));
                return Ok(());
            }
            run_config(&cfg, out)
        }
        Command::ListPresets => {
            println!("{:<12} {:>12} {:>12} {:>8}  description", "name", "ω11/Γ", "W/Γ", "z/λ_a");
            for p in scenario::list_presets() {
                println!(
                    "{:<12} {:>12.4e} {:>12} {:>8}  {}",
                    p.name, p.cutoff_over_gamma, p.detuning_over_gamma, p.z_over_lambda, p.description
                );
            }
            Ok(())
        }
        Command::Check { config } => {
            let cfg = load(&config)?;
            println!("{}: ok ({} model)", cfg.name, cfg.model.as_str());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
