mod config;
mod table;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::RunConfig;
use confocal_core::verify::{CheckName, VerificationReport};

#[derive(Parser)]
#[command(name = "confocal", version, about = "Fields of confocal ellipsoids and checks of their classical theorems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Potential and force at the configured points, as CSV.
    Eval(Common),
    /// Run verification checks and write a JSON report.
    Verify(Common),
    /// Potential and force over the configured grid, as CSV.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Check to run (repeatable); `all` or none runs every check.
    #[arg(long = "check")]
    checks: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the effective configuration with all defaults and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Serialize)]
struct RunInfo<'a> {
    seed: u64,
    version: &'static str,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct CheckEntry {
    #[serde(flatten)]
    report: Option<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pass: Option<bool>,
}

#[derive(Serialize)]
struct Report<'a> {
    run: RunInfo<'a>,
    checks: Vec<CheckEntry>,
}

/// Errors that map to exit code 2.
struct ConfigError(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for ConfigError {
    fn from(e: E) -> Self {
        ConfigError(e.into())
    }
}

fn load(common: &Common, required: bool) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None if required => return Err(ConfigError(anyhow::anyhow!("--config is required"))),
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => stdout(text),
    }
}

/// A reader that closed the pipe early is not an error.
fn stdout(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn selected(names: &[String]) -> Result<Vec<CheckName>, ConfigError> {
    if names.is_empty() || names.iter().any(|n| n == "all") {
        return Ok(CheckName::ALL.to_vec());
    }
    Ok(names.iter().map(|n| n.parse()).collect::<Result<_, _>>()?)
}

fn print_config(cfg: &RunConfig) -> Result<(), ConfigError> {
    stdout(&(serde_json::to_string_pretty(&cfg.explicit()?)? + "\n"))?;
    Ok(())
}

fn cmd_table(common: &Common, sweep: bool) -> Result<ExitCode, ConfigError> {
    let cfg = load(common, !common.print_config)?;
    if common.print_config {
        print_config(&cfg)?;
        return Ok(ExitCode::SUCCESS);
    }
    let src = cfg.source.build()?;
    let points = if sweep { cfg.grid.points(cfg.source.point_dim())? } else { cfg.points.clone() };
    let text = table::render(&cfg.source, &src, &cfg.effective_quadrature(), &points);
    write(cfg.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(common: &Common) -> Result<ExitCode, ConfigError> {
    let cfg = load(common, false)?;
    if common.print_config {
        print_config(&cfg)?;
        return Ok(ExitCode::SUCCESS);
    }
    let checks = selected(&common.checks)?;
    let configs = checks.iter().map(|c| cfg.check_config(*c)).collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::new();
    let mut all_pass = true;
    for (check, cc) in checks.iter().zip(&configs) {
        let entry = match check.run(cc) {
            Ok(r) => {
                all_pass &= r.pass;
                eprintln!("{:<11} {} ({:.0} ms)", r.name, if r.pass { "pass" } else { "FAIL" }, r.time_ms);
                CheckEntry { report: Some(r), error: None, name: None, pass: None }
            }
            Err(e) => {
                all_pass = false;
                eprintln!("{check:<11} ERROR {e}");
                CheckEntry {
                    report: None,
                    error: Some(e.to_string()),
                    name: Some(check.to_string()),
                    pass: Some(false),
                }
            }
        };
        entries.push(entry);
    }
    let report =
        Report { run: RunInfo { seed: cfg.seed, version: env!("CARGO_PKG_VERSION"), config: &cfg }, checks: entries };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write(cfg.out.as_deref(), &text)?;
    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Eval(c) => cmd_table(c, false),
        Command::Sweep(c) => cmd_table(c, true),
        Command::Verify(c) => cmd_verify(c),
    };
    match result {
        Ok(code) => code,
        Err(ConfigError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
