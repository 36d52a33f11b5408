use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, ValueEnum};
use hitchlab_cli::commands;
use hitchlab_cli::config::Config;
use hitchlab_cli::report::{write_json, ErrorReport};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Mesh,
    Theta,
    Harmonic,
    Hitchin,
    Disk,
    PshReport,
    Hessian,
    Crosscheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Mesh => "mesh",
            Command::Theta => "theta",
            Command::Harmonic => "harmonic",
            Command::Hitchin => "hitchin",
            Command::Disk => "disk",
            Command::PshReport => "psh-report",
            Command::Hessian => "hessian",
            Command::Crosscheck => "crosscheck",
        }
    }
}

/// Energy-functional experiments on a genus-2 surface.
///
/// Exit status: 0 when every verdict passes, 2 when a verdict is
/// inconclusive at the finite-difference noise level, 1 on failure.
#[derive(Debug, Parser)]
#[command(name = "hitchlab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Rank of the cyclic Higgs field.
    #[arg(long)]
    n: Option<usize>,
    /// Extra `key=value` overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn load(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(l) = cli.level {
        cfg.set("level", &l.to_string(), "command line")?;
    }
    if let Some(s) = cli.seed {
        cfg.set("seed", &s.to_string(), "command line")?;
    }
    if let Some(n) = cli.n {
        cfg.set("n", &n.to_string(), "command line")?;
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| anyhow::anyhow!("--set expects KEY=VALUE, got `{kv}`"))?;
        cfg.set(k.trim(), v.trim(), "command line")?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let cfg = load(&cli);
    let result = cfg
        .as_ref()
        .map_err(|e| anyhow::anyhow!("{e:#}"))
        .and_then(|c| commands::run(name, c, &cli.out));
    match result {
        Ok(report) => {
            let code = report.exit_code();
            if let Err(e) = report.write(&cli.out) {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
            for v in &report.verdicts {
                println!("{:?}\t{}\t{}", v.status, v.criterion, v.detail);
            }
            println!("{}", report.verdict);
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let rep = ErrorReport::from_error(name, cfg.as_ref().ok(), &e);
            if std::fs::create_dir_all(&cli.out).is_ok() {
                let _ = write_json(&cli.out.join("error.json"), &rep);
            }
            ExitCode::from(1)
        }
    }
}
