//! `critnorm`: runs one experiment per invocation and writes its CSV
//! artifacts with a manifest, or compares artifacts against goldens.
//!
//! Exit status: 0 when every check passes, 1 on a failed check or a
//! numerical failure, 2 on a usage or configuration error.

mod config;
mod experiments;
mod golden;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use config::{parse_entries, Config, Experiment};
use critnorm_core::error::Error;
use golden::{compare_golden, Tolerances};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Compute(m) => write!(f, "computation failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::InadmissibleExponents(_) | Error::InvalidGrid(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Compute(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "critnorm", version, about = "Critical-norm diagnostics for Navier-Stokes flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; CRITNORM_OUT takes precedence.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Upper bound on worker threads.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    workers: u32,
    /// Seed of the random corpus.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the experiment named by the `experiment` key of the config.
    Run(RunArgs),
    NormsSuite(RunArgs),
    MildDecay(RunArgs),
    CknLedger(RunArgs),
    PressureSplit(RunArgs),
    Smallness(RunArgs),
    Concentration(RunArgs),
    BesovDecay(RunArgs),
    /// Compares the CSV files of an artifact directory with a golden one.
    Compare {
        artifacts: PathBuf,
        golden: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        rtol: f64,
        #[arg(long, default_value_t = 1e-12)]
        atol: f64,
        /// Per-column relative tolerance, `column=value`; repeatable.
        #[arg(long = "tol", value_name = "COLUMN=RTOL")]
        columns: Vec<String>,
    },
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn load_config(args: &RunArgs, experiment: Option<Experiment>) -> Result<Config, CliError> {
    let entries = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            parse_entries(&text)?
        }
        None if experiment.is_some() => BTreeMap::new(),
        None => return Err(CliError::Usage("`run` needs --config".into())),
    };
    Config::new(entries, experiment)
}

fn output_dir(args: &RunArgs, cfg: &Config) -> PathBuf {
    if let Some(env) = std::env::var_os("CRITNORM_OUT").filter(|v| !v.is_empty()) {
        return PathBuf::from(env);
    }
    args.out.clone().or_else(|| cfg.raw("out").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("critnorm-out"))
}

fn manifest(cfg: &Config, args: &RunArgs, files: &[(String, String)], checks: &[(String, bool)]) -> String {
    let hashed = format!("{}seed={}\n", cfg.canonical(), args.seed);
    let mut s = format!(
        "experiment={}\ncode_version={} {}\nconfig_sha256={}\nseed={}\nworkers={}\n",
        cfg.experiment,
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        sha256_hex(hashed.as_bytes()),
        args.seed,
        args.workers
    );
    for (name, body) in files {
        s.push_str(&format!("file.{name}.sha256={}\n", sha256_hex(body.as_bytes())));
    }
    for (name, pass) in checks {
        s.push_str(&format!("check.{}={}\n", name.replace(' ', "_"), if *pass { "pass" } else { "fail" }));
    }
    s
}

fn write_all(dir: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    for (name, body) in files {
        fs::write(dir.join(name), body).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
    }
    Ok(())
}

fn run(args: &RunArgs, experiment: Option<Experiment>) -> Result<bool, CliError> {
    let cfg = load_config(args, experiment)?;
    let dir = output_dir(args, &cfg);
    let art = experiments::run_experiment(&cfg, args.seed)?;
    let mut files = art.files.clone();
    files.push(("manifest.txt".into(), manifest(&cfg, args, &art.files, &art.checks)));
    write_all(&dir, &files)?;
    for (name, pass) in &art.checks {
        println!("{} {name}", if *pass { "ok  " } else { "FAIL" });
    }
    println!("artifacts written to {}", dir.display());
    Ok(art.checks.iter().all(|(_, p)| *p))
}

fn compare(artifacts: &Path, golden: &Path, rtol: f64, atol: f64, columns: &[String]) -> Result<bool, CliError> {
    let mut tol = Tolerances { rtol, atol, ..Tolerances::default() };
    for c in columns {
        let (name, v) = c.split_once('=').ok_or_else(|| CliError::Usage(format!("--tol expects column=rtol, got `{c}`")))?;
        let v: f64 = v.parse().map_err(|_| CliError::Usage(format!("cannot parse tolerance `{v}`")))?;
        tol.columns.insert(name.to_string(), v);
    }
    let diffs = compare_golden(artifacts, golden, &tol)?;
    for d in &diffs {
        println!("{d}");
    }
    Ok(diffs.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a, None),
        Command::NormsSuite(a) => run(a, Some(Experiment::NormsSuite)),
        Command::MildDecay(a) => run(a, Some(Experiment::MildDecay)),
        Command::CknLedger(a) => run(a, Some(Experiment::CknLedger)),
        Command::PressureSplit(a) => run(a, Some(Experiment::PressureSplit)),
        Command::Smallness(a) => run(a, Some(Experiment::Smallness)),
        Command::Concentration(a) => run(a, Some(Experiment::Concentration)),
        Command::BesovDecay(a) => run(a, Some(Experiment::BesovDecay)),
        Command::Compare { artifacts, golden, rtol, atol, columns } => compare(artifacts, golden, *rtol, *atol, columns),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("critnorm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
