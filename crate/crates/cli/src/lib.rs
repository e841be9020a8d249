//! Library half of the `gapforge` binary: configuration, commands, output
//! files and the acceptance runner.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod manifest;
pub mod svg;
pub mod verify;

use clap::Parser;
use serde::Deserialize;
use std::path::PathBuf;

use crate::commands::{Outcome, RunContext};
use crate::config::{load_config, Command, ConfigFile};
use crate::error::{CliError, CliResult, ExitCode};
use crate::format::json_text;
use crate::manifest::{now, OutputDir, RunManifest};
use crate::verify::{Group, VerifyOptions};

#[derive(Debug, Parser)]
#[command(
    name = "gapforge",
    version,
    about = "Optimize spectral band gaps of periodic Schrodinger operators"
)]
pub struct Cli {
    /// Command to run; may also come from the `command` key of the config.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON or TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "GAPFORGE_THREADS")]
    pub threads: Option<usize>,
    /// Seed for randomized initial guesses.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Restrict `verify` to these groups.
    #[arg(long, value_enum)]
    pub only: Vec<Group>,
    /// Restrict `verify` to the criteria with these row ids.
    #[arg(long = "row")]
    pub rows: Vec<String>,
    /// Fixture directory for `verify`.
    #[arg(long)]
    pub testdata: Option<PathBuf>,
    /// Perturb the tabulated Bessel zero (fault injection for `verify`).
    #[arg(long, hide = true)]
    pub tamper_bessel: bool,
}

/// Optional body of a `verify` configuration.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyFile {
    #[serde(default)]
    only: Vec<Group>,
    #[serde(default)]
    rows: Vec<String>,
    testdata: Option<PathBuf>,
}

fn empty_config() -> ConfigFile {
    ConfigFile {
        path: PathBuf::from("."),
        command: None,
        seed: None,
        threads: None,
        out: None,
        body: Default::default(),
    }
}

/// Resolve the command from flags and file; flags win for everything else.
fn merge(cli: &Cli) -> CliResult<(Command, ConfigFile, RunContext)> {
    let mut file = match &cli.config {
        Some(p) => load_config(p)?,
        None => empty_config(),
    };
    let command = match (cli.command, file.command) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Invalid(format!(
                "command `{}` conflicts with `{}` in the config file",
                a.name(),
                b.name()
            )))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(CliError::Invalid("no command given".into())),
    };
    if cli.config.is_none() && command != Command::Verify {
        return Err(CliError::Invalid(format!(
            "`{}` needs --config",
            command.name()
        )));
    }
    if cli.seed.is_some() {
        file.seed = cli.seed;
    }
    let threads = cli.threads.or(file.threads).unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    if threads == 0 {
        return Err(CliError::Field {
            path: file.path.clone(),
            field: "threads".into(),
            message: "must be at least 1".into(),
        });
    }
    let out = match (&cli.out, &file.out) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => file.resolve(o),
        (None, None) => PathBuf::from("out"),
    };
    Ok((command, file, RunContext { out, threads }))
}

fn run_verify(cli: &Cli, file: &ConfigFile, ctx: &RunContext) -> CliResult<Outcome> {
    let body: VerifyFile = if file.body.is_empty() {
        VerifyFile::default()
    } else {
        file.parse_body()?
    };
    let mut opts = VerifyOptions::default();
    opts.only = if cli.only.is_empty() {
        body.only
    } else {
        cli.only.clone()
    };
    opts.rows = if cli.rows.is_empty() {
        body.rows
    } else {
        cli.rows.clone()
    };
    if let Some(t) = cli
        .testdata
        .clone()
        .or(body.testdata.map(|t| file.resolve(&t)))
    {
        opts.testdata = t;
    }
    if cli.tamper_bessel {
        opts.bessel = verify::tampered_bessel();
    }
    let started = now();
    let report = verify::run(&opts, |row| {
        println!(
            "{:<4} {}  {}  ({:.1} s)",
            row.id,
            if row.passed { "PASS" } else { "FAIL" },
            row.title,
            row.seconds
        );
    });
    let mut dir = OutputDir::create(&ctx.out)?;
    dir.write("verify.json", &json_text(&report))?;
    dir.write("verify.txt", &verify::table(&report))?;
    let config = serde_json::json!({
        "only": opts.only,
        "rows": opts.rows,
        "testdata": opts.testdata,
        "tamper_bessel": cli.tamper_bessel,
    });
    let manifest = dir.finish(RunManifest {
        command: Command::Verify.name().into(),
        config,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seeds: Vec::new(),
        threads: ctx.threads,
        started_at: started,
        finished_at: 0.0,
        outputs: Vec::new(),
    })?;
    let failed: Vec<&str> = report
        .rows
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.id.as_str())
        .collect();
    let summary = format!(
        "{}/{} rows passed in {:.1} s",
        report.rows.len() - failed.len(),
        report.rows.len(),
        report.seconds
    );
    Ok(Outcome {
        exit: if failed.is_empty() {
            ExitCode::Success
        } else {
            ExitCode::Numerical
        },
        summary,
        reason: (!failed.is_empty()).then(|| format!("failed rows: {}", failed.join(", "))),
        manifest,
    })
}

/// Parse-free entry point: run a command and return its outcome.
pub fn run(cli: &Cli) -> CliResult<Outcome> {
    let (command, file, ctx) = merge(cli)?;
    // A second initialization (tests calling `run` twice) keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.threads)
        .build_global();
    match command {
        Command::Bands => commands::run_bands(&file, &ctx),
        Command::Optimize1d => commands::run_optimize1d(&file, &ctx),
        Command::Optimize2d => commands::run_optimize2d(&file, &ctx),
        Command::Sweep => commands::run_sweep(&file, &ctx),
        Command::Verify => run_verify(cli, &file, &ctx),
    }
}

/// Run and report; returns the process exit code.
pub fn main_with(cli: &Cli) -> i32 {
    match run(cli) {
        Ok(o) => {
            println!("{}", o.summary);
            if let Some(r) = &o.reason {
                let err = serde_json::json!({
                    "error": "incomplete",
                    "exit_code": o.exit.code(),
                    "message": r,
                });
                eprintln!("{err}");
            }
            o.exit.code()
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code().code()
        }
    }
}
