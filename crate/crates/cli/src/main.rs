//! `evikit run <config.json>` and `evikit list-builtins`.

mod config;
mod error;
mod experiments;
mod output;
mod spaces;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use evikit_core::hj::DATA_BUILTINS;
use evikit_core::space::describe;
use evikit_core::spaces::{POTENTIAL_BUILTINS, SPACE_BUILTINS};
use serde::Serialize;

use crate::config::{ExperimentConfig, EXPERIMENT_KINDS};
use crate::error::{CliError, CliResult};
use crate::experiments::Assertion;
use crate::output::Output;
use crate::spaces::BuiltSpace;

#[derive(Parser)]
#[command(name = "evikit", version, about = "Runs gradient-flow and Hamilton-Jacobi experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// List the builtin spaces, potentials, data functions and experiment kinds.
    ListBuiltins,
}

fn list_builtins() -> String {
    let mut text = String::new();
    let sections: [(&str, &[&str]); 4] = [("spaces", &SPACE_BUILTINS), ("potentials", &POTENTIAL_BUILTINS), ("data", &DATA_BUILTINS), ("kinds", &EXPERIMENT_KINDS)];
    for (title, names) in sections {
        let mut names = names.to_vec();
        names.sort_unstable();
        text += title;
        text += ":\n";
        for n in names {
            text += "  ";
            text += n;
            text += "\n";
        }
    }
    text
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    kind: &'static str,
    seed: u64,
    space: String,
    threads: usize,
    status: &'static str,
    pass: bool,
    error: Option<String>,
    assertions: &'a [Assertion],
    outputs: Vec<String>,
    wall_time_s: f64,
    config: &'a serde_json::Value,
}

fn threads_from_env() -> CliResult<Option<usize>> {
    match std::env::var("EVIKIT_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::config(format!("EVIKIT_THREADS must be a positive integer (got {v:?})"))),
        },
        Err(_) => Ok(None),
    }
}

fn load(path: &Path) -> CliResult<(ExperimentConfig, serde_json::Value)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: invalid JSON: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        if at == "." {
            CliError::config(e.into_inner().to_string())
        } else {
            CliError::config(format!("{at}: {}", e.into_inner()))
        }
    })?;
    cfg.validate()?;
    Ok((cfg, raw))
}

fn run(path: &Path) -> u8 {
    let clock = Instant::now();
    let (cfg, raw) = match load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    let setup = || -> CliResult<(BuiltSpace, Output, usize)> {
        let threads = threads_from_env()?;
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            pool = pool.num_threads(n);
        }
        // a second build in the same process (tests) keeps the first pool
        let _ = pool.build_global();
        let space = BuiltSpace::build(&cfg.space)?;
        let out = Output::create(&cfg.output_dir)?;
        Ok((space, out, rayon::current_num_threads()))
    };
    let (space, mut out, threads) = match setup() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };

    let result = experiments::run(&cfg, &space, &mut out);
    let (assertions, status, error, code) = match result {
        Ok(a) => {
            let pass = a.iter().all(|c| c.pass);
            (a, if pass { "pass" } else { "fail" }, None, if pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("{e}");
            let status = if e.exit_code() == 3 { "numerical_failure" } else { "config_error" };
            (Vec::new(), status, Some(e.to_string()), e.exit_code())
        }
    };
    for a in &assertions {
        let detail = match (a.value, a.bound) {
            (Some(v), Some(b)) => format!(" (value {v:e}, bound {b:e})"),
            _ => String::new(),
        };
        println!("{} {}{detail}", if a.pass { "PASS" } else { "FAIL" }, a.name);
    }
    let manifest = Manifest {
        tool: "evikit",
        version: env!("CARGO_PKG_VERSION"),
        core_version: evikit_core::VERSION,
        kind: cfg.experiment.kind(),
        seed: cfg.seed,
        space: describe(space.space()),
        threads,
        status,
        pass: code == 0,
        error,
        assertions: &assertions,
        outputs: out.files().to_vec(),
        wall_time_s: clock.elapsed().as_secs_f64(),
        config: &raw,
    };
    if let Err(e) = out.json("manifest.json", &manifest) {
        eprintln!("{e}");
        return e.exit_code();
    }
    if code <= 1 {
        let passed = assertions.iter().filter(|a| a.pass).count();
        println!("{status}: {passed} of {} assertions passed; results in {}", assertions.len(), cfg.output_dir.display());
    }
    code
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::ListBuiltins => {
            print!("{}", list_builtins());
            ExitCode::SUCCESS
        }
        Command::Run { config } => ExitCode::from(run(&config)),
    }
}
