use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use mots_core::config::RunConfig;
use mots_core::pipeline::{Run, Stage, StageOutcome};
use mots_core::Error;

#[derive(Parser)]
#[command(name = "motslab", version, about = "Scale-critical data, MOTS and apparent horizon pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration (`seed` is mandatory, here or via --set).
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override a key, e.g. `--set regime.a=1e5` (repeatable).
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory; beats MOTSLAB_OUT_DIR and `out_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build the shear profile and check the data constraints.
    GenData,
    /// Integrate the data cone and map trapped spheres.
    Evolve,
    /// Solve the MOTS equation on every horizon slice.
    FindMots,
    /// Assemble the apparent horizon and its area.
    Horizon,
    /// Penrose margin audit and regime sweep.
    Penrose,
    /// Summary JSON and plots.
    Report,
    /// Every stage in order.
    All,
    /// Print the resolved configuration as TOML.
    Config,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::MalformedParameters(_) | Error::Argument(_) | Error::Dependency { .. } | Error::Resolution(_) => 2,
        Error::Constraint { .. } => 3,
        Error::NonConvergence { .. } | Error::Focusing { .. } => 4,
        _ => 1,
    }
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::MalformedParameters(_) => "malformed-parameters",
        Error::Argument(_) => "argument",
        Error::Dependency { .. } => "dependency",
        Error::Resolution(_) => "resolution",
        Error::Constraint { .. } => "constraint",
        Error::NonConvergence { .. } => "non-convergence",
        Error::Focusing { .. } => "focusing",
        _ => "internal",
    }
}

fn fail(e: &Error) -> ExitCode {
    let mut v = json!({ "status": "error", "kind": kind(e), "message": e.to_string() });
    match e {
        Error::Dependency { required, path, reason } => {
            v["required"] = json!(required);
            v["path"] = json!(path);
            v["reason"] = json!(reason);
        }
        Error::Constraint { constraint, detail } => {
            v["failures"] = json!([{ "name": constraint, "detail": detail }]);
        }
        _ => {}
    }
    println!("{v}");
    ExitCode::from(exit_code(e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => return fail(&Error::Config(format!("{}: {e}", p.display()))),
        },
        None => String::new(),
    };
    let config = match RunConfig::parse(&text, &cli.overrides) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Command::Config = cli.command {
        print!("# config_hash: {}\n{}", config.hash(), config.to_toml());
        return ExitCode::SUCCESS;
    }
    let out = cli.out.clone().unwrap_or_else(|| config.resolve_out_dir());
    let run = Run::new(config, out);
    let stages: Vec<Stage> = match cli.command {
        Command::GenData => vec![Stage::GenData],
        Command::Evolve => vec![Stage::Evolve],
        Command::FindMots => vec![Stage::FindMots],
        Command::Horizon => vec![Stage::Horizon],
        Command::Penrose => vec![Stage::Penrose],
        Command::Report => vec![Stage::Report],
        Command::All => Stage::ALL.to_vec(),
        Command::Config => unreachable!(),
    };
    let mut failed: Vec<StageOutcome> = Vec::new();
    for s in stages {
        match run.run_stage(s) {
            Ok(o) => {
                println!("{}", serde_json::to_string(&o).expect("outcome serialises"));
                if !o.passed {
                    failed.push(o);
                }
            }
            Err(e) => return fail(&e),
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        let failures: Vec<_> = failed
            .iter()
            .flat_map(|o| o.failures.iter().map(move |f| json!({ "stage": o.stage, "name": f })))
            .collect();
        println!("{}", json!({ "status": "constraint-failure", "failures": failures }));
        ExitCode::from(3)
    }
}
