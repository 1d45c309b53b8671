//! `sigmak`: run one experiment from a JSON config and write its artifacts.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use artifacts::{Artifacts, Meta};
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "sigmak", version, about = "Axisymmetric sigma_k prescribed-curvature experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run config
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for randomized sampling
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Pohozaev and mass identities along an integrated trajectory (JSON lines)
    VerifyIdentities,
    /// Shooting solve for a global solution
    Solve,
    /// Compactness and degree verdict for pole data
    Classify,
    /// Bubble decomposition of a synthetic tower
    BubbleAnalyze,
    /// Continuation in T for the noncompact model
    Noncompact,
    /// Defect scan for the non-existence model
    NonexistScan,
    /// Sample t, K, Kdot
    DumpCurvature,
    /// Beta integral against quadrature
    AppendixCheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::VerifyIdentities => "verify-identities",
            Command::Solve => "solve",
            Command::Classify => "classify",
            Command::BubbleAnalyze => "bubble-analyze",
            Command::Noncompact => "noncompact",
            Command::NonexistScan => "nonexist-scan",
            Command::DumpCurvature => "dump-curvature",
            Command::AppendixCheck => "appendix-check",
        }
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn diagnostic(kind: &str, command: &str, message: String) {
    eprintln!("{}", json!({ "error": kind, "command": command, "message": message }));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let Some(path) = cli.config.as_ref() else {
        diagnostic("config", name, "--config is required".into());
        return ExitCode::from(EXIT_CONFIG);
    };
    let cfg = match RunConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            diagnostic("config", name, format!("{e:#}"));
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let meta = Meta::new(name, cfg.hash(cli.seed), cli.seed);
    let mut art = match Artifacts::new(cfg.output_dir.as_deref(), meta) {
        Ok(a) => a,
        Err(e) => {
            diagnostic("config", name, format!("{e:#}"));
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let res = match cli.command {
        Command::VerifyIdentities => commands::verify_identities(&cfg, cli.seed, &mut art),
        Command::Solve => commands::solve(&cfg, &mut art),
        Command::Classify => commands::classify(&cfg, &mut art),
        Command::BubbleAnalyze => commands::bubble_analyze(&cfg, &mut art),
        Command::Noncompact => commands::noncompact(&cfg, &mut art),
        Command::NonexistScan => commands::nonexist_scan(&cfg, &mut art),
        Command::DumpCurvature => commands::dump_curvature(&cfg, &mut art),
        Command::AppendixCheck => commands::appendix_check(&cfg, cli.seed, &mut art),
    };
    match res {
        Ok(mut out) => {
            // verify-identities already streamed its JSON lines
            if !matches!(cli.command, Command::VerifyIdentities) {
                if let Some(m) = out.summary.as_object_mut() {
                    m.insert("artifacts".into(), json!(art.written()));
                }
                println!("{}", serde_json::to_string_pretty(&out.summary).unwrap_or_default());
            }
            if out.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                diagnostic("assertion", name, out.failures.join("; "));
                ExitCode::from(EXIT_NUMERICAL)
            }
        }
        Err(e) if commands::is_numerical(&e) => {
            diagnostic("numerical", name, format!("{e:#}"));
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(e) => {
            diagnostic("config", name, format!("{e:#}"));
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
