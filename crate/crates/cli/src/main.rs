//! Command-line front end.
//!
//! Exit codes: 0 all checks passed, 1 a claim check failed, 2 the
//! configuration or an input file is unusable, 3 the run drowned in
//! UNKNOWN verdicts and needs a bigger resolution budget.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use shadowlab_cli::run::run;
use shadowlab_core::flow::Flow;
use shadowlab_core::io::{certificate_from_json, orbit_from_csv};
use shadowlab_core::models::ModelRegistry;
use shadowlab_core::shadowing::check_certificate;

#[derive(Parser)]
#[command(
    name = "shadowlab",
    version,
    about = "Config-driven shadowing experiments with replayable certificates"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute the experiment described by a TOML config
    Run { config: PathBuf },
    /// Re-check a stored certificate against a stored pseudo-orbit
    Replay {
        certificate: PathBuf,
        orbit: PathBuf,
        /// Tolerance the replayed trace must stay within
        #[arg(long)]
        eps: f64,
    },
    /// Inspect the model gallery
    Models {
        #[command(subcommand)]
        cmd: ModelsCmd,
    },
}

#[derive(Subcommand)]
enum ModelsCmd {
    /// Print every registered model with its space, kind, parameters and claim
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = cap_threads() {
        eprintln!("config error: {msg}");
        return ExitCode::from(2);
    }
    let code = match cli.cmd {
        Cmd::Run { config } => cmd_run(&config),
        Cmd::Replay {
            certificate,
            orbit,
            eps,
        } => cmd_replay(&certificate, &orbit, eps),
        Cmd::Models { cmd: ModelsCmd::List } => cmd_models_list(),
    };
    ExitCode::from(code)
}

/// SHADOWLAB_THREADS caps the worker pool; unset keeps the library default.
fn cap_threads() -> Result<(), String> {
    let Some(raw) = env::var_os("SHADOWLAB_THREADS") else {
        return Ok(());
    };
    let text = raw.to_string_lossy();
    let n: usize = text
        .parse()
        .map_err(|_| format!("SHADOWLAB_THREADS must be a positive integer, got {text:?}"))?;
    if n == 0 {
        return Err("SHADOWLAB_THREADS must be a positive integer, got 0".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn cmd_run(path: &Path) -> u8 {
    match run(path) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("{e}");
            2
        }
    }
}

fn cmd_replay(cert_path: &Path, orbit_path: &Path, eps: f64) -> u8 {
    let cert_text = match fs::read_to_string(cert_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read certificate {}: {e}", cert_path.display());
            return 2;
        }
    };
    let orbit_text = match fs::read_to_string(orbit_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read pseudo-orbit {}: {e}", orbit_path.display());
            return 2;
        }
    };
    let cert = match certificate_from_json(&cert_text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", cert_path.display());
            return 2;
        }
    };
    let orbit = match orbit_from_csv(&orbit_text) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{}: {e}", orbit_path.display());
            return 2;
        }
    };
    let reg = match ModelRegistry::standard() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let flow = match lookup_flow(&reg, &cert.flow) {
        Ok(f) => f,
        Err(msg) => {
            eprintln!("{msg}");
            return 2;
        }
    };
    match check_certificate(flow.as_ref(), &orbit, eps, &cert, cert.time_grid.dt * 1.5) {
        Ok(replay) if replay.pass => {
            println!(
                "certificate replays: sup {} within eps {eps}",
                replay.achieved_sup
            );
            0
        }
        Ok(replay) => {
            println!(
                "certificate does not replay: sup {} over eps {eps}",
                replay.achieved_sup
            );
            1
        }
        Err(e) => {
            eprintln!("certificate rejected: {e}");
            1
        }
    }
}

fn lookup_flow(reg: &ModelRegistry, name: &str) -> Result<Arc<dyn Flow>, String> {
    if let Ok(f) = reg.flow(name) {
        return Ok(f);
    }
    // certificates minted on a suspension carry the derived flow's name
    if let Some(base) = name
        .strip_prefix("susp-flow(")
        .and_then(|rest| rest.strip_suffix(')'))
    {
        if let Ok(f) = reg.suspension_flow(base) {
            return Ok(f);
        }
    }
    Err(format!(
        "certificate names flow {name:?}, which is not in the registry"
    ))
}

fn cmd_models_list() -> u8 {
    let reg = match ModelRegistry::standard() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let entries = reg.entries();
    let name_w = entries
        .iter()
        .map(|e| e.name().len())
        .max()
        .unwrap_or(0)
        .max("NAME".len());
    let kind_w = entries
        .iter()
        .map(|e| e.kind_label().len())
        .max()
        .unwrap_or(0)
        .max("KIND".len());
    let space_w = entries
        .iter()
        .map(|e| e.space_name().len())
        .max()
        .unwrap_or(0)
        .max("SPACE".len());
    println!("{:name_w$}  {:kind_w$}  {:space_w$}  PARAMS", "NAME", "KIND", "SPACE");
    for e in entries {
        let params = serde_json::to_string(e.params()).unwrap_or_default();
        println!(
            "{:name_w$}  {:kind_w$}  {:space_w$}  {params}",
            e.name(),
            e.kind_label(),
            e.space_name()
        );
        println!("    {}", e.claim());
    }
    0
}
