//! Command-line front end: configuration handling and subcommands.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Arg, ArgAction, ArgMatches, Command};

use dicke_core::io::Manifest;
use dicke_core::sweep::figures::FigureId;
use dicke_core::{Error, Result};

use config::{RunConfig, KEYS};

pub fn cli() -> Command {
    let mut cmd = Command::new("dicke")
        .about("Classical and quantum chaos diagnostics for the one- and two-photon Dicke models")
        .subcommand_required(true)
        .args_override_self(true)
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .global(true)
                .help("`key = value` configuration file"),
        )
        .subcommand(Command::new("poincare").about("Poincaré section on the energy shell"))
        .subcommand(Command::new("entropy").about("Linear entanglement entropy S(t) per seed"))
        .subcommand(
            Command::new("entropy-map")
                .about("Time-averaged entropy and Lyapunov maps over the atomic disk"),
        )
        .subcommand(Command::new("husimi").about("Atomic Husimi snapshots and grid variance"))
        .subcommand(
            Command::new("figure")
                .about("Regenerate the data behind one figure")
                .arg(Arg::new("id").required(true).value_name("fig1..fig11")),
        );
    for (key, default) in KEYS {
        cmd = cmd.arg(
            Arg::new(key)
                .long(key)
                .value_name("VALUE")
                .global(true)
                .allow_negative_numbers(true)
                .action(ArgAction::Set)
                .help(format!("default: {default}")),
        );
    }
    cmd
}

fn overrides(m: &ArgMatches) -> Vec<(String, String)> {
    let mut found: Vec<(usize, String, String)> = KEYS
        .iter()
        .filter_map(|(k, _)| {
            let v = m.get_one::<String>(k)?;
            let idx = m.index_of(k).unwrap_or(0);
            Some((idx, k.to_string(), v.clone()))
        })
        .collect();
    found.sort_by_key(|x| x.0);
    found.into_iter().map(|(_, k, v)| (k, v)).collect()
}

fn usage_error(e: clap::Error) -> Error {
    if e.kind() == ErrorKind::UnknownArgument {
        if let Some(ContextValue::String(arg)) = e.get(ContextKind::InvalidArg) {
            let name = arg.trim_start_matches('-');
            return Error::UnknownKey(name.split('=').next().unwrap_or(name).to_string());
        }
    }
    Error::Usage(e.kind().to_string())
}

/// Outcome of parsing the command line.
pub enum Invocation {
    Run(Box<RunConfig>, Option<FigureId>, String),
    /// Help or version text to print before exiting successfully.
    Info(String),
}

pub fn parse_args<I, T>(args: I) -> Result<Invocation>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let m = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            return Ok(Invocation::Info(e.render().to_string()))
        }
        Err(e) => return Err(usage_error(e)),
    };
    let (name, sub) = m.subcommand().expect("subcommand is required");
    let path = sub.get_one::<String>("config").map(PathBuf::from);
    let cfg = RunConfig::resolve(path.as_deref(), &overrides(sub))?;
    let figure = sub
        .try_get_one::<String>("id")
        .ok()
        .flatten()
        .map(|s| s.parse())
        .transpose()?;
    Ok(Invocation::Run(Box::new(cfg), figure, name.to_string()))
}

pub fn dispatch(cfg: &RunConfig, command: &str, figure: Option<FigureId>) -> Result<Manifest> {
    match command {
        "poincare" => commands::cmd_poincare(cfg),
        "entropy" => commands::cmd_entropy(cfg),
        "entropy-map" => commands::cmd_entropy_map(cfg),
        "husimi" => commands::cmd_husimi(cfg),
        "figure" => commands::cmd_figure(
            cfg,
            figure.ok_or_else(|| Error::Usage("figure needs an id".into()))?,
        ),
        other => Err(Error::Usage(format!("unknown command `{other}`"))),
    }
}

/// Single-line JSON error record written to stderr on failure.
pub fn error_line(e: &Error) -> String {
    serde_json::json!({"error": e.code(), "exit_status": e.exit_status(), "message": e.to_string()})
        .to_string()
}
