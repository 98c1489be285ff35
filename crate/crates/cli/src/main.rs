//! `psprog`: command-line front end for the psprog experiments.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 when a computation fails.

mod args;
mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{CommandFactory, FromArgMatches};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use args::{Cli, Format};
use psprog_core::Error;

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), String> {
    std::fs::write(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn main() -> ExitCode {
    let argv = match config::merge(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => return usage_error(e),
    };
    let command = Cli::command().args_override_self(true).mut_subcommands(|s| s.args_override_self(true));
    let cli = match command.try_get_matches_from(argv).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let common = cli.cmd.common().clone();
    if let Some(t) = common.threads {
        if t == 0 {
            return usage_error("--threads must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            return usage_error(format!("--threads: {e}"));
        }
    }
    let started = now();
    let rendered = match commands::run(&cli.cmd) {
        Ok(r) => r,
        Err(e @ Error::Argument(_)) => return usage_error(e),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let body = match common.format {
        Format::Json => serde_json::to_string_pretty(&rendered.json).expect("json") + "\n",
        Format::Csv => rendered.table.to_csv(),
        Format::Text => rendered.text.clone().map(|t| t + "\n").unwrap_or_else(|| rendered.table.to_csv()),
    };
    let mut outputs = Vec::new();
    match &common.output {
        Some(p) => {
            if let Err(e) = write_file(p, body.as_bytes()) {
                return usage_error(e);
            }
            outputs.push(json!({"path": p.display().to_string(), "sha256": sha256_hex(body.as_bytes())}));
        }
        None => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(body.as_bytes());
            outputs.push(json!({"path": "-", "sha256": sha256_hex(body.as_bytes())}));
        }
    }
    let svg_path = match &cli.cmd {
        args::Cmd::Sweep(a) => a.svg.clone(),
        args::Cmd::Density(a) => a.svg.clone(),
        _ => None,
    };
    if let (Some(p), Some(svg)) = (svg_path, &rendered.svg) {
        if let Err(e) = write_file(&p, svg.as_bytes()) {
            return usage_error(e);
        }
        outputs.push(json!({"path": p.display().to_string(), "sha256": sha256_hex(svg.as_bytes())}));
    }
    if let Some(p) = &common.manifest {
        let mut config = serde_json::to_value(&cli.cmd).expect("config serializes");
        let input: Value = {
            let mut c = config.clone();
            if let Some(o) = c.as_object_mut() {
                o.remove("common");
            }
            c
        };
        if let Some(o) = config.as_object_mut() {
            o.insert("threads_used".into(), json!(rayon::current_num_threads()));
        }
        let finished = now();
        let manifest = json!({
            "config": config,
            "version": env!("CARGO_PKG_VERSION"),
            "started_unix": started,
            "finished_unix": finished,
            "wall_time_seconds": finished - started,
            "input_sha256": sha256_hex(serde_json::to_string(&input).expect("json").as_bytes()),
            "outputs": outputs,
        });
        if let Err(e) = write_file(p, (serde_json::to_string_pretty(&manifest).expect("json") + "\n").as_bytes()) {
            return usage_error(e);
        }
    }
    ExitCode::SUCCESS
}
