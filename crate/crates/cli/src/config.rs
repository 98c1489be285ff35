//! Flat `key = value` config files. Each key names a long flag of the subcommand; flags
//! given on the command line win. A run manifest written by `--manifest` is accepted too,
//! which replays that run.

use std::ffi::OsString;
use std::path::Path;

/// Flag entries from the `config` object of a manifest. Output locations come along so the
/// replay rewrites the same files; the manifest path itself and the thread count do not.
fn from_manifest(path: &Path, doc: &serde_json::Value, subcommand: &str) -> Result<Vec<(String, String)>, String> {
    let cfg = doc.get("config").and_then(|c| c.as_object()).ok_or_else(|| format!("manifest {}: no config object", path.display()))?;
    if cfg.get("subcommand").and_then(|s| s.as_str()) != Some(subcommand) {
        return Err(format!("manifest {} was not written by `{subcommand}`", path.display()));
    }
    let mut fields: Vec<(&String, &serde_json::Value)> = cfg.iter().filter(|(k, _)| *k != "common").collect();
    if let Some(c) = cfg.get("common").and_then(|c| c.as_object()) {
        fields.extend(c.iter().filter(|(k, _)| *k == "format" || *k == "output"));
    }
    let mut out = Vec::new();
    for (k, v) in fields {
        if k == "subcommand" || k == "threads_used" {
            continue;
        }
        let v = match v {
            serde_json::Value::Null => continue,
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        out.push((k.replace('_', "-"), v));
    }
    Ok(out)
}

pub fn read(path: &Path, subcommand: &str) -> Result<Vec<(String, String)>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("config file {}: {e}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("manifest {}: {e}", path.display()))?;
        return from_manifest(path, &doc, subcommand);
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config file {} line {}: expected key = value", path.display(), i + 1))?;
        let k = k.trim().replace('_', "-");
        if k.is_empty() {
            return Err(format!("config file {} line {}: empty key", path.display(), i + 1));
        }
        if k != "config" {
            out.push((k, v.trim().to_string()));
        }
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Insert the config entries right after the subcommand, so later command-line flags override them.
pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    if args.len() < 2 {
        return Ok(args);
    }
    let entries = read(Path::new(&path), &args[1].to_string_lossy())?;
    let mut out = args[..2].to_vec();
    out.extend(entries.into_iter().map(|(k, v)| OsString::from(format!("--{k}={v}"))));
    out.extend_from_slice(&args[2..]);
    Ok(out)
}
