//! Flat `key = value` config files.
//!
//! Each entry becomes `--key value` inserted right after the subcommand name,
//! so flags given on the command line override it. `true` stands for a bare
//! switch and `false` drops the entry.

use std::ffi::OsString;
use std::path::Path;

use tlid_core::Error;

use crate::args::SUBCOMMANDS;

pub fn parse(text: &str) -> Result<Vec<(String, String)>, Error> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected key = value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(Error::Config(format!(
                "config line {}: invalid key '{}'",
                i + 1,
                k.trim()
            )));
        }
        let value = v.trim().trim_matches('"').to_string();
        out.push((key, value));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.to_str().and_then(|s| s.strip_prefix("--config=")) {
            return Some(v.into());
        }
    }
    None
}

/// Expand `--config` into explicit flags.
pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>, Error> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let entries = parse(&text)?;
    let Some(at) = args
        .iter()
        .position(|a| a.to_str().is_some_and(|s| SUBCOMMANDS.contains(&s)))
    else {
        return Ok(args);
    };
    let mut injected = Vec::new();
    for (k, v) in entries {
        match v.as_str() {
            "false" => {}
            "true" => injected.push(format!("--{k}").into()),
            _ => {
                injected.push(format!("--{k}").into());
                injected.push(v.into());
            }
        }
    }
    let mut out = args[..=at].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[at + 1..]);
    Ok(out)
}
