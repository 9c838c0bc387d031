//! `--config FILE`: a JSON object whose keys mirror command-line flags.
//!
//! Top-level scalar keys apply to every subcommand that has a flag of that
//! name; an object under a subcommand name (`"tune": {...}`, or
//! `"generate": {"nk": {...}}`) applies to that subcommand only. Flags given
//! on the command line win over the file.

use std::ffi::OsString;

use anyhow::{anyhow, bail, Context, Result};
use clap::Command;
use serde_json::{Map, Value};

/// Returns `args` with the config file's flags spliced in after the
/// subcommand path, or unchanged if there is no `--config`.
pub fn expand(cmd: &Command, args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let doc: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {path}"))?;
    let root = doc.as_object().ok_or_else(|| anyhow!("config {path}: top level must be an object"))?;

    // locate the subcommand path in argv
    let mut at = None;
    let mut current = cmd;
    let mut chain: Vec<&Command> = Vec::new();
    for (i, a) in args.iter().enumerate().skip(1) {
        let Some(a) = a.to_str() else { continue };
        if let Some(sub) = current.find_subcommand(a) {
            chain.push(sub);
            current = sub;
            at = Some(i);
        } else if !chain.is_empty() {
            break;
        }
    }
    let Some(at) = at else { return Ok(args) };
    let leaf = *chain.last().expect("found a subcommand");

    let mut settings = Map::new();
    for (k, v) in root {
        if !v.is_object() && has_flag(leaf, k) {
            settings.insert(k.clone(), v.clone());
        }
    }
    let mut scope = root;
    for sub in &chain {
        match scope.get(sub.get_name()) {
            Some(Value::Object(o)) => {
                for (k, v) in o {
                    if v.is_object() && sub.find_subcommand(k).is_some() {
                        continue;
                    }
                    if !has_flag(leaf, k) {
                        bail!("config {path}: `{}` has no flag --{}", leaf.get_name(), flag_name(k));
                    }
                    settings.insert(k.clone(), v.clone());
                }
                scope = o;
            }
            Some(_) => bail!("config {path}: `{}` must be an object", sub.get_name()),
            None => break,
        }
    }

    let given: Vec<String> = args[at + 1..].iter().filter_map(|a| a.to_str().map(str::to_string)).collect();
    let mut extra = Vec::new();
    for (k, v) in settings {
        let flag = format!("--{}", flag_name(&k));
        if given.iter().any(|g| *g == flag || g.starts_with(&format!("{flag}="))) {
            continue;
        }
        push_flag(&mut extra, &flag, &v).with_context(|| format!("config {path}: key `{k}`"))?;
    }
    let mut out = args;
    out.splice(at + 1..at + 1, extra);
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<String> {
    let strs: Vec<&str> = args.iter().filter_map(|a| a.to_str()).collect();
    for (i, a) in strs.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
        if *a == "--config" {
            return strs.get(i + 1).map(|s| s.to_string());
        }
    }
    None
}

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn has_flag(cmd: &Command, key: &str) -> bool {
    let name = flag_name(key);
    cmd.get_arguments().any(|a| a.get_long() == Some(name.as_str()))
}

fn push_flag(out: &mut Vec<OsString>, flag: &str, v: &Value) -> Result<()> {
    match v {
        Value::Bool(true) => out.push(flag.into()),
        Value::Bool(false) | Value::Null => {}
        Value::Number(n) => out.extend([flag.into(), n.to_string().into()]),
        Value::String(s) => out.extend([flag.into(), s.into()]),
        Value::Array(items) => {
            for item in items {
                push_flag(out, flag, item)?;
            }
        }
        // JSON-valued flags such as hyperparameters
        Value::Object(_) => out.extend([flag.into(), v.to_string().into()]),
    }
    Ok(())
}
