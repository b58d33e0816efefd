//! `--config` files: flat `key = value` lines, `#` comments. Keys are long
//! flag names without the dashes (`tf_mode` and `tf-mode` are the same key).
//! Entries are appended to the command line unless the flag is already
//! given there, so explicit flags always win.

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{ArgAction, CommandFactory};
use log::warn;

use crate::cli::Cli;
use crate::UsageError;

/// `args` with the config file's entries merged in; unchanged without `--config`.
pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).with_context(|| path.display().to_string())?;
    let entries = parse(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;

    let command = Cli::command();
    let Some(sub) = subcommand_name(&args).and_then(|name| command.find_subcommand(name).cloned())
    else {
        return Ok(args);
    };

    let given = |long: &str| {
        let flag = format!("--{long}");
        let prefix = format!("--{long}=");
        args.iter()
            .filter_map(|a| a.to_str())
            .any(|a| a == flag || a.starts_with(&prefix))
    };

    let mut merged = args.clone();
    for (line, key, value) in entries {
        let Some(arg) = sub
            .get_arguments()
            .chain(command.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
        else {
            warn!(
                "{}:{line}: `{key}` is not an option of `{}`; ignored",
                path.display(),
                sub.get_name()
            );
            continue;
        };
        if key == "config" {
            return Err(UsageError(format!(
                "{}:{line}: config files cannot nest",
                path.display()
            ))
            .into());
        }
        if given(&key) {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue | ArgAction::Count => match value.as_str() {
                "true" | "yes" | "1" => merged.push(format!("--{key}").into()),
                "false" | "no" | "0" => {}
                _ => {
                    return Err(UsageError(format!(
                        "{}:{line}: `{key}` expects true or false, got {value:?}",
                        path.display()
                    ))
                    .into())
                }
            },
            _ => merged.push(format!("--{key}={value}").into()),
        }
    }
    Ok(merged)
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut iter = args.iter().skip(1);
    while let Some(arg) = iter.next() {
        let arg = arg.to_str()?;
        if arg == "--config" {
            return iter.next().map(PathBuf::from);
        }
        if let Some(path) = arg.strip_prefix("--config=") {
            return Some(PathBuf::from(path));
        }
    }
    None
}

/// First bare word, skipping global options and their values.
fn subcommand_name(args: &[OsString]) -> Option<&str> {
    let mut iter = args.iter().skip(1).filter_map(|a| a.to_str());
    while let Some(arg) = iter.next() {
        if arg == "--config" || arg == "--threads" {
            iter.next();
        } else if !arg.starts_with('-') {
            return Some(arg);
        }
    }
    None
}

fn parse(text: &str) -> std::result::Result<Vec<(usize, String, String)>, String> {
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", idx + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", idx + 1));
        }
        entries.push((idx + 1, key, value.trim().to_string()));
    }
    Ok(entries)
}
