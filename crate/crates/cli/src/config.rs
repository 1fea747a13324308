//! Merging a key-value config file into the argument list. Command-line
//! flags win; config keys fill in the rest.

use clap::{ArgAction, Command};
use std::ffi::OsString;

use softextrap::experiment::read_key_values;

/// Path given by `--config FILE` or `--config=FILE`, if any.
fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
        if s == "--" {
            break;
        }
    }
    None
}

/// The deepest subcommand named in `argv`.
fn leaf_command(root: &Command, argv: &[OsString]) -> Command {
    let mut cmd = root.clone();
    let mut skip_value = false;
    for arg in argv.iter().skip(1) {
        let s = arg.to_string_lossy();
        if skip_value {
            skip_value = false;
            continue;
        }
        if s == "--config" {
            skip_value = true;
            continue;
        }
        if s.starts_with('-') {
            continue;
        }
        match cmd.find_subcommand(s.as_ref()) {
            Some(sub) => cmd = sub.clone(),
            None => break,
        }
    }
    cmd
}

fn flag_present(argv: &[OsString], long: &str) -> bool {
    let bare = format!("--{long}");
    let with_value = format!("--{long}=");
    argv.iter().any(|a| {
        let s = a.to_string_lossy();
        s == bare || s.starts_with(&with_value)
    })
}

/// `argv` with config-file entries appended as flags. Errors are usage
/// errors: unreadable file, unknown key or a bad boolean.
pub fn merge_config(root: &Command, argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let entries = read_key_values(&path)
        .map_err(|e| format!("config file {}: {e}", path.to_string_lossy()))?;
    let leaf = leaf_command(root, &argv);
    let mut merged = argv.clone();
    for (key, value) in entries {
        let arg = leaf
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && key != "config")
            .ok_or_else(|| format!("config file: unknown key `{key}` for `{}`", leaf.get_name()))?;
        if flag_present(&argv, &key) {
            continue;
        }
        let takes_value = !matches!(arg.get_action(), ArgAction::SetTrue | ArgAction::SetFalse);
        if takes_value {
            merged.push(format!("--{key}={value}").into());
        } else {
            match value.as_str() {
                "true" => merged.push(format!("--{key}").into()),
                "false" => {}
                other => return Err(format!("config file: `{key}` expects true or false, got `{other}`")),
            }
        }
    }
    Ok(merged)
}
