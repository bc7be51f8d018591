//! `--config <file>` support: a plain `key = value` file whose entries are
//! spliced into the argument list ahead of the command-line flags, so flags
//! given on the command line win.

use std::ffi::OsString;
use std::fs;

/// Flags that take no value; `key = true` enables them, `false` omits them.
const SWITCHES: [&str; 2] = ["linear-baseline", "no-bootstrap"];

pub fn parse_config(text: &str) -> Result<Vec<OsString>, String> {
    let mut flags = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", n + 1))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(format!("config line {}: empty key", n + 1));
        }
        if SWITCHES.contains(&key.as_str()) {
            match value {
                "true" | "1" | "yes" => flags.push(format!("--{key}").into()),
                "false" | "0" | "no" => {}
                other => {
                    return Err(format!(
                        "config line {}: `{key}` expects true or false, got `{other}`",
                        n + 1
                    ))
                }
            }
        } else {
            flags.push(format!("--{key}={value}").into());
        }
    }
    Ok(flags)
}

/// Removes `--config <path>` from `args` and inserts the file's flags right
/// after the subcommand name.
pub fn expand_config(mut args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut path = None;
    let mut i = 1;
    while i < args.len() {
        let arg = args[i].to_string_lossy().into_owned();
        if arg == "--config" {
            if i + 1 >= args.len() {
                return Err("--config needs a file path".into());
            }
            path = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(p) = arg.strip_prefix("--config=") {
            path = Some(OsString::from(p));
            args.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.to_string_lossy()))?;
    let flags = parse_config(&text)?;
    let Some(sub) = args
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
    else {
        return Ok(args);
    };
    let at = sub + 2;
    args.splice(at..at, flags);
    Ok(args)
}
