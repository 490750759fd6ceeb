//! `key=value` config files, spliced into the argument list ahead of the
//! command-line flags so that explicit flags win.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Result, RuberError};

/// Expands `--config <file>` (or `--config=<file>`) found after the subcommand.
pub fn expand_config_args(args: Vec<String>) -> Result<Vec<String>> {
    let Some(sub_pos) = args.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1) else {
        return Ok(args);
    };
    let mut rest = Vec::new();
    let mut config_path = None;
    let mut it = args[sub_pos + 1..].iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            let p = it
                .next()
                .ok_or_else(|| RuberError::Config("--config needs a file path".into()))?;
            config_path = Some(p.clone());
        } else if let Some(p) = a.strip_prefix("--config=") {
            config_path = Some(p.to_owned());
        } else {
            rest.push(a.clone());
        }
    }
    let mut out: Vec<String> = args[..=sub_pos].to_vec();
    if let Some(path) = config_path {
        out.extend(read_config_file(Path::new(&path))?);
    }
    out.extend(rest);
    Ok(out)
}

/// Converts each `key=value` line to `--key value`. Boolean `true` becomes a
/// bare flag and `false` is dropped. Blank lines and `#` comments are ignored.
pub fn read_config_file(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| RuberError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            RuberError::Config(format!("{}:{}: expected key=value", path.display(), i + 1))
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(RuberError::Config(format!(
                "{}:{}: invalid key `{key}`",
                path.display(),
                i + 1
            )));
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            v => {
                out.push(format!("--{key}"));
                out.push(v.to_owned());
            }
        }
    }
    Ok(out)
}

/// Renders resolved arguments in the same `key=value` form the loader accepts.
pub fn render_resolved<T: Serialize>(args: &T) -> String {
    let value = serde_json::to_value(args).expect("arguments serialize");
    let mut out = String::new();
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            let rendered = match v {
                serde_json::Value::Null => continue,
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            out.push_str(&k);
            out.push('=');
            out.push_str(&rendered);
            out.push('\n');
        }
    }
    out
}
