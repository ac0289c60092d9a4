//! `--config FILE` support: each `key=value` line becomes `--key value`
//! unless the command line already sets `--key`.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Parses a flat key=value file. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key=value, found `{line}`", n + 1);
        };
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() {
            bail!("line {}: empty key", n + 1);
        }
        if key == "config" {
            bail!("line {}: a config file cannot name another config file", n + 1);
        }
        entries.push((key.to_owned(), value.trim().to_owned()));
    }
    Ok(entries)
}

fn flag_present(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let with_value = format!("--{key}=");
    args.iter()
        .filter_map(|a| a.to_str())
        .any(|a| a == flag || a.starts_with(&with_value))
}

/// Removes `--config FILE` from `args` and appends the file's entries that
/// the command line does not already set.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut out = Vec::with_capacity(args.len());
    let mut path = None;
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        match arg.to_str() {
            Some("--config") => {
                let value = iter.next().context("--config needs a file name")?;
                path = Some(value);
            }
            Some(s) if s.starts_with("--config=") => path = Some(OsString::from(&s["--config=".len()..])),
            _ => out.push(arg),
        }
    }
    let Some(path) = path else {
        return Ok(out);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let entries = parse_config(&text).with_context(|| format!("in config {}", path.display()))?;
    for (key, value) in entries {
        if flag_present(&out, &key) {
            continue;
        }
        out.push(format!("--{key}").into());
        if value != "true" {
            out.push(value.into());
        }
    }
    Ok(out)
}
