//! Lower-priority argument sources. Config-file entries and presets are
//! appended to the command line as ordinary flags, but only for flags the
//! user did not pass, which gives: flags > config file > preset > built-in.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub const SUBCOMMANDS: [&str; 5] = [
    "gen-corpus",
    "train-guesser",
    "train-enquirer",
    "eval",
    "baseline-heuristic",
];

/// Paper hyperparameters for `--paper-defaults`.
pub fn paper_preset(subcommand: &str) -> &'static [(&'static str, &'static str)] {
    match subcommand {
        "train-guesser" => &[
            ("games", "45000"),
            ("epochs", "1"),
            ("batch-size", "1024"),
            ("lr", "3e-4"),
        ],
        "train-enquirer" => &[
            ("episodes", "80000"),
            ("lr", "5e-3"),
            ("gamma", "0.9"),
            ("gae-lambda", "0.95"),
            ("clip", "0.2"),
            ("entropy-coef", "0.01"),
            ("grad-clip", "1"),
        ],
        "eval" | "baseline-heuristic" => &[("eta", "20000")],
        _ => &[],
    }
}

/// Parses `key = value` lines; `#` starts a comment, keys may carry a
/// leading `--`.
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!(
                "{}:{}: expected `key = value`, got {raw:?}",
                origin.display(),
                n + 1
            );
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            bail!("{}:{}: empty key", origin.display(), n + 1);
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

fn has_flag(args: &[String], key: &str) -> bool {
    let long = format!("--{key}");
    let with_eq = format!("{long}=");
    args.iter().any(|a| *a == long || a.starts_with(&with_eq))
}

fn flag_value(args: &[String], key: &str) -> Option<String> {
    let long = format!("--{key}");
    let with_eq = format!("{long}=");
    for (i, a) in args.iter().enumerate() {
        if *a == long {
            return args.get(i + 1).cloned();
        }
        if let Some(v) = a.strip_prefix(&with_eq) {
            return Some(v.to_string());
        }
    }
    None
}

/// Returns the command line with config-file and preset entries appended.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let args: Vec<String> = args
        .into_iter()
        .map(|a| {
            a.into_string()
                .map_err(|a| anyhow::anyhow!("non-UTF-8 argument {a:?}"))
        })
        .collect::<Result<_>>()?;
    let Some(sub) = args
        .iter()
        .skip(1)
        .find(|a| SUBCOMMANDS.contains(&a.as_str()))
        .cloned()
    else {
        return Ok(args.into_iter().map(OsString::from).collect());
    };

    let mut layers: Vec<(String, String)> = Vec::new();
    if let Some(path) = flag_value(&args, "config") {
        let path = Path::new(&path);
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        layers.extend(parse_config(&text, path)?);
    }
    if has_flag(&args, "paper-defaults") {
        layers.extend(
            paper_preset(&sub)
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string())),
        );
    }

    let mut out = args.clone();
    let mut injected: Vec<String> = Vec::new();
    for (key, value) in layers {
        if key == "config" || has_flag(&args, &key) || injected.contains(&key) {
            continue;
        }
        injected.push(key.clone());
        match value.as_str() {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => {
                out.push(format!("--{key}"));
                out.push(value);
            }
        }
    }
    Ok(out.into_iter().map(OsString::from).collect())
}
