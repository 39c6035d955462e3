//! `key = value` config files, spliced into argv ahead of the command line so
//! that explicit flags win.

use std::path::Path;

pub const SUBCOMMANDS: [&str; 5] = ["fit", "cv", "infer", "predict", "simulate"];

/// Parses config text into `--key value` arguments. `true`/`false` values
/// become bare flags or are dropped.
pub fn config_args(text: &str, origin: &str) -> Result<Vec<String>, String> {
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{origin}: line {}: expected 'key = value'", i + 1))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(format!("{origin}: line {}: empty key", i + 1));
        }
        match value {
            "true" => args.push(format!("--{key}")),
            "false" => {}
            v => {
                args.push(format!("--{key}"));
                args.push(v.to_string());
            }
        }
    }
    Ok(args)
}

/// Finds `--config <path>` or `--config=<path>` in raw arguments.
pub fn find_config(argv: &[String]) -> Option<String> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Inserts config-derived arguments right after the subcommand name.
pub fn splice(argv: Vec<String>, extra: Vec<String>) -> Vec<String> {
    match argv.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) {
        Some(pos) => {
            let mut out = argv[..=pos].to_vec();
            out.extend(extra);
            out.extend_from_slice(&argv[pos + 1..]);
            out
        }
        None => argv,
    }
}

pub fn expand(argv: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = find_config(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| format!("{path}: {e}"))?;
    Ok(splice(argv, config_args(&text, &path)?))
}
