//! `--config FILE` support. The file holds `key = value` lines naming long
//! flags of the chosen subcommand; they are spliced in ahead of the command
//! line flags, so anything given explicitly wins.

use std::ffi::OsString;
use std::fs;

#[derive(Debug)]
pub enum ConfigError {
    Read(String),
    Syntax { line: usize, text: String },
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Read(e) => write!(f, "config: {e}"),
            ConfigError::Syntax { line, text } => {
                write!(f, "config: line {line}: expected `key = value`, got `{text}`")
            }
        }
    }
}

/// Flags built from the config file text.
pub fn parse(text: &str) -> Result<Vec<OsString>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: line.to_string(),
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: line.to_string(),
            });
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            v => out.push(format!("--{key}={v}").into()),
        }
    }
    Ok(out)
}

/// Removes `--config FILE` from `argv` and splices the file's flags in
/// right after the subcommand name.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, ConfigError> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            path = Some(
                it.next()
                    .ok_or_else(|| ConfigError::Read("--config needs a file".into()))?,
            );
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path).map_err(|e| ConfigError::Read(format!("{}: {e}", path.to_string_lossy())))?;
    let flags = parse(&text)?;
    // the subcommand is the first argument after the program name that is not a flag
    let at = rest
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map_or(rest.len(), |i| i + 2);
    rest.splice(at..at, flags);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_lines() {
        let flags = parse("# comment\nk = 3\ntype2 = true\nmc = false\na2=-0.5\n").unwrap();
        assert_eq!(flags, os(&["--k=3", "--type2", "--a2=-0.5"]));
        assert!(parse("oops").is_err());
    }

    #[test]
    fn splices_after_subcommand() {
        let dir = std::env::temp_dir().join(format!("walters-config-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let file = dir.join("run.conf");
        fs::write(&file, "nmax = 50\n").unwrap();
        let argv = os(&["walters", "eta", "--config", file.to_str().unwrap(), "--nmax", "60"]);
        let out = expand(argv).unwrap();
        assert_eq!(out, os(&["walters", "eta", "--nmax=50", "--nmax", "60"]));
    }
}
