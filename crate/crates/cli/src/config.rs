//! `--config FILE`: `key = value` lines whose keys are long flag names.
//!
//! The entries are spliced into the argument list right after the
//! subcommand, so flags given on the command line still win.

use std::fs;

#[derive(Debug)]
pub struct ConfigError(pub String);

/// Parses `key = value` lines. `#` starts a comment; values may be quoted.
/// A value of `true` turns the key into a bare switch, `false` drops it.
pub fn parse(text: &str) -> Result<Vec<String>, ConfigError> {
    let mut args = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() || line.starts_with('[') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(ConfigError(format!("line {}: invalid key", lineno + 1)));
        }
        let value = unquote(value.trim());
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

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v)
}

/// Replaces `--config FILE` (or `--config=FILE`) with the file's entries,
/// placed directly after the subcommand name.
pub fn expand(argv: Vec<String>, subcommands: &[&str]) -> Result<Vec<String>, ConfigError> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        if arg == "--config" {
            path = Some(it.next().ok_or_else(|| ConfigError("--config needs a file".into()))?);
        } else if let Some(p) = arg.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path).map_err(|e| ConfigError(format!("cannot read {path}: {e}")))?;
    let extra = parse(&text)?;
    let at = rest
        .iter()
        .position(|a| subcommands.contains(&a.as_str()))
        .map_or(rest.len(), |i| i + 1);
    rest.splice(at..at, extra);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_lines() {
        let text = "# comment\nalpha = 0.1\nw = \"a,b\"  # trailing\njson = true\nasymptotic = false\nbootstrap_reps=9\n";
        assert_eq!(
            parse(text).unwrap(),
            ["--alpha", "0.1", "--w", "a,b", "--json", "--bootstrap-reps", "9"]
        );
        assert!(parse("novalue\n").is_err());
    }

    #[test]
    fn entries_follow_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "alpha = 0.2\n").unwrap();
        let argv = ["smoothsig", "--threads", "2", "test", "--config", path.to_str().unwrap(), "--alpha", "0.3"]
            .map(String::from)
            .to_vec();
        let out = expand(argv, &["test", "simulate"]).unwrap();
        assert_eq!(out, ["smoothsig", "--threads", "2", "test", "--alpha", "0.2", "--alpha", "0.3"]);
    }
}
