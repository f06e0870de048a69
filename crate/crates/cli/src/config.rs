//! `--config <file>` support: plain `key=value` lines whose keys mirror the
//! long flag names. Values from the file are spliced into the argument list
//! unless the same flag was given explicitly.

use std::ffi::OsString;
use std::path::Path;

use crate::failure::Failure;

/// Parses `key=value` lines; `#` starts a comment line.
pub fn parse_config(text: &str, path: &Path) -> Result<Vec<(String, String)>, Failure> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Failure::validation(format!(
                "{}: line {}: expected key=value, got `{line}`",
                path.display(),
                i + 1
            )));
        };
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(Failure::validation(format!("{}: line {}: empty key", path.display(), i + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn flag_given(args: &[OsString], key: &str) -> bool {
    let long = format!("--{key}");
    let with_eq = format!("--{key}=");
    args.iter().any(|a| a.to_str().is_some_and(|s| s == long || s.starts_with(&with_eq)))
}

/// Finds `--config <file>` after the subcommand, removes it, and appends the
/// file's settings for every flag not already present.
pub fn expand_config_args(mut args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let mut config_path = None;
    let mut i = 0;
    while i < args.len() {
        let Some(s) = args[i].to_str() else {
            i += 1;
            continue;
        };
        if s == "--config" {
            if i + 1 >= args.len() {
                return Err(Failure::validation("--config requires a file path"));
            }
            config_path = Some(args.remove(i + 1));
            args.remove(i);
            continue;
        }
        if let Some(p) = s.strip_prefix("--config=") {
            config_path = Some(OsString::from(p));
            args.remove(i);
            continue;
        }
        i += 1;
    }
    let Some(path) = config_path else { return Ok(args) };
    let path = Path::new(&path).to_path_buf();
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::io(format!("cannot read config {}: {e}", path.display())))?;
    let settings = parse_config(&text, &path)?;
    for (key, value) in settings {
        if flag_given(&args, &key) {
            continue;
        }
        match value.as_str() {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                args.push(format!("--{key}").into());
                args.push(value.into());
            }
        }
    }
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn explicit_flags_win() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.cfg");
        std::fs::write(&cfg, "# thresholds\nt1=0.7\nt2 = 10\nno_segment_match=true\nverbose=false\n").unwrap();
        let args = os(&["synpart", "extract", "--t1", "0.5", "--config", cfg.to_str().unwrap()]);
        let out = expand_config_args(args).unwrap();
        assert_eq!(out, os(&["synpart", "extract", "--t1", "0.5", "--t2", "10", "--no-segment-match"]));
    }

    #[test]
    fn malformed_line() {
        assert!(parse_config("t1 0.5\n", Path::new("x")).is_err());
    }

    #[test]
    fn missing_config_file_is_io() {
        let err = expand_config_args(os(&["synpart", "extract", "--config", "/nonexistent/c.cfg"])).unwrap_err();
        assert_eq!(err.code, 2);
    }
}
