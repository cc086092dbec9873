//! `key=value` config files whose entries become default flags for the
//! chosen subcommand.

use std::path::Path;

pub const SUBCOMMANDS: [&str; 10] = [
    "group-ball",
    "phi",
    "facets",
    "busemann",
    "stable-norm",
    "separate",
    "verify",
    "nctorus",
    "af-triple",
    "mk-distance",
];

pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| format!("config line {}: expected key=value, got {raw:?}", i + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || k == "config" || k == "output" {
            return Err(format!("config line {}: key {k:?} is not allowed", i + 1));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Value of `--config` in raw arguments, if any.
pub fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// Insert `--key=value` after the subcommand name for every config entry
/// whose flag is absent from the command line.
pub fn inject(args: &[String], entries: &[(String, String)]) -> Vec<String> {
    let Some(pos) = args.iter().skip(1).position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return args.to_vec();
    };
    let pos = pos + 1;
    let present = |k: &str| {
        let flag = format!("--{k}");
        args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let mut out = args[..=pos].to_vec();
    for (k, v) in entries {
        if !present(k) {
            if v == "true" {
                out.push(format!("--{k}"));
            } else if v != "false" {
                out.push(format!("--{k}={v}"));
            }
        }
    }
    out.extend_from_slice(&args[pos + 1..]);
    out
}

pub fn load(path: &Path) -> Result<Vec<(String, String)>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn comments_and_blank_lines() {
        let e = parse("# defaults\nradius = 8 # inline\n\ngroup=H3\n").unwrap();
        assert_eq!(e, vec![("radius".into(), "8".into()), ("group".into(), "H3".into())]);
        assert!(parse("radius 8").is_err());
        assert!(parse("output=x").is_err());
    }

    #[test]
    fn command_line_wins() {
        let args = s(&["horocp", "--config", "c.txt", "group-ball", "--radius", "3"]);
        let e = vec![("radius".to_string(), "9".to_string()), ("group".to_string(), "Z3".to_string())];
        let out = inject(&args, &e);
        assert_eq!(out, s(&["horocp", "--config", "c.txt", "group-ball", "--group=Z3", "--radius", "3"]));
        assert_eq!(config_path(&args).as_deref(), Some("c.txt"));
    }
}
