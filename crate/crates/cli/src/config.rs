//! `key = value` configuration files. Keys are long flag names; a flag given
//! on the command line wins over the file.

use std::fs;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgMatches, Command};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse(text: &str) -> Result<Vec<Entry>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("line {}: expected key = value", i + 1));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        let v = v.trim();
        let value = v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v);
        out.push(Entry { key, value: value.to_string(), line: i + 1 });
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<Entry>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Arguments to add for the entries that the command line leaves unset.
/// Global flags are returned separately from the subcommand's own.
pub fn missing_args(
    cmd: &Command,
    matches: &ArgMatches,
    entries: &[Entry],
) -> Result<(Vec<String>, Vec<String>), String> {
    let (sub_name, sub_matches) = matches.subcommand().ok_or("no command given")?;
    let sub_cmd = cmd.find_subcommand(sub_name).ok_or("unknown command")?;
    let mut global = Vec::new();
    let mut local = Vec::new();
    for e in entries {
        let (target, m, c) = if has_long(sub_cmd, &e.key) {
            (&mut local, sub_matches, sub_cmd)
        } else if has_long(cmd, &e.key) {
            (&mut global, matches, cmd)
        } else {
            return Err(format!("line {}: unknown key {:?} for {sub_name}", e.line, e.key));
        };
        let arg = c.get_arguments().find(|a| a.get_long() == Some(e.key.as_str())).unwrap();
        let id = arg.get_id().as_str();
        let given = |m: &ArgMatches| m.try_get_raw(id).is_ok() && m.value_source(id) == Some(ValueSource::CommandLine);
        if given(m) || given(matches) || given(sub_matches) {
            continue;
        }
        let flag = format!("--{}", e.key);
        if arg.get_action().takes_values() {
            target.push(flag);
            target.push(e.value.clone());
        } else {
            match e.value.as_str() {
                "true" | "yes" | "1" => target.push(flag),
                "false" | "no" | "0" => {}
                other => return Err(format!("line {}: {:?} is not a boolean", e.line, other)),
            }
        }
    }
    Ok((global, local))
}

fn has_long(cmd: &Command, key: &str) -> bool {
    cmd.get_arguments().any(|a| a.get_long() == Some(key))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_quotes() {
        let e = parse("# c\nbits = 192\n\nmax_len=64 # trailing\nbeta = \"3/2\"\n").unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(e[0].key, "bits");
        assert_eq!(e[1].key, "max-len");
        assert_eq!(e[1].value, "64");
        assert_eq!(e[2].value, "3/2");
    }

    #[test]
    fn rejects_bare_words() {
        assert!(parse("bits\n").is_err());
        assert!(parse(" = 3\n").is_err());
    }
}
