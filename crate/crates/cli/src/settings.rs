//! The optional `key=value` settings file and flag merging: an explicit
//! command-line flag always wins over a file entry, and every resolved
//! value is logged to `run_manifest.txt` for provenance.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::usage;

pub struct Settings {
    entries: BTreeMap<String, String>,
}

impl Settings {
    /// Parses a settings file: one `key=value` per line, blank lines and
    /// `#` comments ignored. A missing path yields empty settings.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Settings> {
        let mut entries = BTreeMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read settings file {}: {e}", path.display())))?;
            for (number, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(usage(format!(
                        "settings line {} is not key=value: `{line}`",
                        number + 1
                    )));
                };
                entries.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Settings { entries })
    }

    /// The effective value of a flag: the explicit flag if given, else the
    /// settings entry under `key`, else `default`.
    pub fn resolve<T: FromStr + Clone>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> anyhow::Result<T> {
        Ok(self.resolve_opt(flag, key)?.unwrap_or(default))
    }

    /// As [`Settings::resolve`] without a default.
    pub fn resolve_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> anyhow::Result<Option<T>> {
        if let Some(value) = flag {
            return Ok(Some(value));
        }
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                usage(format!("settings value for `{key}` is not valid: `{raw}`"))
            }),
        }
    }

    /// A flag-style boolean: true when the flag was passed or the settings
    /// entry says `true`.
    pub fn resolve_switch(&self, flag: bool, key: &str) -> anyhow::Result<bool> {
        if flag {
            return Ok(true);
        }
        match self.entries.get(key).map(String::as_str) {
            None => Ok(false),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(usage(format!(
                "settings value for `{key}` must be true or false, got `{other}`"
            ))),
        }
    }

    /// Rejects settings keys the current subcommand does not understand, so
    /// typos fail loudly instead of being silently ignored.
    pub fn require_known(&self, known: &[&str]) -> anyhow::Result<()> {
        for key in self.entries.keys() {
            if key != "seed" && key != "out" && !known.contains(&key.as_str()) {
                return Err(usage(format!("unknown settings key `{key}`")));
            }
        }
        Ok(())
    }
}

/// One resolved setting destined for the manifest.
pub fn entry(key: &str, value: impl Display) -> (String, String) {
    (key.to_string(), value.to_string())
}

/// Writes `run_manifest.txt` into the output directory: the command name
/// followed by every resolved setting, one `key=value` per line.
pub fn write_manifest(
    out_dir: &Path,
    command: &str,
    config_path: Option<&Path>,
    resolved: &[(String, String)],
) -> anyhow::Result<()> {
    let mut text = format!("command={command}\n");
    match config_path {
        Some(path) => text.push_str(&format!("config={}\n", path.display())),
        None => text.push_str("config=none\n"),
    }
    for (key, value) in resolved {
        text.push_str(&format!("{key}={value}\n"));
    }
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("run_manifest.txt"), text)?;
    Ok(())
}

/// Parses a comma-separated list of reals, attributing errors to `what`.
pub fn parse_real_list(raw: &str, what: &str) -> anyhow::Result<Vec<f64>> {
    raw.split(',')
        .map(|piece| {
            piece
                .trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("{what} entry `{}` is not a number", piece.trim())))
        })
        .collect()
}
