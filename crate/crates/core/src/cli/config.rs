//! `key = value` run configuration: optional file plus command-line flags,
//! flags winning. Every resolved value is recorded so the run can be echoed.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Default)]
pub struct Resolver {
    command: String,
    file: Vec<(String, String)>,
    consumed: BTreeSet<String>,
    resolved: Vec<(String, String)>,
}

impl Resolver {
    pub fn new(command: &str, config: Option<&Path>) -> Result<Self> {
        let file = match config {
            Some(p) => parse_config(
                &fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?,
            )
            .with_context(|| format!("config {}", p.display()))?,
            None => Vec::new(),
        };
        if let Some((_, c)) = file.iter().find(|(k, _)| k == "command") {
            if c != command {
                bail!("config file is for '{c}', not '{command}'");
            }
        }
        Ok(Resolver {
            command: command.to_string(),
            file,
            consumed: BTreeSet::from(["command".to_string()]),
            resolved: Vec::new(),
        })
    }

    fn file_value(&mut self, key: &str) -> Option<String> {
        self.consumed.insert(key.to_string());
        self.file
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.clone())
    }

    fn record(&mut self, key: &str, value: String) {
        self.resolved.push((key.to_string(), value));
    }

    /// Flag, else file, else `None`.
    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let from_file = self.file_value(key);
        let value = match flag {
            Some(v) => Some(v),
            None => match from_file {
                Some(s) => Some(
                    s.parse::<T>()
                        .map_err(|e| anyhow!("config key '{key}': {e}"))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.record(key, v.to_string());
        }
        Ok(value)
    }

    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.optional(key, flag)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, default.to_string());
                Ok(default)
            }
        }
    }

    pub fn required<T>(&mut self, key: &str, flag: Option<T>) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.optional(key, flag)?
            .ok_or_else(|| anyhow!("missing required setting '--{key}'"))
    }

    pub fn path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf> {
        self.required::<String>(key, flag.map(path_string))
            .map(PathBuf::from)
    }

    pub fn optional_path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<Option<PathBuf>> {
        Ok(self
            .optional::<String>(key, flag.map(path_string))?
            .map(PathBuf::from))
    }

    /// Repeatable key: flags replace the file's list entirely.
    pub fn list(&mut self, key: &str, flags: Vec<String>) -> Vec<String> {
        self.consumed.insert(key.to_string());
        let values = if flags.is_empty() {
            self.file
                .iter()
                .filter(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .collect()
        } else {
            flags
        };
        for v in &values {
            self.record(key, v.clone());
        }
        values
    }

    /// Fails on file keys no setting asked for.
    pub fn finish(&self) -> Result<()> {
        if let Some((k, _)) = self.file.iter().find(|(k, _)| !self.consumed.contains(k)) {
            bail!("unknown config key '{k}' for '{}'", self.command);
        }
        Ok(())
    }

    /// Text accepted back by `--config`.
    pub fn echo(&self) -> String {
        let mut out = format!(
            "# {} {}\ncommand = {}\n",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION"),
            self.command
        );
        for (k, v) in &self.resolved {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

fn path_string(p: PathBuf) -> String {
    p.to_string_lossy().into_owned()
}

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected 'key = value'", i + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
