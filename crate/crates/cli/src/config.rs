//! Flat `key = value` configuration files with `#` comments.
//!
//! Every key is bound through a [`Binder`], which rejects unknown keys with
//! line-anchored messages when the command finishes reading.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

pub struct ConfigFile {
    path: PathBuf,
    entries: BTreeMap<String, (String, usize)>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config(format!(
                    "{}:{line_no}: expected `key = value`, got `{line}`",
                    path.display()
                ))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(CliError::config(format!(
                    "{}:{line_no}: empty key",
                    path.display()
                )));
            }
            if let Some((_, first)) = entries.insert(key.clone(), (value, line_no)) {
                return Err(CliError::config(format!(
                    "{}:{line_no}: key `{key}` already set on line {first}",
                    path.display()
                )));
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn binder(&self) -> Binder<'_> {
        Binder {
            file: self,
            taken: std::collections::BTreeSet::new(),
            resolved: Vec::new(),
        }
    }
}

pub struct Binder<'a> {
    file: &'a ConfigFile,
    taken: std::collections::BTreeSet<String>,
    resolved: Vec<(String, String)>,
}

impl<'a> Binder<'a> {
    fn raw(&mut self, key: &str) -> Option<(String, usize)> {
        self.taken.insert(key.to_string());
        self.file.entries.get(key).cloned()
    }

    fn record(&mut self, key: &str, value: impl Display) {
        self.resolved.push((key.to_string(), value.to_string()));
    }

    fn parse<T: FromStr>(&self, key: &str, value: &str, line: usize, what: &str) -> Result<T, CliError> {
        value.parse().map_err(|_| {
            CliError::config(format!(
                "{}:{line}: key `{key}`: `{value}` is not {what}",
                self.file.path.display()
            ))
        })
    }

    pub fn value_or<T: FromStr + Display>(
        &mut self,
        key: &str,
        default: T,
        what: &str,
    ) -> Result<T, CliError> {
        let out = match self.raw(key) {
            Some((value, line)) => self.parse(key, &value, line, what)?,
            None => default,
        };
        self.record(key, &out);
        Ok(out)
    }

    pub fn usize_or(&mut self, key: &str, default: usize) -> Result<usize, CliError> {
        self.value_or(key, default, "a non-negative integer")
    }

    pub fn u64_or(&mut self, key: &str, default: u64) -> Result<u64, CliError> {
        self.value_or(key, default, "a non-negative integer")
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        self.value_or(key, default, "a decimal number")
    }

    pub fn bool_or(&mut self, key: &str, default: bool) -> Result<bool, CliError> {
        self.value_or(key, default, "true or false")
    }

    pub fn string_or(&mut self, key: &str, default: &str) -> Result<String, CliError> {
        let out = match self.raw(key) {
            Some((value, _)) => value,
            None => default.to_string(),
        };
        self.record(key, &out);
        Ok(out)
    }

    pub fn optional_string(&mut self, key: &str) -> Option<String> {
        let out = self.raw(key).map(|(value, _)| value);
        if let Some(v) = &out {
            self.record(key, v);
        }
        out
    }

    pub fn required_string(&mut self, key: &str) -> Result<String, CliError> {
        let out = self.raw(key).map(|(value, _)| value).ok_or_else(|| {
            CliError::config(format!(
                "{}: missing required key `{key}`",
                self.file.path.display()
            ))
        })?;
        self.record(key, &out);
        Ok(out)
    }

    /// Rejects any keys the command did not bind.
    pub fn finish(self) -> Result<Vec<(String, String)>, CliError> {
        for (key, (_, line)) in &self.file.entries {
            if !self.taken.contains(key) {
                return Err(CliError::config(format!(
                    "{}:{line}: unknown key `{key}`",
                    self.file.path.display()
                )));
            }
        }
        Ok(self.resolved)
    }
}

/// Prints the resolved settings of a dry run in binding order.
pub fn print_resolved(command: &str, resolved: &[(String, String)]) {
    println!("# resolved configuration for `{command}` (dry run)");
    for (key, value) in resolved {
        println!("{key} = {value}");
    }
}
