//! `key = value` configuration files.
//!
//! Keys are long flag names without the leading dashes. Keys before the
//! first `[section]` header apply to every subcommand; keys under
//! `[name]` apply to subcommand `name` only. `#` starts a comment. Boolean
//! flags take `true` or `false`.

use std::path::Path;

use anyhow::{bail, Context, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    entries: Vec<(Option<String>, String, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut section = None;
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let Some(name) = name.strip_suffix(']') else {
                    bail!("line {}: unterminated section header", lineno + 1);
                };
                section = Some(name.trim().to_string());
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("line {}: expected `key = value`", lineno + 1);
            };
            let key = k.trim();
            if key.is_empty() || key.starts_with('-') {
                bail!("line {}: bad key {key:?}", lineno + 1);
            }
            entries.push((section.clone(), key.to_string(), v.trim().to_string()));
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    /// Flag arguments for `command`: global keys first, then the section's,
    /// so that later occurrences override earlier ones.
    pub fn args_for(&self, command: &str, bool_flags: &[&str]) -> Result<Vec<String>> {
        let mut args = Vec::new();
        let global = self.entries.iter().filter(|e| e.0.is_none());
        let scoped = self.entries.iter().filter(|e| e.0.as_deref() == Some(command));
        for (_, key, value) in global.chain(scoped) {
            if bool_flags.contains(&key.as_str()) {
                match value.as_str() {
                    "true" => args.push(format!("--{key}")),
                    "false" => {}
                    other => bail!("{key}: expected true or false, found {other:?}"),
                }
            } else {
                args.push(format!("--{key}"));
                args.push(value.clone());
            }
        }
        Ok(args)
    }
}
