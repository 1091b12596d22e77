//! Key-value config files backing every flag, with flag > file >
//! default precedence and strict rejection of keys the command does
//! not know.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug)]
pub struct FileConfig {
    path: PathBuf,
    entries: BTreeMap<String, (usize, String)>,
}

impl FileConfig {
    /// Parses `key = value` lines; `#` starts a comment, blank lines
    /// are ignored, duplicate keys are an error.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig { path: PathBuf::new(), entries: BTreeMap::new() });
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), i + 1))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                bail!("{}:{}: empty key", path.display(), i + 1);
            }
            if entries.insert(key.clone(), (i + 1, value)).is_some() {
                bail!("{}:{}: duplicate key \"{key}\"", path.display(), i + 1);
            }
        }
        Ok(FileConfig { path: path.to_path_buf(), entries })
    }

    /// Resolves one setting: an explicit flag wins, then the file,
    /// then the default. Consumes the key either way so [`finish`]
    /// can flag leftovers.
    ///
    /// [`finish`]: FileConfig::finish
    pub fn take<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.take_opt(key, flag)?.unwrap_or(default))
    }

    /// Like [`take`](FileConfig::take) for settings with no default.
    pub fn take_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let file_value = self.entries.remove(key);
        if let Some(v) = flag {
            return Ok(Some(v));
        }
        match file_value {
            Some((line, raw)) => {
                let parsed = raw.parse::<T>().map_err(|e| {
                    anyhow!("{}:{line}: bad value \"{raw}\" for \"{key}\": {e}", self.path.display())
                })?;
                Ok(Some(parsed))
            }
            None => Ok(None),
        }
    }

    /// Errors if the file contained keys this command never asked for.
    pub fn finish(self) -> Result<()> {
        if let Some((key, (line, _))) = self.entries.into_iter().next() {
            bail!("{}:{line}: unknown config key \"{key}\"", self.path.display());
        }
        Ok(())
    }
}
