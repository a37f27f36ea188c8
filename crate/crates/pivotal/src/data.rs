//! Flat key-value configs and CSV diagnostics shared by the applications.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Error reading or interpreting a data file, with a line number where one
/// is known.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format { path: PathBuf, line: u64, message: String },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

impl DataError {
    pub fn format(path: &Path, line: u64, message: impl fmt::Display) -> Self {
        DataError::Format { path: path.to_owned(), line, message: message.to_string() }
    }

    pub fn invalid(path: &Path, message: impl fmt::Display) -> Self {
        DataError::Invalid { path: path.to_owned(), message: message.to_string() }
    }
}

/// Flat `key = value` config. `#` starts a comment; keys may be dotted
/// (`cup.league-cup.candidates`). Duplicate keys are rejected.
#[derive(Debug, Clone, Default)]
pub struct KvConfig {
    path: PathBuf,
    entries: BTreeMap<String, (u64, String)>,
}

impl KvConfig {
    pub fn parse_file(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| DataError::Io { path: path.to_owned(), source })?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self, DataError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = (i + 1) as u64;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| DataError::format(path, line, "expected 'key = value'"))?;
            let key = key.trim().to_owned();
            if key.is_empty() {
                return Err(DataError::format(path, line, "empty key"));
            }
            if entries.insert(key.clone(), (line, value.trim().to_owned())).is_some() {
                return Err(DataError::format(path, line, format!("duplicate key '{key}'")));
            }
        }
        Ok(KvConfig { path: path.to_owned(), entries })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, DataError> {
        self.get(key)
            .ok_or_else(|| DataError::invalid(&self.path, format!("missing key '{key}'")))
    }

    /// Keys starting with `prefix`, with the prefix stripped.
    pub fn with_prefix<'a>(
        &'a self,
        prefix: &'a str,
    ) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.entries
            .iter()
            .filter_map(move |(k, (_, v))| k.strip_prefix(prefix).map(|rest| (rest, v.as_str())))
    }

    pub fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, DataError>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| {
                DataError::format(&self.path, *line, format!("key '{key}': {e}"))
            }),
        }
    }

    pub fn line_of(&self, key: &str) -> u64 {
        self.entries.get(key).map(|(l, _)| *l).unwrap_or(0)
    }
}

/// Comma-separated list helper for config values.
pub fn split_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_owned())
        .filter(|s| !s.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_keys_and_comments() {
        let cfg = KvConfig::parse(
            Path::new("test.conf"),
            "a = 1\n# comment\nb.c = two words # trailing\n\n",
        )
        .unwrap();
        assert_eq!(cfg.get("a"), Some("1"));
        assert_eq!(cfg.get("b.c"), Some("two words"));
        assert_eq!(cfg.get("missing"), None);
    }

    #[test]
    fn rejects_duplicates_with_line_number() {
        let err = KvConfig::parse(Path::new("x.conf"), "a = 1\na = 2\n").unwrap_err();
        assert!(err.to_string().contains("x.conf:2"), "{err}");
    }

    #[test]
    fn prefix_iteration() {
        let cfg =
            KvConfig::parse(Path::new("t"), "cup.a.x = 1\ncup.b.x = 2\nother = 3\n").unwrap();
        let keys: Vec<_> = cfg.with_prefix("cup.").map(|(k, _)| k.to_owned()).collect();
        assert_eq!(keys, vec!["a.x", "b.x"]);
    }
}
