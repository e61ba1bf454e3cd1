//! Optional plain `key = value` config files. Command-line flags win over
//! config values, which win over built-in defaults.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<FileConfig> {
        let mut values = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected `key = value`", lineno + 1))?;
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Flag value if given, else config value parsed as `T`, else `default`.
    pub fn resolve<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|e| anyhow!("config key `{key}`: {e}")),
            None => Ok(default),
        }
    }

    pub fn ensure_known_keys(&self, known: &[&str]) -> Result<()> {
        for key in self.values.keys() {
            if !known.contains(&key.as_str()) {
                bail!("unknown config key `{key}`");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_resolve() {
        let cfg = FileConfig::parse("# comment\nk = 5\nseed = 99\n").unwrap();
        assert_eq!(cfg.resolve(None, "k", 3u16).unwrap(), 5);
        assert_eq!(cfg.resolve(Some(7u16), "k", 3).unwrap(), 7);
        assert_eq!(cfg.resolve::<u64>(None, "sessions", 1000).unwrap(), 1000);
        assert!(cfg.ensure_known_keys(&["k", "seed"]).is_ok());
        assert!(cfg.ensure_known_keys(&["k"]).is_err());
    }

    #[test]
    fn malformed_line_is_an_error() {
        assert!(FileConfig::parse("nonsense").is_err());
    }
}
