//! `key=value` configuration files and flag/config/default resolution.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use log::warn;

use super::CliError;

/// Parsed `key=value` lines. Blank lines and `#` comments are skipped; keys
/// are matched with `_` and `-` treated alike.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", n + 1)))?;
            values.insert(normalize(k), v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Resolves each setting from flag, then config file, then default, and
/// records the result for echoing.
#[derive(Debug)]
pub struct Resolver {
    config: ConfigFile,
    used: Vec<String>,
    resolved: Vec<(String, String)>,
}

impl Resolver {
    pub fn new(config: ConfigFile) -> Self {
        Resolver {
            config,
            used: Vec::new(),
            resolved: Vec::new(),
        }
    }

    fn lookup<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        let k = normalize(key);
        self.used.push(k.clone());
        match self.config.values.get(&k) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}"))),
        }
    }

    fn record(&mut self, key: &str, value: String) {
        self.resolved.push((key.to_string(), value));
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => v,
            None => self.lookup(key)?.unwrap_or(default),
        };
        self.record(key, value.to_string());
        Ok(value)
    }

    /// A setting without default.
    pub fn require<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => v,
            None => self
                .lookup(key)?
                .ok_or_else(|| CliError::Usage(format!("missing required setting `--{key}`")))?,
        };
        self.record(key, value.to_string());
        Ok(value)
    }

    pub fn flag(&mut self, key: &str, flag: bool) -> Result<bool, CliError> {
        let value = flag || self.lookup::<bool>(key)?.unwrap_or(false);
        self.record(key, value.to_string());
        Ok(value)
    }

    /// `command: key=value ...` line; warns about config keys nothing read.
    pub fn summary(&self, command: &str) -> String {
        for k in self.config.values.keys() {
            if !self.used.contains(k) {
                warn!("config key `{k}` is not used by `{command}`");
            }
        }
        let parts: Vec<String> = self.resolved.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{command}: {}", parts.join(" "))
    }
}

/// Parses `3`, `0..4` (inclusive), `0..=4` or `1,3,5`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let text = text.trim();
    let bad = || format!("invalid seed list `{text}` (e.g. 0, 0..4, 1,3,5)");
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').trim().parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let cfg = ConfigFile::parse("# comment\nwavelet = db4\nlevel=2\nbatch_size=64\n").unwrap();
        let mut r = Resolver::new(cfg);
        assert_eq!(r.get("wavelet", Some("sym5".to_string()), "haar".into()).unwrap(), "sym5");
        assert_eq!(r.get("level", None, 3usize).unwrap(), 2);
        assert_eq!(r.get("batch-size", None, 512usize).unwrap(), 64);
        assert_eq!(r.get("epochs", None, 10usize).unwrap(), 10);
        assert_eq!(r.summary("train"), "train: wavelet=sym5 level=2 batch-size=64 epochs=10");
    }

    #[test]
    fn bad_config() {
        assert!(ConfigFile::parse("novalue\n").is_err());
        let mut r = Resolver::new(ConfigFile::parse("level=abc").unwrap());
        assert!(r.get("level", None, 3usize).is_err());
        assert!(r.require::<String>("dataset", None).is_err());
    }

    #[test]
    fn seeds() {
        assert_eq!(parse_seeds("0..4").unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(parse_seeds("2..=3").unwrap(), vec![2, 3]);
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert_eq!(parse_seeds("1, 5").unwrap(), vec![1, 5]);
        assert!(parse_seeds("4..1").is_err());
        assert!(parse_seeds("x").is_err());
    }
}
