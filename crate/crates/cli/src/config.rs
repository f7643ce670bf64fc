//! Optional `key = value` file mirroring the command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Keys a config file may set. Names match the long flags.
const KEYS: &[&str] = &[
    "method",
    "methods",
    "components",
    "k",
    "seed",
    "restarts",
    "max-iter",
    "lr",
    "tol",
    "noise",
    "runs",
    "legacy-log",
    "auto-center",
    "json",
    "strict",
    "header",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Usage(format!("cannot read config {}: {e}", p.display()))
                })?;
                Self::parse(&text)
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected key = value", i + 1))
            })?;
            let key = k.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key '{}'",
                    i + 1,
                    k.trim()
                )));
            }
            let key = if key == "k" {
                "components".to_string()
            } else {
                key
            };
            values.insert(key, (i + 1, v.trim().to_string()));
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|e| {
                CliError::Usage(format!("config line {line}: bad value for {key}: {e}"))
            }),
        }
    }

    /// A boolean flag is on when given on the command line or set in the file.
    pub fn flag(&self, key: &str, cli: bool) -> Result<bool, CliError> {
        Ok(cli || self.get::<bool>(key)?.unwrap_or(false))
    }

    /// The command-line value when present, else the file's.
    pub fn pick<T: FromStr>(&self, key: &str, cli: Option<T>) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match cli {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win() {
        let c = ConfigFile::parse("# run\nseed = 4\nk=3\nlegacy_log = true\n").unwrap();
        assert_eq!(c.pick::<u64>("seed", None).unwrap(), Some(4));
        assert_eq!(c.pick("seed", Some(9u64)).unwrap(), Some(9));
        assert_eq!(c.get::<usize>("components").unwrap(), Some(3));
        assert!(c.flag("legacy-log", false).unwrap());
        assert!(!c.flag("json", false).unwrap());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ConfigFile::parse("colour = red\n").is_err());
        assert!(ConfigFile::parse("seed\n").is_err());
        let c = ConfigFile::parse("seed = x\n").unwrap();
        assert!(c.get::<u64>("seed").is_err());
    }
}
