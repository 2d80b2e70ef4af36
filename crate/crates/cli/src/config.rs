//! Layered settings: built-in defaults, then a `key = value` file, then flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Environment variable naming the config file.
pub const CONFIG_ENV: &str = "BFFS_CONFIG";

/// Keys a config file may set; the matching flag is `--` plus the key with dashes.
pub const KNOWN_KEYS: [&str; 18] = [
    "root",
    "backend",
    "folders",
    "subfolders",
    "files-per-subfolder",
    "size-mean",
    "size-sd",
    "size-min",
    "size-max",
    "seed",
    "buckets",
    "out",
    "label",
    "sample-log",
    "drop-cache-hint",
    "durability-sync",
    "mock-latency",
    "progress-secs",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

fn normalise(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('_', "-").to_ascii_lowercase()
}

impl FileConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "{origin}:{}: expected key = value",
                    n + 1
                )));
            };
            let key = normalise(k);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("{origin}:{}: unknown key {key:?}", n + 1)));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// The file named by `BFFS_CONFIG`, or an empty config when unset.
    pub fn from_env() -> Result<Self, CliError> {
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Ok(Self::default()),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Resolves each setting and records the value that won.
pub struct Resolver<'a> {
    file: &'a FileConfig,
    pub effective: BTreeMap<String, String>,
}

impl<'a> Resolver<'a> {
    pub fn new(file: &'a FileConfig) -> Self {
        Self {
            file,
            effective: BTreeMap::new(),
        }
    }

    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + ToString,
        T::Err: std::fmt::Display,
    {
        let v = match (flag, self.file.get(key)) {
            (Some(v), _) => v,
            (None, Some(text)) => text.parse().map_err(|e| {
                CliError::invalid(key, format!("config value {text:?} is not valid: {e}"))
            })?,
            (None, None) => default,
        };
        self.effective.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + ToString,
        T::Err: std::fmt::Display,
    {
        let v = match (flag, self.file.get(key)) {
            (Some(v), _) => Some(v),
            (None, Some(text)) => Some(text.parse().map_err(|e| {
                CliError::invalid(key, format!("config value {text:?} is not valid: {e}"))
            })?),
            (None, None) => None,
        };
        if let Some(v) = &v {
            self.effective.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    /// A switch: present on the command line wins, otherwise the file, otherwise off.
    pub fn switch(&mut self, key: &str, flag: bool) -> Result<bool, CliError> {
        let v = if flag {
            true
        } else {
            self.value(key, None, false)?
        };
        self.effective.insert(key.to_string(), v.to_string());
        Ok(v)
    }
}
