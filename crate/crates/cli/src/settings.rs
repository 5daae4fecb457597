//! Flat key/value settings merged from a config file and command-line flags.
//! Flags win.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use emtransistor::params::{parse_key_values, PARAM_KEYS};

use crate::error::CliError;

pub const EXPERIMENT_KEYS: &[&str] = &[
    "params",
    "out",
    "normalization",
    "lambda_units",
    "points",
    "format",
    "svg",
    "flag_quota",
    "pump_power",
    "delta_p",
    "span",
    "center",
    "signal_power",
    "p_min",
    "p_max",
    "bracket_hi",
    "periods",
    "dump_trace",
    "decimate",
];

#[derive(Clone, Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
    from_flags: BTreeSet<String>,
    /// Directory of the config file, for resolving relative paths in it.
    base: Option<PathBuf>,
}

impl Settings {
    pub fn from_config_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let values = parse_key_values(&text)?;
        if let Some(k) = values
            .keys()
            .find(|k| !EXPERIMENT_KEYS.contains(&k.as_str()) && !PARAM_KEYS.contains(&k.as_str()))
        {
            return Err(CliError::Validation(format!("unknown config key `{k}`")));
        }
        Ok(Self {
            values,
            from_flags: BTreeSet::new(),
            base: path.parent().map(Path::to_path_buf),
        })
    }

    pub fn set(&mut self, key: &str, value: Option<String>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v);
            self.from_flags.insert(key.to_string());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Parameter keys given inline in the config file.
    pub fn inline_params(&self) -> BTreeMap<String, String> {
        self.values
            .iter()
            .filter(|(k, _)| PARAM_KEYS.contains(&k.as_str()) && k.as_str() != "lambda_units")
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    /// Path-valued setting, resolved against the config file location when
    /// it came from there.
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let p = PathBuf::from(self.get(key)?);
        match &self.base {
            Some(base) if p.is_relative() && !self.from_flags.contains(key) => Some(base.join(p)),
            _ => Some(p),
        }
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Validation(format!("{key} = `{v}`: {e}")))
            })
            .transpose()
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        Ok(self.parse::<bool>(key)?.unwrap_or(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "points = 11\nnormalization = literal\n").unwrap();
        let mut s = Settings::from_config_file(&path).unwrap();
        s.set("points", Some("21".into()));
        s.set("normalization", None);
        assert_eq!(s.parse::<usize>("points").unwrap(), Some(21));
        assert_eq!(s.get("normalization"), Some("literal"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.conf");
        std::fs::write(&path, "pionts = 11\n").unwrap();
        assert!(matches!(
            Settings::from_config_file(&path),
            Err(CliError::Validation(_))
        ));
    }

    #[test]
    fn config_paths_are_relative_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "params = device.conf\n").unwrap();
        let s = Settings::from_config_file(&path).unwrap();
        assert_eq!(s.path("params").unwrap(), dir.path().join("device.conf"));
    }
}
