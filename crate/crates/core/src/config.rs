//! Flat `key = value` configuration files.
//!
//! One key per line; `#` starts a comment; blank lines are ignored. Keys are
//! case-sensitive and may appear once.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlatConfig {
    entries: BTreeMap<String, String>,
}

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::ConfigParse { line: line_no, message: format!("expected key = value, found '{line}'") });
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(Error::ConfigParse { line: line_no, message: format!("invalid key '{k}'") });
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::ConfigParse { line: line_no, message: format!("duplicate key '{k}'") });
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        match self.raw(key) {
            None => Err(Error::MissingKey(key.to_string())),
            Some(v) => parse_value(key, v),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => parse_value(key, v),
        }
    }

    /// Comma-separated list.
    pub fn list_or<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.split(',').map(|t| parse_value(key, t.trim())).collect(),
        }
    }

    /// Keys not in `known`, sorted.
    pub fn unknown_keys(&self, known: &[&str]) -> Vec<String> {
        self.entries.keys().filter(|k| !known.contains(&k.as_str())).cloned().collect()
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::InvalidParams(format!("cannot parse value '{v}' for key '{key}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let c = FlatConfig::parse("# header\nproblem = identities\n\nN=1 # inline\nradii = 4, 8,16\n").unwrap();
        assert_eq!(c.raw("problem"), Some("identities"));
        assert_eq!(c.require::<usize>("N").unwrap(), 1);
        assert_eq!(c.list_or::<f64>("radii", vec![]).unwrap(), vec![4.0, 8.0, 16.0]);
        assert_eq!(c.get_or("seed", 7u64).unwrap(), 7);
    }

    #[test]
    fn reports_line_numbers() {
        match FlatConfig::parse("a = 1\n\nbroken line\n") {
            Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(FlatConfig::parse("a=1\na=2"), Err(Error::ConfigParse { line: 2, .. })));
    }

    #[test]
    fn missing_key_is_named() {
        let c = FlatConfig::parse("N = 1").unwrap();
        let e = c.require::<f64>("gamma").unwrap_err();
        assert!(matches!(&e, Error::MissingKey(k) if k == "gamma"));
        assert!(e.to_string().contains("gamma"));
        assert!(e.is_config_error());
    }
}
