//! `key = value` run configuration checked against the bundled schema.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// The schema shipped with the crate.
pub const SCHEMA: &str = include_str!("../config.schema");

#[derive(Debug, Clone, PartialEq)]
pub enum KeyType {
    Float,
    Int,
    Floats,
    List,
    Path,
    Enum(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct KeySpec {
    pub key: String,
    pub ty: KeyType,
    pub default: Option<String>,
    pub description: String,
}

pub fn schema() -> Vec<KeySpec> {
    SCHEMA
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let mut it = l.split_whitespace();
            let key = it.next().unwrap().to_string();
            let ty = match it.next().unwrap() {
                "float" => KeyType::Float,
                "int" => KeyType::Int,
                "floats" => KeyType::Floats,
                "list" => KeyType::List,
                "path" => KeyType::Path,
                t => KeyType::Enum(t.strip_prefix("enum:").expect("schema type").split('|').map(String::from).collect()),
            };
            let default = Some(it.next().unwrap()).filter(|d| *d != "-").map(String::from);
            KeySpec { key, ty, default, description: it.collect::<Vec<_>>().join(" ") }
        })
        .collect()
}

/// Parses a float, also accepting `a/b`.
pub fn parse_float(text: &str) -> Option<f64> {
    let t = text.trim();
    let v = match t.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => t.parse().ok()?,
    };
    v.is_finite().then_some(v)
}

fn check_value(spec: &KeySpec, value: &str) -> Result<()> {
    let bad = |what: &str| Err(CliError::Config(format!("{} = {value:?}: expected {what}", spec.key)));
    match &spec.ty {
        KeyType::Float if parse_float(value).is_none() => bad("a number"),
        KeyType::Int if value.trim().parse::<u64>().is_err() => bad("a nonnegative integer"),
        KeyType::Floats if value.split(',').any(|v| parse_float(v).is_none()) => bad("comma separated numbers"),
        KeyType::Enum(opts) if !opts.iter().any(|o| o == value) => bad(&format!("one of {}", opts.join(", "))),
        KeyType::Path if value.is_empty() => bad("a path"),
        _ => Ok(()),
    }
}

/// A resolved configuration: every schema key with a value or explicitly unset.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    /// Directory of the config file; relative input paths resolve against it.
    base: PathBuf,
}

impl RunConfig {
    /// Parses `text`, applies `overrides` (`key=value`) on top and fills in
    /// defaults.
    pub fn parse(text: &str, overrides: &[String], base: &Path) -> Result<Self> {
        let specs = schema();
        let find = |key: &str| specs.iter().find(|s| s.key == key);
        let mut given: BTreeMap<String, String> = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            // dotted keys are absolute even inside a section
            let k = k.trim();
            let key = if section.is_empty() || k.contains('.') { k.to_string() } else { format!("{section}.{k}") };
            if given.insert(key.clone(), unquote(v)).is_some() {
                return Err(CliError::Config(format!("line {}: {key} set twice", lineno + 1)));
            }
        }
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| CliError::Config(format!("--set {o:?}: expected key=value")))?;
            given.insert(k.trim().to_string(), unquote(v));
        }
        let mut values = BTreeMap::new();
        for (k, v) in given {
            let spec = find(&k).ok_or_else(|| CliError::Config(format!("unknown key {k}")))?;
            check_value(spec, &v)?;
            values.insert(k, v);
        }
        for s in &specs {
            if let (false, Some(d)) = (values.contains_key(&s.key), &s.default) {
                values.insert(s.key.clone(), d.clone());
            }
        }
        Ok(RunConfig { values, base: base.to_path_buf() })
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let specs = schema();
        let spec = specs.iter().find(|s| s.key == key).ok_or_else(|| CliError::Config(format!("unknown key {key}")))?;
        check_value(spec, value)?;
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| CliError::Config(format!("{key} must be set")))
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.require(key)
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        Ok(parse_float(self.require(key)?).expect("checked at parse time"))
    }

    pub fn opt_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(parse_float)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.require(key)?.trim().parse().map_err(|_| CliError::Config(format!("{key} is too large")))
    }

    pub fn floats(&self, key: &str) -> Result<Vec<f64>> {
        self.opt_floats(key).ok_or_else(|| CliError::Config(format!("{key} must be set")))
    }

    pub fn opt_floats(&self, key: &str) -> Option<Vec<f64>> {
        self.get(key).map(|s| s.split(',').map(|v| parse_float(v).expect("checked at parse time")).collect())
    }

    pub fn list(&self, key: &str) -> Vec<String> {
        self.get(key)
            .map(|s| s.split(',').map(|w| w.trim().to_string()).filter(|w| !w.is_empty()).collect())
            .unwrap_or_default()
    }

    /// Input path resolved against the config file's directory; must exist.
    pub fn input_path(&self, key: &str) -> Result<PathBuf> {
        let p = self.base.join(self.require(key)?);
        if p.is_file() {
            Ok(p)
        } else {
            Err(CliError::Config(format!("{key}: {} does not exist", p.display())))
        }
    }

    /// Output directory; relative paths resolve against the working directory.
    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.get("output.dir").unwrap_or("out"))
    }

    /// Resolved `key = value` lines, sorted, without the output directory.
    /// Numbers are written in one canonical form, so `1/8` and `0.125` agree.
    pub fn canonical(&self) -> String {
        let specs = schema();
        let num = |v: &str| format!("{:?}", parse_float(v).expect("checked on parse"));
        self.values
            .iter()
            .filter(|(k, _)| k.as_str() != "output.dir")
            .map(|(k, v)| {
                let v = match specs.iter().find(|s| &s.key == k).map(|s| &s.ty) {
                    Some(KeyType::Float) => num(v),
                    Some(KeyType::Floats) => v.split(',').map(num).collect::<Vec<_>>().join(","),
                    Some(KeyType::List) => v.split(',').map(str::trim).collect::<Vec<_>>().join(","),
                    _ => v.clone(),
                };
                format!("{k} = {v}\n")
            })
            .collect()
    }

    /// SHA-256 of [`RunConfig::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn unquote(v: &str) -> String {
    let t = v.trim();
    t.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(t).to_string()
}
