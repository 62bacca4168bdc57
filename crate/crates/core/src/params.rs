//! Benchmark parameters: values, schemas, and size classes.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single parameter value. CLI `k=v` strings parse to the first matching
/// variant (integer, then float, then text).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ParamValue {
    pub fn parse(s: &str) -> ParamValue {
        if let Ok(i) = s.parse::<i64>() {
            ParamValue::Int(i)
        } else if let Ok(f) = s.parse::<f64>() {
            ParamValue::Float(f)
        } else {
            ParamValue::Text(s.to_string())
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ParamValue::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Text(s) => write!(f, "{s}"),
        }
    }
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Float(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_string())
    }
}

/// Effective parameter assignment for one run.
pub type ParamSet = BTreeMap<String, ParamValue>;

pub fn param_set(entries: &[(&str, ParamValue)]) -> ParamSet {
    entries
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

/// Typed accessors with uniform error reporting.
pub trait ParamSetExt {
    fn usize(&self, key: &str) -> Result<usize>;
    fn u64(&self, key: &str) -> Result<u64>;
    fn f64(&self, key: &str) -> Result<f64>;
    fn str(&self, key: &str) -> Result<&str>;
}

impl ParamSetExt for ParamSet {
    fn usize(&self, key: &str) -> Result<usize> {
        let v = self
            .get(key)
            .and_then(|v| v.as_i64())
            .ok_or_else(|| Error::invalid_param(key, "expected an integer"))?;
        usize::try_from(v).map_err(|_| Error::invalid_param(key, "must be non-negative"))
    }

    fn u64(&self, key: &str) -> Result<u64> {
        let v = self
            .get(key)
            .and_then(|v| v.as_i64())
            .ok_or_else(|| Error::invalid_param(key, "expected an integer"))?;
        u64::try_from(v).map_err(|_| Error::invalid_param(key, "must be non-negative"))
    }

    fn f64(&self, key: &str) -> Result<f64> {
        self.get(key)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| Error::invalid_param(key, "expected a number"))
    }

    fn str(&self, key: &str) -> Result<&str> {
        self.get(key)
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::invalid_param(key, "expected a string"))
    }
}

/// Schema entry for one parameter of one benchmark.
#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub key: String,
    pub kind: ParamKind,
    pub help: String,
}

#[derive(Debug, Clone)]
pub enum ParamKind {
    Int { min: i64, max: i64 },
    Float { min: f64, max: f64 },
    Choice(Vec<String>),
}

impl ParamSpec {
    pub fn int(key: &str, min: i64, max: i64, help: &str) -> ParamSpec {
        ParamSpec {
            key: key.to_string(),
            kind: ParamKind::Int { min, max },
            help: help.to_string(),
        }
    }

    pub fn float(key: &str, min: f64, max: f64, help: &str) -> ParamSpec {
        ParamSpec {
            key: key.to_string(),
            kind: ParamKind::Float { min, max },
            help: help.to_string(),
        }
    }

    pub fn choice(key: &str, options: &[&str], help: &str) -> ParamSpec {
        ParamSpec {
            key: key.to_string(),
            kind: ParamKind::Choice(options.iter().map(|s| s.to_string()).collect()),
            help: help.to_string(),
        }
    }

    pub fn validate(&self, value: &ParamValue) -> Result<()> {
        match &self.kind {
            ParamKind::Int { min, max } => {
                let v = value
                    .as_i64()
                    .ok_or_else(|| Error::invalid_param(&self.key, "expected an integer"))?;
                if v < *min || v > *max {
                    return Err(Error::invalid_param(
                        &self.key,
                        format!("{v} outside [{min}, {max}]"),
                    ));
                }
            }
            ParamKind::Float { min, max } => {
                let v = value
                    .as_f64()
                    .ok_or_else(|| Error::invalid_param(&self.key, "expected a number"))?;
                if !v.is_finite() || v < *min || v > *max {
                    return Err(Error::invalid_param(
                        &self.key,
                        format!("{v} outside [{min}, {max}]"),
                    ));
                }
            }
            ParamKind::Choice(options) => {
                let v = value
                    .as_str()
                    .ok_or_else(|| Error::invalid_param(&self.key, "expected a string"))?;
                if !options.iter().any(|o| o == v) {
                    return Err(Error::invalid_param(
                        &self.key,
                        format!("`{v}` not one of {options:?}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// One of the four preset problem sizes, or fully user-specified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SizeClass {
    Preset(u8),
    Custom,
}

impl SizeClass {
    pub fn parse(s: &str) -> Result<SizeClass> {
        match s {
            "1" | "2" | "3" | "4" => Ok(SizeClass::Preset(s.parse().unwrap())),
            "custom" | "CUSTOM" => Ok(SizeClass::Custom),
            other => Err(Error::invalid_param(
                "size",
                format!("`{other}` is not 1-4 or `custom`"),
            )),
        }
    }
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeClass::Preset(n) => write!(f, "{n}"),
            SizeClass::Custom => write!(f, "custom"),
        }
    }
}

/// Parses a CLI `key=value` pair.
pub fn parse_override(s: &str) -> Result<(String, ParamValue)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::invalid_param(s, "expected key=value"))?;
    if k.is_empty() {
        return Err(Error::invalid_param(s, "empty key"));
    }
    Ok((k.to_string(), ParamValue::parse(v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_int_float_text() {
        assert_eq!(ParamValue::parse("384"), ParamValue::Int(384));
        assert_eq!(ParamValue::parse("0.5"), ParamValue::Float(0.5));
        assert_eq!(ParamValue::parse("f32"), ParamValue::Text("f32".into()));
    }

    #[test]
    fn range_validation() {
        let spec = ParamSpec::int("n", 1, 100, "");
        assert!(spec.validate(&ParamValue::Int(50)).is_ok());
        assert!(spec.validate(&ParamValue::Int(0)).is_err());
        assert!(spec.validate(&ParamValue::Text("x".into())).is_err());
    }

    #[test]
    fn choice_validation() {
        let spec = ParamSpec::choice("precision", &["f32", "f64"], "");
        assert!(spec.validate(&ParamValue::Text("f32".into())).is_ok());
        assert!(spec.validate(&ParamValue::Text("f16".into())).is_err());
    }

    #[test]
    fn size_class_parse() {
        assert_eq!(SizeClass::parse("2").unwrap(), SizeClass::Preset(2));
        assert_eq!(SizeClass::parse("custom").unwrap(), SizeClass::Custom);
        assert!(SizeClass::parse("5").is_err());
    }

    #[test]
    fn override_parse() {
        let (k, v) = parse_override("n=384").unwrap();
        assert_eq!(k, "n");
        assert_eq!(v, ParamValue::Int(384));
        assert!(parse_override("bogus").is_err());
    }
}
