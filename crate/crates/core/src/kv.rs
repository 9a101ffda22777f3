//! Plain-text `key = value` blocks.
//!
//! One entry per line, `#` starts a comment, blank lines are ignored. Later
//! duplicates override earlier ones. Reals are written with 17 significant
//! digits so that parsing reproduces the exact bits.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub type KvMap = BTreeMap<String, String>;

pub fn parse(text: &str) -> Result<KvMap> {
    let mut out = KvMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", lineno + 1)));
        }
        out.insert(key.to_string(), value.trim().to_string());
    }
    Ok(out)
}

/// 17 significant digits, scientific notation.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| Error::Parse(format!("{key}: `{value}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("{key}: non-finite value")));
    }
    Ok(v)
}
