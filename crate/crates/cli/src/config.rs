//! Flat `key = value` config files: one assignment per line, `#`
//! comments, duplicate keys rejected with the offending line number,
//! unknown keys rejected by name. List values are whitespace-separated;
//! complex lists use `re,im` pairs.

use entrodyn::{Error, Result};
use num_complex::Complex64;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct FlatConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(lineno, "expected `key = value`"))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(Error::parse(lineno, "empty key"));
            }
            if let Some((_, first)) = entries.get(&key) {
                return Err(Error::parse(
                    lineno,
                    format!("duplicate key `{key}` (first set on line {first})"),
                ));
            }
            entries.insert(key, (value, lineno));
        }
        Ok(Self { entries })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Errors on any key outside the allowed set, naming it.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        for (key, (_, lineno)) in &self.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::parse(*lineno, format!("unknown key `{key}`")));
            }
        }
        Ok(())
    }

    /// Variant for configs with indexed keys like `l0`, `l1`, ….
    pub fn reject_unknown_with_prefixes(&self, allowed: &[&str], prefixes: &[&str]) -> Result<()> {
        'keys: for (key, (_, lineno)) in &self.entries {
            if allowed.contains(&key.as_str()) {
                continue;
            }
            for p in prefixes {
                if let Some(suffix) = key.strip_prefix(p) {
                    if !suffix.is_empty() && suffix.chars().all(|c| c.is_ascii_digit()) {
                        continue 'keys;
                    }
                }
            }
            return Err(Error::parse(*lineno, format!("unknown key `{key}`")));
        }
        Ok(())
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn raw(&self, key: &str) -> Result<(&str, usize)> {
        self.entries
            .get(key)
            .map(|(v, l)| (v.as_str(), *l))
            .ok_or_else(|| Error::Validation(format!("missing required key `{key}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let (v, lineno) = self.raw(key)?;
        v.parse()
            .map_err(|_| Error::parse(lineno, format!("key `{key}`: bad number `{v}`")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.has(key) {
            self.f64(key)
        } else {
            Ok(default)
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let (v, lineno) = self.raw(key)?;
        v.parse()
            .map_err(|_| Error::parse(lineno, format!("key `{key}`: bad integer `{v}`")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        if self.has(key) {
            self.usize(key)
        } else {
            Ok(default)
        }
    }

    pub fn string(&self, key: &str) -> Result<String> {
        Ok(self.raw(key)?.0.to_string())
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let (v, lineno) = self.raw(key)?;
        v.split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::parse(lineno, format!("key `{key}`: bad number `{t}`")))
            })
            .collect()
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        let (v, lineno) = self.raw(key)?;
        v.split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::parse(lineno, format!("key `{key}`: bad index `{t}`")))
            })
            .collect()
    }

    /// Whitespace-separated `re,im` pairs.
    pub fn complex_list(&self, key: &str) -> Result<Vec<Complex64>> {
        let (v, lineno) = self.raw(key)?;
        v.split_whitespace()
            .map(|t| parse_pair(t, key, lineno))
            .collect()
    }
}

fn parse_pair(token: &str, key: &str, lineno: usize) -> Result<Complex64> {
    let (re, im) = token.split_once(',').ok_or_else(|| {
        Error::parse(lineno, format!("key `{key}`: expected re,im pair, got `{token}`"))
    })?;
    let re: f64 = re
        .parse()
        .map_err(|_| Error::parse(lineno, format!("key `{key}`: bad real part `{re}`")))?;
    let im: f64 = im
        .parse()
        .map_err(|_| Error::parse(lineno, format!("key `{key}`: bad imaginary part `{im}`")))?;
    Ok(Complex64::new(re, im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_duplicates() {
        let cfg = FlatConfig::parse("a = 1\n# comment\nb = 2.5\n").unwrap();
        assert_eq!(cfg.f64("a").unwrap(), 1.0);
        assert_eq!(cfg.f64("b").unwrap(), 2.5);
        match FlatConfig::parse("a = 1\na = 2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected duplicate-key error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_named() {
        let cfg = FlatConfig::parse("good = 1\nbogus = 2\n").unwrap();
        let err = cfg.reject_unknown(&["good"]).unwrap_err();
        assert!(format!("{err}").contains("bogus"));
    }

    #[test]
    fn indexed_prefixes() {
        let cfg = FlatConfig::parse("dim = 2\nl0 = 1,0\nl17 = 0,0\n").unwrap();
        cfg.reject_unknown_with_prefixes(&["dim"], &["l"]).unwrap();
        let cfg = FlatConfig::parse("lx = 1\n").unwrap();
        assert!(cfg.reject_unknown_with_prefixes(&[], &["l"]).is_err());
    }

    #[test]
    fn complex_pairs() {
        let cfg = FlatConfig::parse("g = 1,0 0.5,-0.25\n").unwrap();
        let g = cfg.complex_list("g").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[1], Complex64::new(0.5, -0.25));
    }
}
