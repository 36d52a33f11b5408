use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use hitchlab::Complex64;
use sha2::{Digest, Sha256};

/// Keys, defaults and whether the value is a tolerance.
const KEYS: &[(&str, &str, bool)] = &[
    ("level", "1", false),
    ("seed", "0", false),
    ("threads", "4", false),
    ("n", "2", false),
    ("qn_sup", "0", false),
    ("qn_poly", "1;0,0.5", false),
    ("direction", "1", false),
    ("truncation", "4", false),
    ("directions", "3", false),
    ("radius", "0.04", false),
    ("grid", "2", false),
    ("base_scales", "0,0.2", false),
    ("perturb", "0", false),
    ("hessian_level", "0", false),
    ("hessian_step", "0.02", false),
    ("harmonic_tol", "1e-9", true),
    ("pde_tol", "1e-10", true),
    ("energy_tol", "0.02", true),
    ("gap_stability", "0.2", true),
    ("theta_tol", "1e-2", true),
];

#[derive(Clone, Debug)]
pub struct Config {
    values: BTreeMap<String, String>,
    sources: BTreeMap<String, &'static str>,
}

impl Default for Config {
    fn default() -> Self {
        let mut values = BTreeMap::new();
        let mut sources = BTreeMap::new();
        for (k, v, _) in KEYS {
            values.insert(k.to_string(), v.to_string());
            sources.insert(k.to_string(), "default");
        }
        Self { values, sources }
    }
}

impl Config {
    /// Reads `key = value` lines; `#` starts a comment.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                anyhow!("{}:{}: expected key = value", path.display(), lineno + 1)
            })?;
            cfg.set(k.trim(), v.trim(), "config file")?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str, source: &'static str) -> Result<()> {
        if !KEYS.iter().any(|(k, _, _)| *k == key) {
            bail!("unknown config key `{key}`");
        }
        self.values.insert(key.to_string(), value.to_string());
        self.sources.insert(key.to_string(), source);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (k, _, tol) in KEYS {
            if *tol && !(self.f64(k)? > 0.0) {
                bail!("tolerance `{k}` must be positive");
            }
        }
        for k in ["radius", "hessian_step"] {
            if !(self.f64(k)? > 0.0) {
                bail!("`{k}` must be positive");
            }
        }
        if self.usize("grid")? < 2 {
            bail!("`grid` must be at least 2");
        }
        if self.usize("threads")? == 0 {
            bail!("`threads` must be at least 1");
        }
        self.complex_list("direction")?;
        self.complex_list("qn_poly")?;
        self.f64_list("base_scales")?;
        Ok(())
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.raw(key)
            .parse()
            .with_context(|| format!("`{key}` is not a number"))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.raw(key)
            .parse()
            .with_context(|| format!("`{key}` is not a non-negative integer"))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.raw(key)
            .parse()
            .with_context(|| format!("`{key}` is not a non-negative integer"))
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.raw(key)
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .with_context(|| format!("`{key}`: bad number `{s}`"))
            })
            .collect()
    }

    /// `re[,im];re[,im];…`, or `zero` for the empty list.
    pub fn complex_list(&self, key: &str) -> Result<Vec<Complex64>> {
        let raw = self.raw(key).trim();
        if raw == "zero" {
            return Ok(Vec::new());
        }
        raw.split(';')
            .map(|term| {
                let parts: Vec<&str> = term.split(',').map(str::trim).collect();
                let num = |s: &str| -> Result<f64> {
                    s.parse()
                        .with_context(|| format!("`{key}`: bad coefficient `{term}`"))
                };
                match parts.as_slice() {
                    [re] => Ok(Complex64::new(num(re)?, 0.0)),
                    [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
                    _ => bail!("`{key}`: bad coefficient `{term}`"),
                }
            })
            .collect()
    }

    /// Canonical `key=value` lines in key order.
    pub fn canonical(&self) -> String {
        self.values
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn entries(&self) -> BTreeMap<String, String> {
        self.values.clone()
    }

    /// Tolerance name → (value, where it came from).
    pub fn tolerances(&self) -> BTreeMap<String, (String, String)> {
        KEYS.iter()
            .filter(|(_, _, tol)| *tol)
            .map(|(k, _, _)| {
                (
                    k.to_string(),
                    (self.raw(k).to_string(), self.sources[*k].to_string()),
                )
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        Config::default().validate().unwrap();
    }

    #[test]
    fn complex_lists() {
        let mut c = Config::default();
        c.set("direction", "1; 0,-2 ;0.5", "test").unwrap();
        assert_eq!(
            c.complex_list("direction").unwrap(),
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, -2.0),
                Complex64::new(0.5, 0.0)
            ]
        );
        c.set("direction", "zero", "test").unwrap();
        assert!(c.complex_list("direction").unwrap().is_empty());
        c.set("direction", "1,2,3", "test").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn rejects_unknown_and_nonpositive() {
        let mut c = Config::default();
        assert!(c.set("colour", "red", "test").is_err());
        c.set("pde_tol", "0", "test").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_tracks_values() {
        let a = Config::default();
        let mut b = Config::default();
        assert_eq!(a.hash(), b.hash());
        b.set("level", "2", "test").unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
