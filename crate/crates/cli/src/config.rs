use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use sqfn_core::spectral::OperatorKind;
use sqfn_core::verify::{digest, Transform, WeightSpec};

/// Config keys and the section each belongs to. Keys may also appear
/// before the first header.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("operator", "operator", "laplacian"),
    ("operator", "dim", "1"),
    ("operator", "N", "128"),
    ("operator", "R", "default"),
    ("operator", "hermite_K", "128"),
    ("operator", "kernel_budget_mb", "512"),
    ("time", "t_min", "default"),
    ("time", "t_max", "default"),
    ("time", "ratio", "1.0905077326652577"),
    ("family", "seed", "11"),
    ("family", "family_size", "20"),
    ("family", "band", "default"),
    ("checks", "checks", ""),
    ("checks", "transforms", "s_h, s_p, S_H, S_P, g*_3.5"),
    ("checks", "mu", "3.5"),
    ("checks", "p_list", "1.5, 2, 4"),
    ("checks", "growth_p_list", "2, 4, 8, 16, 32"),
    ("checks", "weights", "const, power:-0.5, power:0.5, checker:10, spike"),
    ("checks", "lambda", "default"),
    ("checks", "rdf_seeds", "10"),
    ("checks", "whitney_masks", "50"),
    ("run", "workers", "1"),
    ("run", "out", "sqfn-out"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError { line, message: message.into() }
}

fn section_of(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(_, k, _)| *k == key).map(|(s, _, _)| *s)
}

/// Raw `key -> (value, line)` table after syntax and key checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Option<usize>)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        let mut section: Option<String> = None;
        for (i, line) in text.lines().enumerate() {
            let n = Some(i + 1);
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| err(n, "unterminated section header"))?.trim();
                if !KEYS.iter().any(|(s, _, _)| *s == name) {
                    return Err(err(n, format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err(n, format!("expected key = value, got {line:?}")))?;
            raw.set(key.trim(), value.trim(), section.as_deref(), n)?;
        }
        Ok(raw)
    }

    /// Inserts one entry, checking that `key` exists and belongs to `section`.
    pub fn set(&mut self, key: &str, value: &str, section: Option<&str>, line: Option<usize>) -> Result<(), ConfigError> {
        let home = section_of(key).ok_or_else(|| err(line, format!("unknown key {key:?}")))?;
        if let Some(s) = section {
            if s != home {
                return Err(err(line, format!("key {key:?} belongs in [{home}], not [{s}]")));
            }
        }
        self.entries.insert(key.to_string(), (value.to_string(), line));
        Ok(())
    }

    fn get(&self, key: &str) -> (&str, Option<usize>) {
        match self.entries.get(key) {
            Some((v, l)) => (v.as_str(), *l),
            None => (KEYS.iter().find(|(_, k, _)| *k == key).map(|(_, _, d)| *d).expect("registered key"), None),
        }
    }

    /// Sorted `key = value` lines, defaults included.
    pub fn canonical(&self) -> String {
        let mut keys: Vec<&str> = KEYS.iter().map(|(_, k, _)| *k).filter(|k| *k != "out" && *k != "workers").collect();
        keys.sort_unstable();
        keys.iter().map(|k| format!("{k} = {}\n", normalize(self.get(k).0))).collect()
    }
}

fn normalize(value: &str) -> String {
    value.split(',').map(str::trim).collect::<Vec<_>>().join(", ")
}

fn parsed<T: std::str::FromStr>(raw: &RawConfig, key: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    let (v, line) = raw.get(key);
    v.parse().map_err(|e| err(line, format!("{key}: cannot parse {v:?}: {e}")))
}

fn optional(raw: &RawConfig, key: &str) -> Result<Option<f64>, ConfigError> {
    if raw.get(key).0 == "default" {
        Ok(None)
    } else {
        parsed(raw, key).map(Some)
    }
}

fn list<T: std::str::FromStr>(raw: &RawConfig, key: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    let (v, line) = raw.get(key);
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| err(line, format!("{key}: cannot parse {s:?}: {e}"))))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub operator: OperatorKind,
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
    pub hermite_k: usize,
    pub kernel_budget_mb: usize,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub ratio: f64,
    pub seed: u64,
    pub family_size: usize,
    pub band: Option<(f64, f64)>,
    pub checks: Vec<String>,
    pub transforms: Vec<Transform>,
    pub mu: f64,
    pub p_list: Vec<f64>,
    pub growth_p_list: Vec<f64>,
    pub weights: Vec<WeightSpec>,
    pub lambda: Option<f64>,
    pub rdf_seeds: usize,
    pub whitney_masks: usize,
    pub workers: usize,
    pub out: PathBuf,
    /// Digest of the canonical text (defaults filled in, output keys excluded).
    pub hash: String,
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let operator: OperatorKind = parsed(raw, "operator")?;
        let half_width = match optional(raw, "R")? {
            Some(r) => r,
            None if operator == OperatorKind::Hermite => 20.0,
            None => std::f64::consts::PI,
        };
        let band = match raw.get("band") {
            ("default", _) => None,
            (_, line) => match list::<f64>(raw, "band")?.as_slice() {
                [lo, hi] if lo < hi => Some((*lo, *hi)),
                _ => return Err(err(line, "band: expected two increasing numbers lo, hi")),
            },
        };
        let checks: Vec<String> = list(raw, "checks")?;
        if let Some(bad) = checks.iter().find(|c| crate::checks::find(c).is_none()) {
            return Err(err(raw.get("checks").1, format!("unknown check {bad:?}")));
        }
        let cfg = Self {
            operator,
            dim: parsed(raw, "dim")?,
            n: parsed(raw, "N")?,
            half_width,
            hermite_k: parsed(raw, "hermite_K")?,
            kernel_budget_mb: parsed(raw, "kernel_budget_mb")?,
            t_min: optional(raw, "t_min")?,
            t_max: optional(raw, "t_max")?,
            ratio: parsed(raw, "ratio")?,
            seed: parsed(raw, "seed")?,
            family_size: parsed(raw, "family_size")?,
            band,
            checks,
            transforms: list(raw, "transforms")?,
            mu: parsed(raw, "mu")?,
            p_list: list(raw, "p_list")?,
            growth_p_list: list(raw, "growth_p_list")?,
            weights: list(raw, "weights")?,
            lambda: optional(raw, "lambda")?,
            rdf_seeds: parsed(raw, "rdf_seeds")?,
            whitney_masks: parsed(raw, "whitney_masks")?,
            workers: parsed(raw, "workers")?,
            out: PathBuf::from(raw.get("out").0),
            hash: digest(&raw.canonical()),
        };
        if cfg.workers == 0 {
            return Err(err(raw.get("workers").1, "workers must be at least 1"));
        }
        if !matches!(cfg.dim, 1 | 2) {
            return Err(err(raw.get("dim").1, "dim must be 1 or 2"));
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::parse(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_sections() {
        let c = RunConfig::parse("[operator]\noperator = hermite\nN = 512\n[checks]\nchecks = plancherel\n").unwrap();
        assert_eq!(c.operator, OperatorKind::Hermite);
        assert_eq!(c.half_width, 20.0);
        assert_eq!(c.weights.len(), 5);
        assert_eq!(c.checks, ["plancherel"]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = RunConfig::parse("# comment\n\nN = 64\nbogus = 1\n").unwrap_err();
        assert_eq!(e.line, Some(4));
        let e = RunConfig::parse("N = 64\njust words\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = RunConfig::parse("[time]\nN = 64\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = RunConfig::parse("\n\nN = many\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(RunConfig::parse("[nowhere]\n").is_err());
    }

    #[test]
    fn hash_ignores_layout_and_output_keys() {
        let a = RunConfig::parse("N = 64\nmu = 4\n").unwrap();
        let b = RunConfig::parse("[checks]\nmu=4   # same\n[operator]\nN=64\n[run]\nout = elsewhere\n").unwrap();
        let c = RunConfig::parse("N = 64\nmu = 5\n").unwrap();
        assert_eq!(a.hash, b.hash);
        assert_ne!(a.hash, c.hash);
    }
}
