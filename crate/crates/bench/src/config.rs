//! Flat key-value configuration.
//!
//! Config files are TOML restricted to scalar values and arrays of scalars.
//! A table nests keys with dots, so `[lstm]` followed by `max_epochs = 40`
//! is the same key as `lstm.max_epochs = 40`. Every value is kept as its
//! canonical text; command-line `--set key=value` pairs override file keys.
//! Unknown keys are an error.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use cyclecast::dataset::SplitSpec;
use cyclecast::reactor::{GeneratorConfig, GridAxis};

use crate::error::{BenchError, Result};
use crate::models::num;
use crate::seed::sha256_hex;

#[derive(Debug, Clone, Default)]
pub struct FlatConfig {
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl PartialEq for FlatConfig {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, String>) -> Result<()> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out)?,
            other => {
                out.insert(key.clone(), scalar_text(&key, other)?);
            }
        }
    }
    Ok(())
}

fn scalar_text(key: &str, v: &toml::Value) -> Result<String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => num(*f),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => {
            items.iter().map(|i| scalar_text(key, i)).collect::<Result<Vec<_>>>()?.join(",")
        }
        _ => return Err(BenchError::Config(format!("'{key}' must be a scalar or a list of scalars"))),
    })
}

impl FlatConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| BenchError::Config(e.to_string()))?;
        let mut values = BTreeMap::new();
        flatten("", &table, &mut values)?;
        Ok(Self { values, used: RefCell::default() })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Self { values: pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect(), used: RefCell::default() }
    }

    /// Applies `key=value` overrides.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| BenchError::Config(format!("override '{o}' is not of the form key=value")))?;
            self.values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.into(), value.into());
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// SHA-256 over the sorted `key=value` lines.
    pub fn hash(&self) -> String {
        let text: String = self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        sha256_hex(text.as_bytes())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        let v = self.values.get(key)?;
        self.used.borrow_mut().insert(key.into());
        Some(v)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| v.parse().map_err(|_| BenchError::Config(format!("cannot parse '{v}' for '{key}'"))))
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim())
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse().map_err(|_| BenchError::Config(format!("cannot parse '{s}' in '{key}'"))))
                    .collect()
            })
            .transpose()
    }

    /// `(suffix, value)` of every key under `prefix.`, marking them used.
    pub fn section(&self, prefix: &str) -> Vec<(String, String)> {
        let p = format!("{prefix}.");
        let items: Vec<_> = self
            .values
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(&p).map(|s| (s.to_string(), v.clone())))
            .collect();
        for (k, _) in &items {
            self.used.borrow_mut().insert(format!("{p}{k}"));
        }
        items
    }

    /// Fails on keys nothing asked for.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<_> = self.values.keys().filter(|k| !used.contains(*k)).cloned().collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(BenchError::Config(format!("unknown config key(s): {}", unknown.join(", "))))
        }
    }
}

/// Generator settings read from `prefix` + key (prefix empty or ending in a dot).
///
/// Keys: `seed`, `horizon_years`, `max_cycles`, `plug_flow_substeps`,
/// `activity_substeps`, `eor_conversion`, `max_hold_hours`,
/// `max_cycle_hours`, `min_activity`, kinetic constants `k1`, `e1`, `k2`,
/// `e2`, `k_a`, `e_a`, `volume`, and range bounds `mass_flow_min`/`_max`
/// (kg/h), `pressure_bar_min`/`_max`, `temperature_c_min`/`_max`,
/// `mu_olefine_min`/`_max`.
pub fn generator_config(cfg: &FlatConfig, prefix: &str) -> Result<GeneratorConfig> {
    let mut g = GeneratorConfig::default();
    let key = |k: &str| format!("{prefix}{k}");
    macro_rules! read {
        ($($name:literal => $slot:expr),* $(,)?) => {
            $( if let Some(v) = cfg.get(&key($name))? { $slot = v; } )*
        };
    }
    read! {
        "seed" => g.seed,
        "horizon_years" => g.horizon_years,
        "plug_flow_substeps" => g.plug_flow_substeps,
        "activity_substeps" => g.activity_substeps,
        "eor_conversion" => g.eor_conversion,
        "max_hold_hours" => g.max_hold_hours,
        "max_cycle_hours" => g.max_cycle_hours,
        "min_activity" => g.min_activity,
        "k1" => g.kinetics.k1,
        "e1" => g.kinetics.e1,
        "k2" => g.kinetics.k2,
        "e2" => g.kinetics.e2,
        "k_a" => g.kinetics.k_a,
        "e_a" => g.kinetics.e_a,
        "volume" => g.kinetics.volume,
    }
    if let Some(n) = cfg.get::<usize>(&key("max_cycles"))? {
        g.max_cycles = Some(n);
    }
    let axis = |name: &str, axis: &mut GridAxis| -> Result<()> {
        let lo = cfg.get(&key(&format!("{name}_min")))?.unwrap_or(axis.min);
        let hi = cfg.get(&key(&format!("{name}_max")))?.unwrap_or(axis.max);
        *axis = GridAxis { min: lo, max: hi, ..*axis };
        Ok(())
    };
    axis("mass_flow", &mut g.ranges.mass_flow)?;
    axis("pressure_bar", &mut g.ranges.pressure_bar)?;
    axis("temperature_c", &mut g.ranges.temperature_c)?;
    axis("mu_olefine", &mut g.ranges.mu_olefine)?;
    g.validate()?;
    Ok(g)
}

/// Parses `all`, `random:<test_fraction>:<seed>`, `ids:<train ids>/<test ids>`
/// (comma-separated) or `charge:<test charge ids>`. `all` means no split.
pub fn parse_split(text: &str) -> Result<Option<SplitSpec>> {
    let bad = || BenchError::Config(format!("cannot parse split '{text}'"));
    let ids = |s: &str| -> Result<Vec<u64>> {
        s.split(',').map(str::trim).filter(|v| !v.is_empty()).map(|v| v.parse().map_err(|_| bad())).collect()
    };
    let parts: Vec<&str> = text.splitn(2, ':').collect();
    Ok(Some(match parts.as_slice() {
        ["all"] => return Ok(None),
        ["random", rest] => {
            let (f, s) = rest.split_once(':').ok_or_else(bad)?;
            SplitSpec::Random { test_fraction: f.parse().map_err(|_| bad())?, seed: s.parse().map_err(|_| bad())? }
        }
        ["ids", rest] => {
            let (a, b) = rest.split_once('/').ok_or_else(bad)?;
            SplitSpec::Explicit { train: ids(a)?, test: ids(b)? }
        }
        ["charge", rest] => SplitSpec::ByCharge { test_charges: ids(rest)? },
        _ => return Err(bad()),
    }))
}
