//! Flat `key = value` configuration.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! line    := blank | comment | entry
//! comment := '#' any*
//! entry   := key ws* '=' ws* value ws* comment?
//! list    := item (',' item)*          (for keys taking several values)
//! ratio   := integer '/' integer | decimal
//! matrix  := nine numbers separated by commas or whitespace, row-major
//! ```
//!
//! Unknown keys are errors. Command-line flags use the same names with
//! dashes (`--grid-cols`) and override file values.

use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra::Matrix3;

use super::{Method, Scenario, Source};
use crate::features::ExtractConfig;
use crate::gms::{GmsConfig, GridShift};
use crate::imageio::Dims;
use crate::robust::ModelKind;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("bad value for '{key}': {msg}")]
    BadValue { key: String, msg: String },
    #[error("missing required key '{0}'")]
    Missing(String),
}

pub const KEYS: &[&str] = &[
    "scenario",
    "source",
    "width",
    "height",
    "homography",
    "n_inliers",
    "n_outliers",
    "noise",
    "scene_seed",
    "outlier_rate",
    "path_a",
    "path_b",
    "reference_homography",
    "preset",
    "presets",
    "ratio",
    "ratios",
    "method",
    "methods",
    "seed",
    "seeds",
    "repeats",
    "grid_cols",
    "grid_rows",
    "alpha",
    "shifts_enabled",
    "gms_reject",
    "kernel",
    "inlier_threshold",
    "confidence_p",
    "max_iterations",
    "phase1_budget",
    "fast_threshold",
    "fallback_threshold",
    "nms_radius",
    "hardware",
    "single_worker",
    "format",
    "out",
];

/// Raw key/value pairs in insertion order of their last assignment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = ConfigMap::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                msg: "expected 'key = value'".into(),
            })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1, msg: "empty key".into() });
            }
            map.set(k, v.trim())?;
        }
        Ok(map)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        self.entries.insert(key, value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| bad(key, e)))
            .transpose()
    }

    fn list<T>(&self, key: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Option<Vec<T>>, ConfigError> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| f(s).map_err(|e| bad(key, e)))
                    .collect()
            })
            .transpose()
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError::BadValue { key: key.into(), msg: msg.to_string() }
}

/// Parses `p/q` or a decimal.
pub fn parse_ratio(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| format!("bad numerator in '{s}'"))?;
            let q: f64 = q.trim().parse().map_err(|_| format!("bad denominator in '{s}'"))?;
            if q == 0.0 {
                return Err(format!("zero denominator in '{s}'"));
            }
            p / q
        }
        None => s.trim().parse().map_err(|_| format!("bad ratio '{s}'"))?,
    };
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("ratio {s} outside (0, 1]"))
    }
}

pub fn parse_matrix(s: &str) -> Result<Matrix3<f64>, String> {
    let v: Vec<f64> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("bad number '{t}'")))
        .collect::<Result<_, _>>()?;
    if v.len() != 9 {
        return Err(format!("expected 9 numbers, found {}", v.len()));
    }
    Ok(Matrix3::from_row_slice(&v))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(format!("expected a boolean, found '{other}'")),
    }
}

/// The ratio grid used by ratio sweeps when none is configured.
pub const DEFAULT_RATIOS: [(u32, u32); 7] = [(1, 5), (1, 4), (1, 3), (1, 2), (2, 3), (3, 4), (4, 5)];

pub fn default_ratios() -> Vec<f64> {
    DEFAULT_RATIOS.iter().map(|&(p, q)| p as f64 / q as f64).collect()
}

/// Output encoding for run records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(format!("unknown format '{other}' (csv|jsonl)")),
        }
    }
}

/// Fully resolved harness settings.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub base: Scenario,
    pub presets: Vec<usize>,
    pub ratios: Vec<f64>,
    pub methods: Vec<Method>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

/// Homography used by synthetic correspondence scenarios unless configured.
pub fn default_synthetic_homography() -> Matrix3<f64> {
    Matrix3::new(0.98, -0.06, 18.0, 0.05, 1.01, -9.0, 2e-5, -1e-5, 1.0)
}

impl BenchConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self, ConfigError> {
        let width = map.parsed::<usize>("width")?.unwrap_or(640);
        let height = map.parsed::<usize>("height")?.unwrap_or(480);
        if width == 0 || height == 0 {
            return Err(bad("width", "dimensions must be positive"));
        }
        let extent = Dims::new(width, height);
        let matrix = |key: &str| map.get(key).map(|v| parse_matrix(v).map_err(|e| bad(key, e))).transpose();
        let noise = map.parsed::<f64>("noise")?.unwrap_or(0.5);
        if !(noise >= 0.0) {
            return Err(bad("noise", "must be non-negative"));
        }

        let source = match map.get("source").unwrap_or("synthetic") {
            "synthetic" => Source::Synthetic {
                homography: matrix("homography")?.unwrap_or_else(default_synthetic_homography),
                n_inliers: map.parsed("n_inliers")?.unwrap_or(1000),
                n_outliers: map.parsed("n_outliers")?.unwrap_or(1000),
                noise,
                extent,
            },
            "warped" => {
                let outlier_rate = map.parsed::<f64>("outlier_rate")?.unwrap_or(0.5);
                if !(0.0..1.0).contains(&outlier_rate) {
                    return Err(bad("outlier_rate", "must lie in [0, 1)"));
                }
                Source::Warped {
                    extent,
                    scene_seed: map.parsed("scene_seed")?,
                    homography: matrix("homography")?,
                    outlier_rate,
                    noise,
                }
            }
            "image_pair" => Source::ImagePair {
                path_a: map.get("path_a").ok_or_else(|| ConfigError::Missing("path_a".into()))?.into(),
                path_b: map.get("path_b").ok_or_else(|| ConfigError::Missing("path_b".into()))?.into(),
                reference: matrix("reference_homography")?,
            },
            other => return Err(bad("source", format!("unknown source '{other}'"))),
        };

        let preset = map.parsed::<usize>("preset")?.unwrap_or(3000);
        if preset == 0 {
            return Err(bad("preset", "must be at least 1"));
        }
        let ratio = map.get("ratio").map(|v| parse_ratio(v).map_err(|e| bad("ratio", e))).transpose()?.unwrap_or(0.5);
        let method = map.parsed::<Method>("method")?.unwrap_or(Method::GmsRansacPrioritized);

        let seeds = match map.list("seeds", |s| s.parse::<u64>().map_err(|e| e.to_string()))? {
            Some(s) if !s.is_empty() => s,
            _ => {
                let base = map.parsed::<u64>("seed")?.unwrap_or(0);
                let repeats = map.parsed::<usize>("repeats")?.unwrap_or(1);
                if repeats == 0 {
                    return Err(bad("repeats", "must be at least 1"));
                }
                Scenario::derive_seeds(base, repeats)
            }
        };

        let mut gms = GmsConfig::default();
        if let Some(c) = map.parsed("grid_cols")? {
            gms.cols = c;
        }
        if let Some(r) = map.parsed("grid_rows")? {
            gms.rows = r;
        }
        if let Some(a) = map.parsed("alpha")? {
            gms.alpha = a;
        }
        if let Some(s) = map.list("shifts_enabled", |s| s.parse::<GridShift>())? {
            gms.shifts = s;
        }
        if let Some(r) = map.get("gms_reject") {
            gms.reject = parse_bool(r).map_err(|e| bad("gms_reject", e))?;
        }
        if gms.cols == 0 || gms.rows == 0 || !(gms.alpha > 0.0) || gms.shifts.is_empty() {
            return Err(bad("grid_cols", "grid needs positive size, positive alpha and at least one shift"));
        }

        let mut extract = ExtractConfig::default();
        if let Some(t) = map.parsed("fast_threshold")? {
            extract.fast_threshold = t;
        }
        if let Some(t) = map.parsed("fallback_threshold")? {
            extract.fallback_threshold = t;
        }
        if let Some(r) = map.parsed("nms_radius")? {
            extract.nms_radius = r;
        }

        let ransac = super::RansacSettings {
            kernel: map.parsed::<ModelKind>("kernel")?,
            inlier_threshold: map.parsed("inlier_threshold")?,
            confidence_p: map.parsed("confidence_p")?.unwrap_or(0.99),
            max_iterations: map.parsed("max_iterations")?.unwrap_or(2000),
            phase1_budget: map.parsed("phase1_budget")?,
        };
        if !(ransac.confidence_p > 0.0 && ransac.confidence_p < 1.0) {
            return Err(bad("confidence_p", "must lie in (0, 1)"));
        }
        if ransac.inlier_threshold.is_some_and(|t| !(t > 0.0)) {
            return Err(bad("inlier_threshold", "must be positive"));
        }

        let single_worker = map.get("single_worker").map(parse_bool).transpose().map_err(|e| bad("single_worker", e))?;
        let base = Scenario {
            id: map.get("scenario").unwrap_or("scenario").to_string(),
            source,
            preset,
            ratio,
            method,
            seeds,
            gms,
            extract,
            ransac,
            hardware: map.get("hardware").unwrap_or("unspecified").to_string(),
            single_worker: single_worker.unwrap_or(false),
        };

        let presets = map.list("presets", |s| s.parse::<usize>().map_err(|e| e.to_string()))?.unwrap_or_else(|| vec![preset]);
        if presets.contains(&0) {
            return Err(bad("presets", "every preset must be at least 1"));
        }
        let ratios = map.list("ratios", parse_ratio)?.unwrap_or_else(default_ratios);
        let methods = map
            .list("methods", |s| s.parse::<Method>())?
            .unwrap_or_else(|| vec![Method::GmsRansacUniform, Method::GmsRansacPrioritized]);
        Ok(BenchConfig {
            base,
            presets,
            ratios,
            methods,
            format: map.parsed("format")?.unwrap_or_default(),
            out: map.get("out").map(PathBuf::from),
        })
    }
}
