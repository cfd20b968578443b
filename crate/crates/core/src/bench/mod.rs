//! Experiment harness: seeded scenarios, preset and ratio sweeps, and
//! uniform-vs-prioritized comparisons, emitting one [`RunRecord`] per
//! `(scenario, seed)` execution.
//!
//! Seeds: a scenario carries an explicit seed list. When built from a base
//! seed and a repeat count, run `i` uses `base + i`. Each run seeds scene
//! synthesis and RANSAC from its own seed, so runs are independent and can
//! execute in parallel without changing any output.

use std::path::{Path, PathBuf};

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::features::ExtractConfig;
use crate::gms::GmsConfig;
use crate::imageio::{load_pgm, Dims, Image, ImageError};
use crate::robust::ModelKind;

pub mod config;
mod pipeline;
pub mod record;

pub use config::{BenchConfig, ConfigError, ConfigMap, Format};
pub use pipeline::{warped_homography, LABEL_THRESHOLD_PX};
pub use record::{read_csv, read_jsonl, write_csv, write_jsonl, RunRecord};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("could not load image {path}: {source}")]
    ImageLoad { path: PathBuf, source: ImageError },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("record schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where a scenario's correspondences come from.
#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    /// Correspondences drawn directly (see [`crate::imageio::synth_correspondences`]);
    /// no images, so extraction and matching take no time.
    Synthetic { homography: Matrix3<f64>, n_inliers: usize, n_outliers: usize, noise: f64, extent: Dims },
    /// A rendered scene and its warp by a homography, run through the whole
    /// pipeline. Wrong matches are injected after matching until they make
    /// up `outlier_rate` of the candidates, and matched points in the second
    /// view are jittered by Gaussian noise of σ = `noise`. The scene seed and
    /// homography default to per-run values derived from the run seed.
    Warped {
        extent: Dims,
        scene_seed: Option<u64>,
        homography: Option<Matrix3<f64>>,
        outlier_rate: f64,
        noise: f64,
    },
    /// Two 8-bit PGM files. Without a reference homography, labels come from
    /// a high-budget uniform fundamental fit and rows are flagged
    /// `pseudo_labeled`.
    ImagePair { path_a: PathBuf, path_b: PathBuf, reference: Option<Matrix3<f64>> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    GmsRansacUniform,
    GmsRansacPrioritized,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::GmsRansacUniform => "gms_ransac_uniform",
            Method::GmsRansacPrioritized => "gms_ransac_prioritized",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "gms_ransac_uniform" | "uniform" => Ok(Method::GmsRansacUniform),
            "gms_ransac_prioritized" | "prioritized" => Ok(Method::GmsRansacPrioritized),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

/// RANSAC knobs; `None` picks the kernel's default.
#[derive(Clone, Debug, PartialEq)]
pub struct RansacSettings {
    pub kernel: Option<ModelKind>,
    pub inlier_threshold: Option<f64>,
    pub confidence_p: f64,
    pub max_iterations: usize,
    pub phase1_budget: Option<usize>,
}

impl Default for RansacSettings {
    fn default() -> Self {
        Self { kernel: None, inlier_threshold: None, confidence_p: 0.99, max_iterations: 2000, phase1_budget: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub source: Source,
    /// Requested feature count per image.
    pub preset: usize,
    /// Grouping ratio of the prioritized sampler.
    pub ratio: f64,
    pub method: Method,
    pub seeds: Vec<u64>,
    pub gms: GmsConfig,
    pub extract: ExtractConfig,
    pub ransac: RansacSettings,
    /// Free-form tag written next to every timing.
    pub hardware: String,
    /// Run seeds one after another on the calling thread.
    pub single_worker: bool,
}

impl Scenario {
    pub fn new(id: impl Into<String>, source: Source) -> Self {
        Self {
            id: id.into(),
            source,
            preset: 3000,
            ratio: 0.5,
            method: Method::GmsRansacPrioritized,
            seeds: vec![0],
            gms: GmsConfig::default(),
            extract: ExtractConfig::default(),
            ransac: RansacSettings::default(),
            hardware: "unspecified".into(),
            single_worker: false,
        }
    }

    /// `repeats` seeds starting at `base`.
    pub fn derive_seeds(base: u64, repeats: usize) -> Vec<u64> {
        (0..repeats as u64).map(|i| base.wrapping_add(i)).collect()
    }

    pub fn with_seeds(mut self, base: u64, repeats: usize) -> Self {
        self.seeds = Self::derive_seeds(base, repeats);
        self
    }

    pub fn with_method(mut self, m: Method) -> Self {
        self.method = m;
        self
    }

    pub fn with_preset(mut self, p: usize) -> Self {
        self.preset = p;
        self
    }

    pub fn with_ratio(mut self, r: f64) -> Self {
        self.ratio = r;
        self
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::InvalidScenario(m.into()));
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.preset == 0 {
            return bad("preset must be at least 1");
        }
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return bad("ratio must lie in (0, 1]");
        }
        if let Source::Warped { outlier_rate, .. } = self.source {
            if !(0.0..1.0).contains(&outlier_rate) {
                return bad("outlier_rate must lie in [0, 1)");
            }
        }
        Ok(())
    }
}

/// Reads both images of an image-pair scenario.
pub type Loader<'a> = dyn Fn(&Path) -> Result<Image, ImageError> + Sync + 'a;

/// Runs every seed of `s`, returning records in seed-list order.
pub fn run_scenario(s: &Scenario) -> Result<Vec<RunRecord>, BenchError> {
    run_scenario_with_loader(s, &|p: &Path| load_pgm(p))
}

/// [`run_scenario`] with a custom image reader. Loading happens once, before
/// any timed stage.
pub fn run_scenario_with_loader(s: &Scenario, loader: &Loader<'_>) -> Result<Vec<RunRecord>, BenchError> {
    s.validate()?;
    let images = match &s.source {
        Source::ImagePair { path_a, path_b, .. } => {
            let load = |p: &PathBuf| loader(p).map_err(|source| BenchError::ImageLoad { path: p.clone(), source });
            Some((load(path_a)?, load(path_b)?))
        }
        _ => None,
    };
    let inputs = match &images {
        Some((a, b)) => pipeline::Inputs::Images(a, b),
        None => pipeline::Inputs::Correspondences,
    };
    let run = |&seed: &u64| pipeline::run_one(s, seed, &inputs);
    Ok(if s.single_worker { s.seeds.iter().map(run).collect() } else { s.seeds.par_iter().map(run).collect() })
}

pub fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn median_of<'a>(rows: impl Iterator<Item = &'a RunRecord>, f: impl Fn(&RunRecord) -> f64) -> Option<f64> {
    let mut v: Vec<f64> = rows.filter(|r| r.is_ok()).map(f).collect();
    median(&mut v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PresetTrend {
    pub preset: usize,
    pub median_matches_final: Option<f64>,
    pub median_total_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PresetSweep {
    pub records: Vec<RunRecord>,
    pub trend: Vec<PresetTrend>,
    /// Whether the median final match count never drops as the preset grows.
    pub non_decreasing: bool,
}

/// One [`run_scenario`] per preset, in the given (ascending) order.
pub fn sweep_presets(base: &Scenario, presets: &[usize]) -> Result<PresetSweep, BenchError> {
    if presets.is_empty() || presets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BenchError::InvalidScenario("presets must be non-empty and strictly ascending".into()));
    }
    let mut records = Vec::new();
    let mut trend = Vec::new();
    for &p in presets {
        let rows = run_scenario(&base.clone().with_preset(p))?;
        trend.push(PresetTrend {
            preset: p,
            median_matches_final: median_of(rows.iter(), |r| r.matches_final as f64),
            median_total_ms: median_of(rows.iter(), |r| r.t_total_ms),
        });
        records.extend(rows);
    }
    let meds: Vec<f64> = trend.iter().map(|t| t.median_matches_final.unwrap_or(0.0)).collect();
    let non_decreasing = meds.windows(2).all(|w| w[1] >= w[0]);
    Ok(PresetSweep { records, trend, non_decreasing })
}

/// One [`run_scenario`] per `(ratio, preset)`, ratios outermost.
pub fn sweep_ratios(base: &Scenario, ratios: &[f64], presets: &[usize]) -> Result<Vec<RunRecord>, BenchError> {
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
        return Err(BenchError::InvalidScenario(format!("ratio {r} outside (0, 1]")));
    }
    let presets = if presets.is_empty() { vec![base.preset] } else { presets.to_vec() };
    let mut out = Vec::new();
    for &r in ratios {
        for &p in &presets {
            out.extend(run_scenario(&base.clone().with_ratio(r).with_preset(p))?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub runs_ok: usize,
    pub runs_failed: usize,
    pub median_total_ms: Option<f64>,
    pub median_ransac_ms: Option<f64>,
    pub median_iterations: Option<f64>,
    /// Means skip rows whose metric is undefined.
    pub mean_precision: Option<f64>,
    pub mean_recall: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub baseline: Method,
    pub method: Method,
    /// `100 · (t_base − t_method) / t_base` on median total time, averaged
    /// over presets.
    pub percent: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub records: Vec<RunRecord>,
    pub summaries: Vec<MethodSummary>,
    /// Every method against the first one, which appears against itself at 0 %.
    pub reductions: Vec<Reduction>,
}

/// Runs each distinct method of `methods` on every preset and aggregates.
pub fn compare_methods(base: &Scenario, methods: &[Method], presets: &[usize]) -> Result<Comparison, BenchError> {
    if methods.len() < 2 {
        return Err(BenchError::InvalidScenario("comparison needs at least two methods".into()));
    }
    let presets = if presets.is_empty() { vec![base.preset] } else { presets.to_vec() };
    let mut distinct: Vec<Method> = Vec::new();
    for &m in methods {
        if !distinct.contains(&m) {
            distinct.push(m);
        }
    }
    let mut records = Vec::new();
    for &p in &presets {
        for &m in &distinct {
            records.extend(run_scenario(&base.clone().with_method(m).with_preset(p))?);
        }
    }
    let (summaries, reductions) = summarize(&records, &distinct, &presets);
    Ok(Comparison { records, summaries, reductions })
}

/// Aggregates computed purely from records, so they can be recomputed from
/// an emitted CSV.
pub fn summarize(records: &[RunRecord], methods: &[Method], presets: &[usize]) -> (Vec<MethodSummary>, Vec<Reduction>) {
    let of = |m: Method| records.iter().filter(move |r| r.method == m.name());
    let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let summaries = methods
        .iter()
        .map(|&m| MethodSummary {
            method: m,
            runs_ok: of(m).filter(|r| r.is_ok()).count(),
            runs_failed: of(m).filter(|r| !r.is_ok()).count(),
            median_total_ms: median_of(of(m), |r| r.t_total_ms),
            median_ransac_ms: median_of(of(m), |r| r.t_ransac_ms),
            median_iterations: median_of(of(m), |r| r.iterations_used as f64),
            mean_precision: mean(of(m).filter(|r| r.is_ok() && !r.precision_empty).map(|r| r.precision).collect()),
            mean_recall: mean(of(m).filter(|r| r.is_ok() && !r.recall_empty).map(|r| r.recall).collect()),
        })
        .collect();

    let preset_median =
        |m: Method, p: usize| median_of(records.iter().filter(|r| r.method == m.name() && r.preset == p), |r| r.t_total_ms);
    let baseline = methods[0];
    let reductions = methods
        .iter()
        .map(|&m| {
            let per: Vec<f64> = presets
                .iter()
                .filter_map(|&p| match (preset_median(baseline, p), preset_median(m, p)) {
                    (Some(tb), Some(tm)) if tb > 0.0 => Some(100.0 * (tb - tm) / tb),
                    _ => None,
                })
                .collect();
            let percent = if m == baseline { 0.0 } else { mean(per).unwrap_or(f64::NAN) };
            Reduction { baseline, method: m, percent }
        })
        .collect();
    (summaries, reductions)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(n_in: usize, n_out: usize) -> Scenario {
        Scenario::new(
            "unit",
            Source::Synthetic {
                homography: Matrix3::identity(),
                n_inliers: n_in,
                n_outliers: n_out,
                noise: 0.0,
                extent: Dims::new(640, 480),
            },
        )
    }

    #[test]
    fn identity_without_outliers() {
        // 50 matches over 400 cells cannot reach the GMS support threshold,
        // so the sparse case runs GMS in score-only mode.
        let mut sparse = synthetic(50, 0);
        sparse.gms.reject = false;
        for base in [sparse, synthetic(2000, 0)] {
            for m in [Method::GmsRansacUniform, Method::GmsRansacPrioritized] {
                let recs = run_scenario(&base.clone().with_method(m).with_seeds(3, 4)).unwrap();
                assert_eq!(recs.len(), 4);
                for r in recs {
                    assert!(r.is_ok(), "{}", r.reason);
                    assert_eq!(r.precision, 100.0);
                    assert!(r.recall >= 95.0, "recall {}", r.recall);
                }
            }
        }
    }

    #[test]
    fn sparse_matches_are_all_rejected_by_gms() {
        let r = &run_scenario(&synthetic(50, 0)).unwrap()[0];
        assert_eq!(r.matches_gms, 0);
        assert!(!r.is_ok());
    }

    #[test]
    fn too_few_matches_is_a_failed_row() {
        let recs = run_scenario(&synthetic(2, 0)).unwrap();
        assert_eq!(recs[0].status, record::STATUS_FAILED);
        assert!(!recs[0].reason.is_empty());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut []), None);
    }

    #[test]
    fn sweeps_validate_inputs() {
        let s = synthetic(50, 0);
        assert!(sweep_presets(&s, &[3000, 1000]).is_err());
        assert!(sweep_ratios(&s, &[0.0], &[]).is_err());
        assert!(compare_methods(&s, &[Method::GmsRansacUniform], &[]).is_err());
    }
}
