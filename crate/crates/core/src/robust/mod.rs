//! RANSAC with a uniform sampler and a confidence-prioritized grouped sampler.
//!
//! The prioritized sampler sorts candidates by GMS confidence and splits them
//! at `ceil(ρ·N)`. Minimal samples are first drawn only from the
//! high-confidence group; if that phase does not terminate within its budget,
//! sampling widens to all candidates. Hypotheses are always scored against the
//! full candidate set, and the best model is carried across phases.
//!
//! Termination follows the usual adaptive rule: after `k` draws whose all-inlier
//! probability is `w^n`, the chance of never having drawn an all-inlier sample
//! is `(1 − w^n)^k`. The group phase uses `w` = inlier fraction of the best
//! model *inside the group*; the widened phase uses the global inlier fraction
//! and only has to make up the failure probability the group phase left over.
//! For a single phase this reduces to [`required_iterations`].
//!
//! Random streams: one ChaCha8 generator per phase, both seeded with
//! `RansacConfig::seed`; the all-candidates phase uses stream 0 and the group
//! phase stream 1. Uniform mode is exactly the all-candidates phase, so a
//! prioritized run whose group covers every candidate (ρ = 1) reproduces it
//! bit for bit.

pub mod kernels;

use nalgebra::Matrix3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use kernels::{enforce_rank2, estimate_fundamental, estimate_homography, fit, sampson, symmetric_transfer, Residual};

use crate::gms::ScoredMatch;
use crate::Point;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RobustError {
    #[error("need at least {need} matches, got {got}")]
    TooFewMatches { need: usize, got: usize },
    #[error("every sampled minimal set was degenerate")]
    NoValidModel,
    #[error("degenerate sample")]
    DegenerateSample,
    #[error("numerical failure in the linear solver")]
    NumericalFailure,
    #[error("homography is singular")]
    SingularHomography,
    #[error("invalid RANSAC configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Homography,
    Fundamental,
}

impl ModelKind {
    /// Minimal sample size.
    pub fn sample_size(self) -> usize {
        match self {
            ModelKind::Homography => 4,
            ModelKind::Fundamental => 8,
        }
    }

    pub fn default_threshold(self) -> f64 {
        match self {
            ModelKind::Homography => 3.0,
            ModelKind::Fundamental => 1.0,
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "homography" => Ok(ModelKind::Homography),
            "fundamental" => Ok(ModelKind::Fundamental),
            other => Err(format!("unknown kernel '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    Uniform,
    Prioritized,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub kind: ModelKind,
    pub matrix: Matrix3<f64>,
    pub inlier_mask: Vec<bool>,
    pub inlier_count: usize,
    pub iterations_used: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RansacConfig {
    pub kernel: ModelKind,
    /// Pixels: symmetric transfer error for homographies, Sampson distance for
    /// fundamental matrices.
    pub inlier_threshold: f64,
    pub confidence_p: f64,
    pub max_iterations: usize,
    /// Fraction of confidence-sorted candidates forming the priority group.
    pub group_ratio: f64,
    /// Draws allowed in the priority group before widening; `None` derives it
    /// from [`required_iterations`] at an assumed 90 % group inlier rate, at least 30.
    pub phase1_budget: Option<usize>,
    pub seed: u64,
}

impl RansacConfig {
    pub fn new(kernel: ModelKind) -> Self {
        Self {
            kernel,
            inlier_threshold: kernel.default_threshold(),
            confidence_p: 0.99,
            max_iterations: 2000,
            group_ratio: 0.5,
            phase1_budget: None,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn effective_phase1_budget(&self) -> usize {
        self.phase1_budget.unwrap_or_else(|| {
            required_iterations(self.confidence_p, 0.9, self.kernel.sample_size(), self.max_iterations).max(30)
        })
    }

    pub fn validate(&self) -> Result<(), RobustError> {
        let bad = |m: &str| Err(RobustError::InvalidConfig(m.into()));
        if !(self.confidence_p > 0.0 && self.confidence_p < 1.0) {
            return bad("confidence_p must lie in (0, 1)");
        }
        if !(self.group_ratio > 0.0 && self.group_ratio <= 1.0) {
            return bad("group_ratio must lie in (0, 1]");
        }
        if !(self.inlier_threshold > 0.0) {
            return bad("inlier_threshold must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        Ok(())
    }
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self::new(ModelKind::Homography)
    }
}

/// One correspondence as seen by the estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub src: Point,
    pub dst: Point,
    pub confidence: u32,
    pub distance: u32,
    pub idx_a: usize,
}

impl Candidate {
    pub fn from_scored(sm: &ScoredMatch, pts_a: &[Point], pts_b: &[Point]) -> Self {
        Self {
            src: pts_a[sm.m.idx_a],
            dst: pts_b[sm.m.idx_b],
            confidence: sm.confidence,
            distance: sm.m.distance,
            idx_a: sm.m.idx_a,
        }
    }
}

/// Number of draws needed to hit at least one all-inlier minimal sample with
/// probability `p` when the inlier fraction is `t`:
/// `ceil(log(1 − p) / log(1 − tⁿ))`, clamped to `[1, max_iterations]`.
pub fn required_iterations(p: f64, t: f64, n: usize, max_iterations: usize) -> usize {
    let cap = max_iterations.max(1);
    if t >= 1.0 {
        return 1;
    }
    if !(t > 0.0) {
        return cap;
    }
    let denom = (1.0 - t.powi(n as i32)).ln();
    if denom >= 0.0 {
        return cap;
    }
    let k = ((1.0 - p).ln() / denom).ceil();
    if !(k < cap as f64) {
        cap
    } else {
        (k as usize).max(1)
    }
}

/// Candidate indices sorted for prioritized sampling, and the group boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub order: Vec<usize>,
    pub split: usize,
}

/// Sorts by confidence (descending), then Hamming distance, then `idx_a`,
/// then input position, and splits at `ceil(ρ·N)` clamped to
/// `[min(sample_size, N), N]`.
pub fn partition(candidates: &[Candidate], ratio: f64, sample_size: usize) -> Partition {
    let n = candidates.len();
    // keys end in the position, so the unstable sort is still a total order
    let order: Vec<usize> = if n <= u32::MAX as usize && candidates.iter().all(|c| c.idx_a <= u32::MAX as usize) {
        let mut keys: Vec<u128> = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| {
                ((u32::MAX - c.confidence) as u128) << 96
                    | (c.distance as u128) << 64
                    | (c.idx_a as u128) << 32
                    | i as u128
            })
            .collect();
        keys.sort_unstable();
        keys.into_iter().map(|k| (k & u32::MAX as u128) as usize).collect()
    } else {
        let mut keys: Vec<(u32, u32, usize, usize)> = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| (u32::MAX - c.confidence, c.distance, c.idx_a, i))
            .collect();
        keys.sort_unstable();
        keys.into_iter().map(|k| k.3).collect()
    };
    let split = ((ratio * n as f64).ceil() as usize).clamp(sample_size.min(n), n);
    Partition { order, split }
}

struct Hypothesis {
    matrix: Matrix3<f64>,
    mask: Vec<bool>,
    count: usize,
    group_count: usize,
}

struct Scorer<'a> {
    candidates: &'a [Candidate],
    kind: ModelKind,
    threshold: f64,
}

impl Scorer<'_> {
    fn score(&self, matrix: Matrix3<f64>) -> Option<Hypothesis> {
        let res = Residual::new(self.kind, &matrix).ok()?;
        let mut mask = Vec::with_capacity(self.candidates.len());
        let mut count = 0;
        for c in self.candidates {
            let inl = res.eval(&c.src, &c.dst) < self.threshold;
            mask.push(inl);
            count += inl as usize;
        }
        Some(Hypothesis { matrix, mask, count, group_count: 0 })
    }
}

/// `(1 − wⁿ)^k`: probability that `k` draws at all-inlier rate `wⁿ` all failed.
fn miss_probability(inliers: usize, pool: usize, n: usize, draws: usize) -> f64 {
    if pool == 0 || draws == 0 {
        return 1.0;
    }
    let w = inliers as f64 / pool as f64;
    (1.0 - w.powi(n as i32)).powi(draws.min(i32::MAX as usize) as i32)
}

/// Draws still needed at inlier fraction `t` to push the total miss
/// probability from `prior_miss` down to `1 − p`.
fn remaining_draws(p: f64, prior_miss: f64, t: f64, n: usize, cap: usize) -> usize {
    if prior_miss >= 1.0 {
        return required_iterations(p, t, n, cap);
    }
    let target = (1.0 - p) / prior_miss;
    if target >= 1.0 {
        return 0;
    }
    if t >= 1.0 {
        return 1;
    }
    let denom = (1.0 - t.powi(n as i32)).ln();
    if !(t > 0.0) || denom >= 0.0 {
        return cap;
    }
    let k = (target.ln() / denom).ceil();
    if !(k < cap as f64) {
        cap
    } else {
        (k as usize).max(1)
    }
}

fn draw_and_fit(
    rng: &mut ChaCha8Rng,
    pool: &[usize],
    candidates: &[Candidate],
    kind: ModelKind,
    src: &mut Vec<Point>,
    dst: &mut Vec<Point>,
) -> Option<Matrix3<f64>> {
    let n = kind.sample_size();
    src.clear();
    dst.clear();
    for pos in rand::seq::index::sample(rng, pool.len(), n) {
        let c = &candidates[pool[pos]];
        src.push(c.src);
        dst.push(c.dst);
    }
    fit(kind, src, dst).ok()
}

/// Robustly fits `cfg.kernel` to the candidates.
pub fn ransac(candidates: &[Candidate], cfg: &RansacConfig, mode: SamplingMode) -> Result<Model, RobustError> {
    cfg.validate()?;
    let kind = cfg.kernel;
    let n = kind.sample_size();
    let total = candidates.len();
    if total < n {
        return Err(RobustError::TooFewMatches { need: n, got: total });
    }
    let cap = cfg.max_iterations;
    let p = cfg.confidence_p;

    let group = match mode {
        SamplingMode::Prioritized => {
            let part = partition(candidates, cfg.group_ratio, n);
            (part.split < total).then_some(part)
        }
        SamplingMode::Uniform => None,
    };
    let scorer = Scorer { candidates, kind, threshold: cfg.inlier_threshold };

    let mut best: Option<Hypothesis> = None;
    let mut iterations = 0usize;
    let (mut src, mut dst) = (Vec::with_capacity(n), Vec::with_capacity(n));
    // group inliers are only counted for hypotheses that become the best
    let consider = |best: &mut Option<Hypothesis>, mut h: Hypothesis| {
        if best.as_ref().is_none_or(|b| h.count > b.count) {
            if let Some(g) = &group {
                h.group_count = g.order[..g.split].iter().filter(|&&i| h.mask[i]).count();
            }
            *best = Some(h);
        }
    };

    let mut group_draws = 0usize;
    let mut finished = false;
    if let Some(g) = &group {
        let pool = &g.order[..g.split];
        let budget = cfg.effective_phase1_budget().min(cap);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1);
        while group_draws < budget {
            group_draws += 1;
            iterations += 1;
            if let Some(h) = draw_and_fit(&mut rng, pool, candidates, kind, &mut src, &mut dst).and_then(|m| scorer.score(m)) {
                consider(&mut best, h);
            }
            let w = best.as_ref().map_or(0, |b| b.group_count);
            if group_draws >= required_iterations(p, w as f64 / g.split as f64, n, cap) {
                finished = true;
                break;
            }
        }
    }

    if !finished {
        let all: Vec<usize> = (0..total).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(0);
        let mut wide_draws = 0usize;
        let prior_miss = |best: &Option<Hypothesis>| match (&group, best) {
            (Some(g), Some(b)) => miss_probability(b.group_count, g.split, n, group_draws),
            _ => 1.0,
        };
        let needed = |best: &Option<Hypothesis>| {
            let t = best.as_ref().map_or(0.0, |b| b.count as f64 / total as f64);
            remaining_draws(p, prior_miss(best), t, n, cap)
        };
        if group.is_none() || wide_draws < needed(&best) {
            while iterations < cap {
                wide_draws += 1;
                iterations += 1;
                if let Some(h) = draw_and_fit(&mut rng, &all, candidates, kind, &mut src, &mut dst).and_then(|m| scorer.score(m)) {
                    consider(&mut best, h);
                }
                if wide_draws >= needed(&best) {
                    break;
                }
            }
        }
    }

    let best = best.ok_or(RobustError::NoValidModel)?;
    Ok(refit(candidates, kind, &scorer, best, iterations))
}

/// Least-squares refit over the inliers of `best`; the mask is recomputed once.
fn refit(candidates: &[Candidate], kind: ModelKind, scorer: &Scorer<'_>, best: Hypothesis, iterations: usize) -> Model {
    let (src, dst): (Vec<Point>, Vec<Point>) = candidates
        .iter()
        .zip(&best.mask)
        .filter(|(_, &m)| m)
        .map(|(c, _)| (c.src, c.dst))
        .unzip();
    let final_h = fit(kind, &src, &dst).ok().and_then(|m| scorer.score(m)).unwrap_or(best);
    Model {
        kind,
        matrix: final_h.matrix,
        inlier_count: final_h.count,
        inlier_mask: final_h.mask,
        iterations_used: iterations,
    }
}

/// Residual of one pair under a fitted model.
pub fn residual(model: &Model, p: &Point, q: &Point) -> Result<f64, RobustError> {
    Ok(Residual::new(model.kind, &model.matrix)?.eval(p, q))
}
