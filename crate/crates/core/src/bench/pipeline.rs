//! One seeded execution of the full pipeline.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::record::{RunRecord, STATUS_FAILED, STATUS_OK};
use super::{Method, Scenario, Source};
use crate::features::{describe_keypoints, detect_keypoints, FeatureSet, Pattern};
use crate::geometry::invert_homography;
use crate::gms::gms_filter;
use crate::imageio::{random_homography, render_scene, synth_correspondences, warp_image, Dims, Image};
use crate::matcher::{hamming, match_bruteforce, Match};
use crate::metrics::{evaluate, Stage, StageTimes, Stopwatch};
use crate::robust::kernels::symmetric_transfer;
use crate::robust::{ransac, Candidate, ModelKind, RansacConfig, SamplingMode};
use crate::Point;

/// A match is labelled correct when its residual under the reference model
/// is below this many pixels.
pub const LABEL_THRESHOLD_PX: f64 = 3.0;

const HOMOGRAPHY_STREAM: u64 = 0x4e0;
const JITTER_STREAM: u64 = 0x4e1;
const INJECT_STREAM: u64 = 0x4e2;

/// Seed for the pseudo ground-truth fit on real pairs without a reference.
const PSEUDO_GT_SEED: u64 = 0x9e37_79b9;

/// Everything a run needs that does not depend on the algorithm under test.
pub(crate) struct Prepared {
    pub pts_a: Vec<Point>,
    pub pts_b: Vec<Point>,
    pub dims_a: Dims,
    pub dims_b: Dims,
    pub matches: Vec<Match>,
    /// Per match, whether it is correct.
    pub labels: Vec<bool>,
    pub pseudo_labeled: bool,
}

pub(crate) enum Inputs<'a> {
    Correspondences,
    Images(&'a Image, &'a Image),
}

fn fail(s: &Scenario, seed: u64, reason: String, times: StageTimes) -> RunRecord {
    let mut r = blank(s, seed, times);
    r.status = STATUS_FAILED.into();
    r.reason = reason;
    r.precision_empty = true;
    r.recall_empty = true;
    r
}

fn blank(s: &Scenario, seed: u64, t: StageTimes) -> RunRecord {
    RunRecord {
        scenario: s.id.clone(),
        method: s.method.name().into(),
        preset: s.preset,
        ratio: s.ratio,
        seed,
        status: STATUS_OK.into(),
        reason: String::new(),
        matches_candidate: 0,
        matches_gms: 0,
        matches_final: 0,
        precision: 0.0,
        precision_empty: false,
        recall: 0.0,
        recall_empty: false,
        pseudo_labeled: false,
        iterations_used: 0,
        t_extract_ms: t.extract,
        t_describe_ms: t.describe,
        t_match_ms: t.match_,
        t_gms_ms: t.gms,
        t_ransac_ms: t.ransac,
        t_total_ms: t.total(),
        hardware: s.hardware.clone(),
    }
}

pub(crate) fn kernel_for(s: &Scenario) -> ModelKind {
    s.ransac.kernel.unwrap_or(match s.source {
        Source::ImagePair { reference: None, .. } => ModelKind::Fundamental,
        _ => ModelKind::Homography,
    })
}

/// Homography of a warped scenario for `seed`.
pub fn warped_homography(configured: Option<Matrix3<f64>>, extent: Dims, seed: u64) -> Matrix3<f64> {
    configured.unwrap_or_else(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(HOMOGRAPHY_STREAM);
        random_homography(&mut rng, extent)
    })
}

fn homography_labels(h: &Matrix3<f64>, pts_a: &[Point], pts_b: &[Point], matches: &[Match]) -> Option<Vec<bool>> {
    let h_inv = invert_homography(h)?;
    Some(
        matches
            .iter()
            .map(|m| symmetric_transfer(h, &h_inv, &pts_a[m.idx_a], &pts_b[m.idx_b]) < LABEL_THRESHOLD_PX)
            .collect(),
    )
}

/// Detection and description, timed.
fn features(
    s: &Scenario,
    sw: &mut Stopwatch,
    img_a: &Image,
    img_b: &Image,
) -> Result<(FeatureSet, FeatureSet, Vec<Match>), String> {
    let pattern = Pattern::shipped();
    let (ka, kb) = sw.time(Stage::Extract, || {
        Ok::<_, crate::features::FeatureError>((
            detect_keypoints(img_a, s.preset, &s.extract)?,
            detect_keypoints(img_b, s.preset, &s.extract)?,
        ))
    })
    .map_err(|e| e.to_string())?;
    let (fa, fb) = sw.time(Stage::Describe, || {
        Ok::<_, crate::features::FeatureError>((describe_keypoints(img_a, ka, pattern)?, describe_keypoints(img_b, kb, pattern)?))
    })
    .map_err(|e| e.to_string())?;
    let matches = sw.time(Stage::Match, || match_bruteforce(&fa, &fb, false));
    Ok((fa, fb, matches))
}

/// Adds wrong matches so that they make up `rate` of the final candidate
/// set, counting the ones already present.
fn inject_outliers(
    fa: &FeatureSet,
    fb: &FeatureSet,
    pts_b: &[Point],
    h: &Matrix3<f64>,
    matches: &mut Vec<Match>,
    labels: &mut Vec<bool>,
    rate: f64,
    rng: &mut ChaCha8Rng,
) {
    let n = matches.len() as f64;
    let wrong = labels.iter().filter(|&&l| !l).count() as f64;
    let need = ((rate * n - wrong) / (1.0 - rate)).ceil();
    if need <= 0.0 || fa.is_empty() || fb.is_empty() {
        return;
    }
    let pts_a = fa.points();
    let h_inv = invert_homography(h);
    let mut added = 0usize;
    let mut tries = 0usize;
    while added < need as usize && tries < 100 * need as usize + 1000 {
        tries += 1;
        let ia = rng.random_range(0..fa.len());
        let ib = rng.random_range(0..fb.len());
        let close = h_inv.is_some_and(|hi| symmetric_transfer(h, &hi, &pts_a[ia], &pts_b[ib]) < LABEL_THRESHOLD_PX);
        if close {
            continue;
        }
        matches.push(Match { idx_a: ia, idx_b: ib, distance: hamming(&fa.descriptors[ia], &fb.descriptors[ib]) });
        labels.push(false);
        added += 1;
    }
}

fn prepare(s: &Scenario, seed: u64, inputs: &Inputs<'_>, sw: &mut Stopwatch) -> Result<Prepared, String> {
    match (&s.source, inputs) {
        (Source::Synthetic { homography, n_inliers, n_outliers, noise, extent }, _) => {
            let (pairs, gt) = synth_correspondences(*n_inliers, *n_outliers, homography, *noise, *extent, seed)
                .map_err(|e| e.to_string())?;
            let matches = (0..pairs.len()).map(|i| Match { idx_a: i, idx_b: i, distance: 0 }).collect();
            Ok(Prepared {
                pts_a: pairs.iter().map(|p| p.0).collect(),
                pts_b: pairs.iter().map(|p| p.1).collect(),
                dims_a: *extent,
                dims_b: *extent,
                matches,
                labels: gt.inlier_labels,
                pseudo_labeled: false,
            })
        }
        (Source::Warped { extent, scene_seed, homography, outlier_rate, noise }, _) => {
            let h = warped_homography(*homography, *extent, seed);
            let scene = render_scene(*extent, scene_seed.unwrap_or(seed));
            let view = warp_image(&scene, &h, 0).map_err(|e| e.to_string())?;
            let (fa, fb, mut matches) = features(s, sw, &scene, &view)?;
            let pts_a = fa.points();
            let mut pts_b = fb.points();
            if *noise > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(JITTER_STREAM);
                let d = Normal::new(0.0, *noise).map_err(|e| e.to_string())?;
                for p in &mut pts_b {
                    p.x = (p.x + d.sample(&mut rng)).clamp(0.0, extent.width as f64 - 1e-6);
                    p.y = (p.y + d.sample(&mut rng)).clamp(0.0, extent.height as f64 - 1e-6);
                }
            }
            let mut labels = homography_labels(&h, &pts_a, &pts_b, &matches).ok_or("singular homography")?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(INJECT_STREAM);
            inject_outliers(&fa, &fb, &pts_b, &h, &mut matches, &mut labels, *outlier_rate, &mut rng);
            Ok(Prepared { pts_a, pts_b, dims_a: *extent, dims_b: *extent, matches, labels, pseudo_labeled: false })
        }
        (Source::ImagePair { reference, .. }, Inputs::Images(a, b)) => {
            let (fa, fb, matches) = features(s, sw, a, b)?;
            let (pts_a, pts_b) = (fa.points(), fb.points());
            let (labels, pseudo) = match reference {
                Some(h) => (homography_labels(h, &pts_a, &pts_b, &matches).ok_or("singular reference homography")?, false),
                None => (pseudo_labels(&pts_a, &pts_b, &matches), true),
            };
            Ok(Prepared { pts_a, pts_b, dims_a: a.dims(), dims_b: b.dims(), matches, labels, pseudo_labeled: pseudo })
        }
        (Source::ImagePair { .. }, Inputs::Correspondences) => Err("image pair scenario without images".into()),
    }
}

/// Labels from a high-budget uniform fundamental fit over all raw matches.
/// Every match is labelled wrong if no model can be fitted.
fn pseudo_labels(pts_a: &[Point], pts_b: &[Point], matches: &[Match]) -> Vec<bool> {
    let cands: Vec<Candidate> = matches
        .iter()
        .map(|m| Candidate { src: pts_a[m.idx_a], dst: pts_b[m.idx_b], confidence: 0, distance: m.distance, idx_a: m.idx_a })
        .collect();
    let cfg = RansacConfig {
        confidence_p: 0.999,
        max_iterations: 20_000,
        ..RansacConfig::new(ModelKind::Fundamental).with_seed(PSEUDO_GT_SEED)
    };
    match ransac(&cands, &cfg, SamplingMode::Uniform) {
        Ok(model) => cands
            .iter()
            .map(|c| crate::robust::residual(&model, &c.src, &c.dst).is_ok_and(|r| r < LABEL_THRESHOLD_PX))
            .collect(),
        Err(_) => vec![false; matches.len()],
    }
}

pub(crate) fn run_one(s: &Scenario, seed: u64, inputs: &Inputs<'_>) -> RunRecord {
    let mut sw = Stopwatch::new();
    let prep = match prepare(s, seed, inputs, &mut sw) {
        Ok(p) => p,
        Err(e) => return fail(s, seed, e, sw.times()),
    };
    let scored = match sw.time(Stage::Gms, || {
        gms_filter(&prep.matches, &prep.pts_a, prep.dims_a, &prep.pts_b, prep.dims_b, &s.gms)
    }) {
        Ok(v) => v,
        Err(e) => return fail(s, seed, e.to_string(), sw.times()),
    };

    let kind = kernel_for(s);
    let cfg = RansacConfig {
        kernel: kind,
        inlier_threshold: s.ransac.inlier_threshold.unwrap_or(kind.default_threshold()),
        confidence_p: s.ransac.confidence_p,
        max_iterations: s.ransac.max_iterations,
        group_ratio: s.ratio,
        phase1_budget: s.ransac.phase1_budget,
        seed,
    };
    let mode = match s.method {
        Method::GmsRansacUniform => SamplingMode::Uniform,
        Method::GmsRansacPrioritized => SamplingMode::Prioritized,
    };

    // labels are looked up by position in the candidate list
    let label_of: std::collections::HashMap<(usize, usize), bool> = prep
        .matches
        .iter()
        .zip(&prep.labels)
        .map(|(m, &l)| ((m.idx_a, m.idx_b), l))
        .collect();
    let total_true = prep.labels.iter().filter(|&&l| l).count();

    let result = sw.time(Stage::Ransac, || {
        let cands: Vec<Candidate> = scored.iter().map(|sm| Candidate::from_scored(sm, &prep.pts_a, &prep.pts_b)).collect();
        ransac(&cands, &cfg, mode)
    });
    let times = sw.times();
    let mut rec = match result {
        Ok(model) => {
            let final_labels: Vec<bool> = scored
                .iter()
                .zip(&model.inlier_mask)
                .filter(|(_, &keep)| keep)
                .map(|(sm, _)| label_of[&(sm.m.idx_a, sm.m.idx_b)])
                .collect();
            let ev = evaluate(&final_labels, total_true, times);
            let mut r = blank(s, seed, times);
            r.matches_final = model.inlier_count;
            r.iterations_used = model.iterations_used;
            r.precision = ev.precision.value;
            r.precision_empty = ev.precision.empty;
            r.recall = ev.recall.value;
            r.recall_empty = ev.recall.empty;
            r
        }
        Err(e) => fail(s, seed, e.to_string(), times),
    };
    rec.matches_candidate = prep.matches.len();
    rec.matches_gms = scored.len();
    rec.pseudo_labeled = prep.pseudo_labeled;
    rec
}
