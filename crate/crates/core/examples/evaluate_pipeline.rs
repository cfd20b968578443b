//! The whole pipeline on one warped pair, timed per stage and scored with
//! precision and recall against the known homography.
//!
//! cargo run --example evaluate_pipeline

use gms_ransac::features::{describe_keypoints, detect_keypoints, ExtractConfig, Pattern};
use gms_ransac::geometry::project;
use gms_ransac::gms::{gms_filter_sets, GmsConfig};
use gms_ransac::imageio::{random_homography, render_scene, warp_image, Dims};
use gms_ransac::matcher::match_bruteforce;
use gms_ransac::metrics::{evaluate, Stage, Stopwatch};
use gms_ransac::robust::{ransac, Candidate, ModelKind, RansacConfig, SamplingMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dims = Dims::new(640, 480);
    let a = render_scene(dims, 4);
    let h = random_homography(&mut ChaCha8Rng::seed_from_u64(4), dims);
    let b = warp_image(&a, &h, 0)?;

    let mut sw = Stopwatch::new();
    let cfg = ExtractConfig::default();
    let (ka, kb) = sw.time(Stage::Extract, || (detect_keypoints(&a, 3000, &cfg), detect_keypoints(&b, 3000, &cfg)));
    let (fa, fb) = sw.time(Stage::Describe, || {
        (describe_keypoints(&a, ka.unwrap(), Pattern::shipped()), describe_keypoints(&b, kb.unwrap(), Pattern::shipped()))
    });
    let (fa, fb) = (fa?, fb?);
    let matches = sw.time(Stage::Match, || match_bruteforce(&fa, &fb, false));
    let kept = sw.time(Stage::Gms, || gms_filter_sets(&matches, &fa, &fb, &GmsConfig::default()))?;
    let (pa, pb) = (fa.points(), fb.points());
    let cands: Vec<Candidate> = kept.iter().map(|s| Candidate::from_scored(s, &pa, &pb)).collect();
    let model = sw.time(Stage::Ransac, || {
        ransac(&cands, &RansacConfig::new(ModelKind::Homography).with_seed(4), SamplingMode::Prioritized)
    })?;

    let correct = |ia: usize, ib: usize| project(&h, &pa[ia]).is_some_and(|q| (q - pb[ib]).norm() < 3.0);
    let total_true = matches.iter().filter(|m| correct(m.idx_a, m.idx_b)).count();
    let final_labels: Vec<bool> =
        kept.iter().zip(&model.inlier_mask).filter(|(_, &m)| m).map(|(s, _)| correct(s.m.idx_a, s.m.idx_b)).collect();
    let result = evaluate(&final_labels, total_true, sw.times());

    println!("matches {} -> gms {} -> final {}", matches.len(), kept.len(), final_labels.len());
    println!("precision {:.2}%  recall {:.2}%", result.precision.value, result.recall.value);
    for s in Stage::ALL {
        println!("  {s:?}: {:.3} ms", result.elapsed.get(s));
    }
    println!("  total: {:.3} ms", result.elapsed.total());
    Ok(())
}
