//! Uniform against confidence-prioritized RANSAC on the same GMS-scored
//! correspondences.
//!
//! cargo run --example prioritized_ransac -- [outlier_rate] [ratio]

use gms_ransac::bench::config::default_synthetic_homography;
use gms_ransac::gms::{gms_score, GmsConfig};
use gms_ransac::imageio::{synth_correspondences, Dims};
use gms_ransac::matcher::Match;
use gms_ransac::robust::{ransac, Candidate, ModelKind, RansacConfig, SamplingMode};
use std::time::Instant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let rate: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.5);
    let ratio: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.5);

    let dims = Dims::new(640, 480);
    let n_out = (2000.0 * rate) as usize;
    let (pairs, gt) = synth_correspondences(2000 - n_out, n_out, &default_synthetic_homography(), 0.5, dims, 9)?;
    let (pa, pb): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
    let matches: Vec<Match> = (0..pairs.len()).map(|i| Match { idx_a: i, idx_b: i, distance: 0 }).collect();
    let scored = gms_score(&matches, &pa, dims, &pb, dims, &GmsConfig::default())?;
    let cands: Vec<Candidate> = scored.iter().map(|(s, _)| Candidate::from_scored(s, &pa, &pb)).collect();

    let cfg = RansacConfig { group_ratio: ratio, ..RansacConfig::new(ModelKind::Homography).with_seed(1) };
    for mode in [SamplingMode::Uniform, SamplingMode::Prioritized] {
        let start = Instant::now();
        let model = ransac(&cands, &cfg, mode)?;
        let elapsed = start.elapsed();
        let true_kept = model.inlier_mask.iter().zip(&gt.inlier_labels).filter(|(m, l)| **m && **l).count();
        println!(
            "{mode:?}: {} iterations, {} inliers ({true_kept} of {} true), {elapsed:?}",
            model.iterations_used,
            model.inlier_count,
            gt.num_inliers()
        );
    }
    Ok(())
}
