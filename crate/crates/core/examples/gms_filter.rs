//! Grid-based motion statistics on raw matches: how many survive, how many
//! of those are correct, and how confidence separates the two.
//!
//! cargo run --example gms_filter

use gms_ransac::features::extract;
use gms_ransac::geometry::project;
use gms_ransac::gms::{gms_filter_sets, gms_score, GmsConfig};
use gms_ransac::imageio::{random_homography, render_scene, warp_image, Dims};
use gms_ransac::matcher::match_bruteforce;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dims = Dims::new(640, 480);
    let a = render_scene(dims, 3);
    let h = random_homography(&mut ChaCha8Rng::seed_from_u64(3), dims);
    let b = warp_image(&a, &h, 0)?;
    let (fa, fb) = (extract(&a, 3000)?, extract(&b, 3000)?);
    let matches = match_bruteforce(&fa, &fb, false);
    let (pa, pb) = (fa.points(), fb.points());
    let correct = |ia: usize, ib: usize| project(&h, &pa[ia]).is_some_and(|q| (q - pb[ib]).norm() < 3.0);

    let cfg = GmsConfig::default();
    let kept = gms_filter_sets(&matches, &fa, &fb, &cfg)?;
    let kept_ok = kept.iter().filter(|s| correct(s.m.idx_a, s.m.idx_b)).count();
    let all_ok = matches.iter().filter(|m| correct(m.idx_a, m.idx_b)).count();
    println!("{}x{} grid, alpha {}, {} shifts", cfg.cols, cfg.rows, cfg.alpha, cfg.shifts.len());
    println!("matches {} ({all_ok} correct) -> survivors {} ({kept_ok} correct)", matches.len(), kept.len());

    let scored = gms_score(&matches, &pa, dims, &pb, dims, &cfg)?;
    let mean = |want: bool| {
        let v: Vec<f64> =
            scored.iter().filter(|(s, _)| correct(s.m.idx_a, s.m.idx_b) == want).map(|(s, _)| s.confidence as f64).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    };
    println!("mean confidence: correct {:.1}, wrong {:.1}", mean(true), mean(false));
    Ok(())
}
