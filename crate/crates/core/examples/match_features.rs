//! Brute-force Hamming matching between a scene and its warp, scored
//! against the known homography.
//!
//! cargo run --example match_features -- [preset] [--cross-check]

use gms_ransac::features::extract;
use gms_ransac::geometry::project;
use gms_ransac::imageio::{random_homography, render_scene, warp_image, Dims};
use gms_ransac::matcher::match_bruteforce;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let preset: usize = args.iter().find_map(|a| a.parse().ok()).unwrap_or(2000);
    let cross_check = args.iter().any(|a| a == "--cross-check");

    let dims = Dims::new(640, 480);
    let a = render_scene(dims, 2);
    let h = random_homography(&mut ChaCha8Rng::seed_from_u64(2), dims);
    let b = warp_image(&a, &h, 0)?;
    let (fa, fb) = (extract(&a, preset)?, extract(&b, preset)?);

    let matches = match_bruteforce(&fa, &fb, cross_check);
    let (pa, pb) = (fa.points(), fb.points());
    let correct = matches
        .iter()
        .filter(|m| project(&h, &pa[m.idx_a]).is_some_and(|q| (q - pb[m.idx_b]).norm() < 3.0))
        .count();
    println!("{} and {} features, {} matches (cross-check {cross_check})", fa.len(), fb.len(), matches.len());
    println!("{correct} land within 3 px of the true position ({:.1}%)", 100.0 * correct as f64 / matches.len() as f64);
    Ok(())
}
