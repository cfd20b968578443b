//! Final match count and run time as the requested feature count grows, on
//! one fixed warped pair.
//!
//! cargo run --release --example sweep_presets

use gms_ransac::bench::{sweep_presets, warped_homography, Scenario, Source};
use gms_ransac::imageio::Dims;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let extent = Dims::new(640, 480);
    let base = Scenario::new(
        "fixed_pair",
        Source::Warped {
            extent,
            scene_seed: Some(7),
            homography: Some(warped_homography(None, extent, 7)),
            outlier_rate: 0.5,
            noise: 0.5,
        },
    )
    .with_seeds(0, 3);
    let sweep = sweep_presets(&base, &[1000, 2000, 3000, 5000, 8000, 10000])?;
    println!("{:>7} {:>14} {:>10}", "preset", "matches_final", "total ms");
    for t in &sweep.trend {
        println!("{:>7} {:>14} {:>10.2}", t.preset, t.median_matches_final.unwrap_or(f64::NAN), t.median_total_ms.unwrap_or(f64::NAN));
    }
    println!("non-decreasing: {}", sweep.non_decreasing);
    Ok(())
}
