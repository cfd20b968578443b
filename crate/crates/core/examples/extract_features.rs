//! FAST corners with intensity-centroid orientation and rotated BRIEF
//! descriptors, on a PGM file or a rendered scene.
//!
//! cargo run --example extract_features -- [image.pgm] [preset]

use gms_ransac::features::{extract_with, ExtractConfig};
use gms_ransac::imageio::{load_pgm, render_scene, Dims};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let img = match args.next() {
        Some(p) if p.ends_with(".pgm") => load_pgm(p)?,
        _ => render_scene(Dims::new(640, 480), 1),
    };
    let preset: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3000);

    let cfg = ExtractConfig::default();
    let features = extract_with(&img, preset, &cfg)?;
    println!("{}x{} image, preset {preset}: {} features", img.width(), img.height(), features.len());
    println!("thresholds {} then {}, nms radius {}", cfg.fast_threshold, cfg.fallback_threshold, cfg.nms_radius);
    for (k, d) in features.keypoints.iter().zip(&features.descriptors).take(5) {
        println!("  ({:6.1}, {:6.1}) score {:5.1} angle {:5.3}  {d:?}", k.x, k.y, k.score, k.angle);
    }
    Ok(())
}
