//! Labelled synthetic correspondences under a homography, as CSV on stdout.
//!
//! cargo run --example synth_correspondences -- [n_inliers] [n_outliers] [seed]

use gms_ransac::bench::config::default_synthetic_homography;
use gms_ransac::imageio::{synth_correspondences, Dims};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let nums: Vec<u64> = std::env::args().skip(1).map(|s| s.parse()).collect::<Result<_, _>>()?;
    let get = |i: usize, d: u64| nums.get(i).copied().unwrap_or(d);
    let (pairs, gt) = synth_correspondences(
        get(0, 100) as usize,
        get(1, 100) as usize,
        &default_synthetic_homography(),
        0.5,
        Dims::new(640, 480),
        get(2, 0),
    )?;
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    w.write_record(["x_a", "y_a", "x_b", "y_b", "inlier"])?;
    for ((a, b), l) in pairs.iter().zip(&gt.inlier_labels) {
        w.write_record([a.x.to_string(), a.y.to_string(), b.x.to_string(), b.y.to_string(), l.to_string()])?;
    }
    w.flush()?;
    eprintln!("{} pairs, {} inliers, noise sigma {}", pairs.len(), gt.num_inliers(), gt.noise_sigma);
    Ok(())
}
