//! Uniform against prioritized sampling on warped pairs at several presets,
//! with the averaged time reduction.
//!
//! cargo run --release --example compare_methods

use gms_ransac::bench::{compare_methods, Method, Scenario, Source};
use gms_ransac::imageio::Dims;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut base = Scenario::new(
        "warped_compare",
        Source::Warped { extent: Dims::new(640, 480), scene_seed: None, homography: None, outlier_rate: 0.6, noise: 0.5 },
    )
    .with_seeds(0, 10);
    base.hardware = std::env::var("BENCH_HARDWARE").unwrap_or_else(|_| "unspecified".into());

    let cmp = compare_methods(&base, &[Method::GmsRansacUniform, Method::GmsRansacPrioritized], &[1000, 2000, 3000])?;
    for s in &cmp.summaries {
        println!(
            "{:<24} ok {:>3}  median total {:.2} ms  median ransac {:.3} ms  median iterations {}  precision {:.2}%  recall {:.2}%",
            s.method.name(),
            s.runs_ok,
            s.median_total_ms.unwrap_or(f64::NAN),
            s.median_ransac_ms.unwrap_or(f64::NAN),
            s.median_iterations.unwrap_or(f64::NAN),
            s.mean_precision.unwrap_or(f64::NAN),
            s.mean_recall.unwrap_or(f64::NAN)
        );
    }
    for r in &cmp.reductions[1..] {
        println!("{} vs {}: {:.2}% less total time", r.method.name(), r.baseline.name(), r.percent);
    }
    Ok(())
}
