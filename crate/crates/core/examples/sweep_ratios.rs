//! Iterations and RANSAC time across grouping ratios, written as CSV to
//! stdout.
//!
//! cargo run --release --example sweep_ratios > ratios.csv

use gms_ransac::bench::config::{default_ratios, default_synthetic_homography};
use gms_ransac::bench::{median, sweep_ratios, write_csv, Scenario, Source};
use gms_ransac::imageio::Dims;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut base = Scenario::new(
        "ratio_sweep",
        Source::Synthetic {
            homography: default_synthetic_homography(),
            n_inliers: 800,
            n_outliers: 1200,
            noise: 0.5,
            extent: Dims::new(640, 480),
        },
    )
    .with_seeds(0, 50);
    base.gms.reject = false;
    base.single_worker = true;

    let mut ratios = default_ratios();
    ratios.push(1.0);
    let rows = sweep_ratios(&base, &ratios, &[])?;
    for &r in &ratios {
        let of = |f: fn(&gms_ransac::bench::RunRecord) -> f64| {
            median(&mut rows.iter().filter(|x| x.ratio == r).map(f).collect::<Vec<_>>()).unwrap_or(f64::NAN)
        };
        eprintln!(
            "ratio {r:.3}: median iterations {:>6.1}, median ransac ms {:.3}",
            of(|x| x.iterations_used as f64),
            of(|x| x.t_ransac_ms)
        );
    }
    write_csv(std::io::stdout().lock(), &rows)?;
    Ok(())
}
