//! Renders a corner-rich scene, warps it by a random homography and writes
//! both views as PGM files.
//!
//! cargo run --example render_and_warp -- [out_dir] [seed]

use gms_ransac::imageio::{load_pgm, random_homography, render_scene, save_pgm, warp_image, Dims};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().map(std::path::PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let dims = Dims::new(640, 480);
    let a = render_scene(dims, seed);
    let h = random_homography(&mut ChaCha8Rng::seed_from_u64(seed), dims);
    let b = warp_image(&a, &h, 0)?;

    let (pa, pb) = (dir.join("scene_a.pgm"), dir.join("scene_b.pgm"));
    save_pgm(&a, &pa)?;
    save_pgm(&b, &pb)?;
    assert_eq!(load_pgm(&pa)?, a);

    println!("homography A -> B:{h}");
    println!("wrote {} and {}", pa.display(), pb.display());
    Ok(())
}
