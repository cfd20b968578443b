use gms_ransac::features::{
    describe, detect_fast, detect_keypoints, extract, orientation, ExtractConfig, Keypoint, Pattern, BORDER_MARGIN,
};
use gms_ransac::imageio::{render_scene, Dims, Image};
use gms_ransac::matcher::hamming;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

/// Plain segment test: nine contiguous circle pixels all brighter or all darker.
fn is_corner(img: &Image, x: usize, y: usize, t: i32) -> bool {
    let c = img.get(x, y) as i32;
    let ring: Vec<i32> = CIRCLE.iter().map(|(dx, dy)| img.get((x as i32 + dx) as usize, (y as i32 + dy) as usize) as i32).collect();
    for sign in [1, -1] {
        let mut run = 0;
        for i in 0..32 {
            if sign * (ring[i % 16] - c) > t {
                run += 1;
                if run >= 9 {
                    return true;
                }
            } else {
                run = 0;
            }
        }
    }
    false
}

fn oracle_corners(img: &Image, t: i32) -> Vec<(usize, usize)> {
    let m = BORDER_MARGIN;
    let mut v = Vec::new();
    for y in m..img.height() - m {
        for x in m..img.width() - m {
            if is_corner(img, x, y, t) {
                v.push((x, y));
            }
        }
    }
    v
}

fn bright_square() -> Image {
    Image::from_fn(64, 64, |x, y| if (28..36).contains(&x) && (28..36).contains(&y) { 255 } else { 0 })
}

#[test]
fn square_corners_are_found() {
    let img = bright_square();
    let oracle = oracle_corners(&img, 20);
    let found = detect_fast(&img, 20, 2).unwrap();
    assert!(!found.is_empty());
    for k in &found {
        assert!(oracle.contains(&(k.x as usize, k.y as usize)), "({}, {}) fails the segment test", k.x, k.y);
    }
    for (cx, cy) in [(28.0, 28.0), (35.0, 28.0), (28.0, 35.0), (35.0, 35.0)] {
        let near = |x: f64, y: f64| (x - cx).hypot(y - cy) <= 2.0;
        assert!(oracle.iter().any(|&(x, y)| near(x as f64, y as f64)));
        assert!(found.iter().any(|k| near(k.x, k.y)), "no keypoint near ({cx}, {cy})");
    }
    assert!(detect_fast(&img, 255, 2).unwrap().is_empty());
}

#[test]
fn unsuppressed_detection_equals_segment_test() {
    for seed in 0..3 {
        let img = render_scene(Dims::new(96, 80), seed);
        let mut got: Vec<(usize, usize)> = detect_fast(&img, 20, 0).unwrap().iter().map(|k| (k.x as usize, k.y as usize)).collect();
        got.sort_by_key(|&(x, y)| (y, x));
        assert_eq!(got, oracle_corners(&img, 20));
    }
}

fn board() -> Image {
    // 21 × 11 squares: 20 × 10 = 200 interior corners
    let (s, m) = (12usize, 24usize);
    Image::from_fn(21 * s + 2 * m, 11 * s + 2 * m, |x, y| {
        if x < m || y < m || x >= m + 21 * s || y >= m + 11 * s {
            128
        } else if ((x - m) / s + (y - m) / s) % 2 == 0 {
            230
        } else {
            25
        }
    })
}

fn ordered(kps: &[Keypoint]) -> bool {
    kps.windows(2).all(|w| {
        w[0].score > w[1].score || (w[0].score == w[1].score && (w[0].y, w[0].x) < (w[1].y, w[1].x))
    })
}

#[test]
fn checkerboard_presets() {
    let img = board();
    let small = extract(&img, 50).unwrap();
    assert_eq!(small.len(), 50);
    assert_eq!(small.descriptors.len(), 50);
    assert!(ordered(&small.keypoints));

    let all = extract(&img, 10_000).unwrap();
    let full_run = detect_keypoints(&img, usize::MAX, &ExtractConfig::default()).unwrap();
    assert_eq!(all.len(), full_run.len());
    assert!(all.len() < 10_000 && all.len() <= 200 * 16);
    assert!(ordered(&all.keypoints));
    assert_eq!(&all.keypoints[..50], &small.keypoints[..]);
}

#[test]
fn extraction_is_deterministic_and_respects_margin() {
    for seed in 0..4 {
        let img = render_scene(Dims::new(160, 120), seed);
        let a = extract(&img, 500).unwrap();
        assert_eq!(a, extract(&img, 500).unwrap());
        let m = BORDER_MARGIN as f64;
        for k in &a.keypoints {
            assert!(k.x >= m && k.y >= m && k.x < 160.0 - m && k.y < 120.0 - m);
            assert!(k.score > 0.0);
            assert!((0.0..std::f64::consts::TAU).contains(&k.angle));
        }
        assert!(ordered(&a.keypoints));
    }
}

#[test]
fn constant_image_has_no_features() {
    assert_eq!(extract(&Image::filled(64, 64, 90), 3000).unwrap().len(), 0);
}

fn blob_patch(seed: u64, n: usize) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blobs: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (rng.random_range(16.0..48.0), rng.random_range(16.0..48.0), rng.random_range(3.0..9.0), rng.random_range(-120.0..120.0))
        })
        .collect();
    Image::from_fn(n, n, |x, y| {
        let v: f64 = blobs
            .iter()
            .map(|&(cx, cy, s, a)| a * (-((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)) / (2.0 * s * s)).exp())
            .sum();
        (128.0 + v).round().clamp(0.0, 255.0) as u8
    })
}

#[test]
fn quarter_turn_keeps_descriptors_close() {
    let n = 65;
    let c = 32.0;
    let mut worst = 0;
    for seed in 0..100 {
        let img = blob_patch(seed, n);
        // rotated(x, y) = img(y, n-1-x), which fixes the centre pixel
        let rot = Image::from_fn(n, n, |x, y| img.get(y, n - 1 - x));
        let mut k = Keypoint { x: c, y: c, score: 1.0, angle: 0.0 };
        let mut kr = k;
        k.angle = orientation(&img, &k, 15).unwrap();
        kr.angle = orientation(&rot, &kr, 15).unwrap();
        let d = hamming(&describe(&img, &k, Pattern::shipped()).unwrap(), &describe(&rot, &kr, Pattern::shipped()).unwrap());
        worst = worst.max(d);
    }
    assert!(worst <= 64, "worst distance {worst}");
}

#[test]
fn shipped_pattern_matches_generator() {
    let p = Pattern::shipped();
    assert_eq!(p.pairs.len(), 256);
    assert_eq!(*p, Pattern::generate(gms_ransac::features::PATTERN_SEED));
    for [a, b] in &p.pairs {
        for (x, y) in [a, b] {
            assert!(x * x + y * y <= 15 * 15);
        }
    }
}
