//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use gms_ransac::gms::{GmsConfig, GridShift};
use gms_ransac::imageio::Dims;
use gms_ransac::matcher::Match;
use gms_ransac::robust::Candidate;
use gms_ransac::Point;
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `ceil(ln(1 − p) / ln(1 − tⁿ))` clamped to `[1, cap]`, written out directly.
pub fn iterations_formula(p: f64, t: f64, n: usize, cap: usize) -> usize {
    if t >= 1.0 {
        return 1;
    }
    if t <= 0.0 {
        return cap;
    }
    let mut tn = 1.0;
    for _ in 0..n {
        tn *= t;
    }
    let k = ((1.0 - p).ln() / (1.0 - tn).ln()).ceil();
    if k >= cap as f64 {
        cap
    } else if k < 1.0 {
        1
    } else {
        k as usize
    }
}

fn grid_xy(p: &Point, dims: Dims, cols: usize, rows: usize, shift: GridShift) -> (i64, i64) {
    let cw = dims.width as f64 / cols as f64;
    let ch = dims.height as f64 / rows as f64;
    let sx = if matches!(shift, GridShift::HalfX | GridShift::HalfBoth) { cw / 2.0 } else { 0.0 };
    let sy = if matches!(shift, GridShift::HalfY | GridShift::HalfBoth) { ch / 2.0 } else { 0.0 };
    let cx = (((p.x + sx) / cw).floor() as i64).min(cols as i64 - 1);
    let cy = (((p.y + sy) / ch).floor() as i64).min(rows as i64 - 1);
    (cx, cy)
}

pub struct OracleScore {
    pub confidence: u32,
    pub passed: bool,
    /// Smallest `ceil(τ)` over the enabled shifts.
    pub min_ceil_tau: u32,
}

/// Quadratic recount: for every match, the number of other matches whose
/// A-cell and B-cell are displaced from its own by the same offset within
/// the 3×3 neighbourhood, under each enabled shift of grid A.
pub fn gms_oracle(matches: &[Match], pts_a: &[Point], dims_a: Dims, pts_b: &[Point], dims_b: Dims, cfg: &GmsConfig) -> Vec<OracleScore> {
    let n = matches.len();
    let cb: Vec<(i64, i64)> =
        matches.iter().map(|m| grid_xy(&pts_b[m.idx_b], dims_b, cfg.cols, cfg.rows, GridShift::None)).collect();
    let mut out: Vec<OracleScore> = (0..n).map(|_| OracleScore { confidence: 0, passed: false, min_ceil_tau: u32::MAX }).collect();
    for &shift in &cfg.shifts {
        let ca: Vec<(i64, i64)> = matches.iter().map(|m| grid_xy(&pts_a[m.idx_a], dims_a, cfg.cols, cfg.rows, shift)).collect();
        let mut occupied = std::collections::HashSet::new();
        for c in &ca {
            occupied.insert(*c);
        }
        let tau = cfg.alpha * (n as f64 / occupied.len().max(1) as f64).sqrt();
        for i in 0..n {
            let mut count = 0u32;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let da = (ca[j].0 - ca[i].0, ca[j].1 - ca[i].1);
                let db = (cb[j].0 - cb[i].0, cb[j].1 - cb[i].1);
                if da == db && da.0.abs() <= 1 && da.1.abs() <= 1 {
                    count += 1;
                }
            }
            let o = &mut out[i];
            o.confidence = o.confidence.max(count);
            o.passed |= count as f64 >= tau;
            o.min_ceil_tau = o.min_ceil_tau.min(tau.ceil() as u32);
        }
    }
    out
}

/// Random GMS instance: clusters of coherent motion plus scattered matches.
pub fn gms_instance(seed: u64, max_matches: usize) -> (Vec<Match>, Vec<Point>, Vec<Point>, Dims) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = Dims::new(rng.random_range(64..800), rng.random_range(64..600));
    let (w, h) = (dims.width as f64, dims.height as f64);
    let n = rng.random_range(1..=max_matches);
    let (dx, dy) = (rng.random_range(-0.1..0.1) * w, rng.random_range(-0.1..0.1) * h);
    let coherent = rng.random_range(0.0..1.0);
    let clustered = rng.random_bool(0.5);
    let centre = (rng.random_range(0.0..w), rng.random_range(0.0..h));
    let mut pa = Vec::with_capacity(n);
    let mut pb = Vec::with_capacity(n);
    for _ in 0..n {
        let a = if clustered && rng.random_bool(0.5) {
            Point::new(
                (centre.0 + rng.random_range(-0.1..0.1) * w).clamp(0.0, w - 1e-6),
                (centre.1 + rng.random_range(-0.1..0.1) * h).clamp(0.0, h - 1e-6),
            )
        } else {
            Point::new(rng.random_range(0.0..w), rng.random_range(0.0..h))
        };
        let b = if rng.random_bool(coherent) {
            Point::new((a.x + dx + rng.random_range(-2.0..2.0)).clamp(0.0, w - 1e-6), (a.y + dy + rng.random_range(-2.0..2.0)).clamp(0.0, h - 1e-6))
        } else {
            Point::new(rng.random_range(0.0..w), rng.random_range(0.0..h))
        };
        pa.push(a);
        pb.push(b);
    }
    let matches = (0..n).map(|i| Match { idx_a: i, idx_b: i, distance: rng.random_range(0..64) }).collect();
    (matches, pa, pb, dims)
}

pub fn apply(h: &Matrix3<f64>, p: &Point) -> Point {
    let v = h * Vector3::new(p.x, p.y, 1.0);
    Point::new(v.x / v.z, v.y / v.z)
}

/// Symmetric transfer error written out from its definition.
pub fn transfer_error(h: &Matrix3<f64>, p: &Point, q: &Point) -> f64 {
    let inv = h.try_inverse().expect("invertible");
    0.5 * ((apply(h, p) - q).norm() + (apply(&inv, q) - p).norm())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Best inlier count over every 4-subset, each fitted with the library's
/// minimal solver and scored by the written-out transfer error.
pub fn exhaustive_best_count(cands: &[Candidate], threshold: f64) -> usize {
    let mut best = 0;
    for idx in combinations(cands.len(), 4) {
        let src: Vec<Point> = idx.iter().map(|&i| cands[i].src).collect();
        let dst: Vec<Point> = idx.iter().map(|&i| cands[i].dst).collect();
        let Ok(h) = gms_ransac::robust::kernels::estimate_homography(&src, &dst) else { continue };
        if h.try_inverse().is_none() {
            continue;
        }
        best = best.max(cands.iter().filter(|c| transfer_error(&h, &c.src, &c.dst) < threshold).count());
    }
    best
}

pub fn random_homography(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    loop {
        let h = Matrix3::<f64>::new(
            rng.random_range(0.8..1.2),
            rng.random_range(-0.2..0.2),
            rng.random_range(-30.0..30.0),
            rng.random_range(-0.2..0.2),
            rng.random_range(0.8..1.2),
            rng.random_range(-30.0..30.0),
            rng.random_range(-4e-4..4e-4),
            rng.random_range(-4e-4..4e-4),
            1.0,
        );
        if h.determinant().abs() > 0.3 {
            return h;
        }
    }
}

/// 8 exact inliers of a random homography plus 4 uniform outliers, shuffled.
pub fn small_instance(seed: u64) -> (Vec<Candidate>, Matrix3<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_homography(&mut rng);
    let mut cands = Vec::new();
    for i in 0..12 {
        let src = Point::new(rng.random_range(0.0..640.0), rng.random_range(0.0..480.0));
        let dst = if i < 8 { apply(&h, &src) } else { Point::new(rng.random_range(0.0..640.0), rng.random_range(0.0..480.0)) };
        cands.push(Candidate { src, dst, confidence: rng.random_range(0..20), distance: rng.random_range(0..64), idx_a: i });
    }
    for i in (1..cands.len()).rev() {
        let j = rng.random_range(0..=i);
        cands.swap(i, j);
    }
    (cands, h)
}
