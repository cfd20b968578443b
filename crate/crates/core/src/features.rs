//! Single-scale ORB-style features: FAST-9 corners, intensity-centroid
//! orientation and rotated 256-bit BRIEF descriptors.

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::imageio::{Dims, Image};

/// Keypoints keep this many pixels between themselves and the image border.
pub const BORDER_MARGIN: usize = 16;
pub const MIN_IMAGE_SIDE: usize = 32;
pub const PATCH_RADIUS: i32 = 15;
pub const DESCRIPTOR_BITS: usize = 256;

/// Seed the shipped sampling pattern was generated from.
pub const PATTERN_SEED: u64 = 0x0b_1e_f2_56;
const SHIPPED_PATTERN: &str = include_str!("../data/brief_pattern.txt");

/// Bresenham circle of radius 3, clockwise from 12 o'clock.
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
const ARC_LEN: usize = 9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FeatureError {
    #[error("image {width}x{height} is smaller than the {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE} minimum")]
    ImageTooSmall { width: usize, height: usize },
    #[error("patch of radius {radius} around ({x}, {y}) leaves the image")]
    PatchOutOfBounds { x: f64, y: f64, radius: i32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("pattern line {line}: {msg}")]
    BadPattern { line: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    /// Sum of absolute intensity differences over the winning FAST arc.
    pub score: f64,
    /// Radians in `[0, 2π)`.
    pub angle: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Descriptor(pub [u64; 4]);

impl Descriptor {
    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set_bit(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn complement(&self) -> Self {
        Descriptor(self.0.map(|w| !w))
    }
}

impl std::fmt::Debug for Descriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Descriptor(")?;
        for w in self.0 {
            write!(f, "{w:016x}")?;
        }
        write!(f, ")")
    }
}

/// Keypoints with their descriptors, sorted by descending score
/// (ties: ascending y, then x).
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSet {
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<Descriptor>,
    pub source_dims: Dims,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }

    pub fn points(&self) -> Vec<crate::Point> {
        self.keypoints.iter().map(|k| crate::Point::new(k.x, k.y)).collect()
    }
}

/// 256 point pairs `(p, q)` in patch coordinates, all within radius 15.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub pairs: Vec<[(i32, i32); 2]>,
}

impl Pattern {
    /// Parses the `px py qx qy` per-line text format.
    pub fn parse(text: &str) -> Result<Self, FeatureError> {
        let mut pairs = Vec::with_capacity(DESCRIPTOR_BITS);
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| FeatureError::BadPattern { line: i + 1, msg: msg.into() };
            let v: Vec<i32> = line
                .split_whitespace()
                .map(|t| t.parse::<i32>().map_err(|_| bad("not an integer")))
                .collect::<Result<_, _>>()?;
            if v.len() != 4 {
                return Err(bad("expected four integers"));
            }
            if v.iter().any(|c| c.abs() > PATCH_RADIUS) {
                return Err(bad("offset outside [-15, 15]"));
            }
            pairs.push([(v[0], v[1]), (v[2], v[3])]);
        }
        if pairs.len() != DESCRIPTOR_BITS {
            return Err(FeatureError::BadPattern {
                line: 0,
                msg: format!("expected {DESCRIPTOR_BITS} pairs, found {}", pairs.len()),
            });
        }
        Ok(Self { pairs })
    }

    /// Draws offsets from an isotropic Gaussian (σ = 31/5), rounded and kept
    /// only inside the radius-15 disk so any rotation stays within the patch.
    pub fn generate(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::<f64>::new(0.0, 31.0 / 5.0).expect("valid sigma");
        let r2 = PATCH_RADIUS * PATCH_RADIUS;
        let mut draw = || loop {
            let x = normal.sample(&mut rng).round() as i32;
            let y = normal.sample(&mut rng).round() as i32;
            if x * x + y * y <= r2 {
                return (x, y);
            }
        };
        let mut pairs = Vec::with_capacity(DESCRIPTOR_BITS);
        while pairs.len() < DESCRIPTOR_BITS {
            let p = draw();
            let q = draw();
            if p != q {
                pairs.push([p, q]);
            }
        }
        Self { pairs }
    }

    pub fn to_text(&self) -> String {
        self.pairs
            .iter()
            .map(|[p, q]| format!("{} {} {} {}\n", p.0, p.1, q.0, q.1))
            .collect()
    }

    /// The table shipped in `data/brief_pattern.txt`.
    pub fn shipped() -> &'static Pattern {
        static PATTERN: OnceLock<Pattern> = OnceLock::new();
        PATTERN.get_or_init(|| Pattern::parse(SHIPPED_PATTERN).expect("shipped pattern is valid"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractConfig {
    pub fast_threshold: u8,
    /// Second, lower threshold used once when the first pass finds fewer
    /// corners than requested.
    pub fallback_threshold: u8,
    pub nms_radius: usize,
    pub orientation_radius: i32,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self { fast_threshold: 20, fallback_threshold: 7, nms_radius: 2, orientation_radius: PATCH_RADIUS }
    }
}

fn check_size(img: &Image) -> Result<(), FeatureError> {
    if img.width() < MIN_IMAGE_SIDE || img.height() < MIN_IMAGE_SIDE {
        return Err(FeatureError::ImageTooSmall { width: img.width(), height: img.height() });
    }
    Ok(())
}

/// FAST-9 response of the pixel at `(x, y)`, 0 when it is not a corner.
fn segment_score(img: &Image, x: usize, y: usize, threshold: i32) -> u32 {
    let c = img.get(x, y) as i32;
    let ring = CIRCLE.map(|(dx, dy)| img.get((x as i32 + dx) as usize, (y as i32 + dy) as usize) as i32);

    // a 9-long arc always covers at least two of the four compass pixels
    let (mut bright, mut dark) = (0, 0);
    for k in [0, 4, 8, 12] {
        bright += (ring[k] > c + threshold) as u32;
        dark += (ring[k] < c - threshold) as u32;
    }
    if bright < 2 && dark < 2 {
        return 0;
    }

    let mut best = 0u32;
    for sign in [1i32, -1] {
        let passes = |v: i32| if sign > 0 { v > c + threshold } else { v < c - threshold };
        if ring.iter().all(|&v| passes(v)) {
            best = best.max(ring.iter().map(|&v| (v - c).unsigned_abs()).sum());
            continue;
        }
        // start right after a failing pixel so runs never wrap mid-way
        let start = (0..16).find(|&k| !passes(ring[k])).expect("some pixel fails");
        let (mut len, mut sum, mut best_len, mut best_sum) = (0usize, 0u32, 0usize, 0u32);
        for j in 1..=16 {
            let v = ring[(start + j) % 16];
            if passes(v) {
                len += 1;
                sum += (v - c).unsigned_abs();
            } else {
                if len > best_len || (len == best_len && sum > best_sum) {
                    best_len = len;
                    best_sum = sum;
                }
                len = 0;
                sum = 0;
            }
        }
        if best_len >= ARC_LEN {
            best = best.max(best_sum);
        }
    }
    best
}

/// Dense map of FAST responses over the margin-respecting interior.
fn response_map(img: &Image, threshold: u8) -> Vec<u32> {
    let (w, h) = (img.width(), img.height());
    let mut map = vec![0u32; w * h];
    for y in BORDER_MARGIN..h - BORDER_MARGIN {
        for x in BORDER_MARGIN..w - BORDER_MARGIN {
            map[y * w + x] = segment_score(img, x, y, threshold as i32);
        }
    }
    map
}

fn sort_keypoints(kps: &mut [Keypoint]) {
    kps.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
    });
}

/// Keeps responses that beat every neighbour in a `(2r+1)²` window; equal
/// scores resolve to the earlier pixel in raster order.
fn non_max_suppression(map: &[u32], dims: Dims, radius: usize) -> Vec<Keypoint> {
    let (w, h) = (dims.width, dims.height);
    let r = radius as isize;
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let s = map[y * w + x];
            if s == 0 {
                continue;
            }
            let mut keep = true;
            'win: for dy in -r..=r {
                let ny = y as isize + dy;
                if ny < 0 || ny >= h as isize {
                    continue;
                }
                for dx in -r..=r {
                    let nx = x as isize + dx;
                    if (dx == 0 && dy == 0) || nx < 0 || nx >= w as isize {
                        continue;
                    }
                    let n = map[ny as usize * w + nx as usize];
                    let earlier = (ny, nx) < (y as isize, x as isize);
                    if n > s || (n == s && earlier) {
                        keep = false;
                        break 'win;
                    }
                }
            }
            if keep {
                out.push(Keypoint { x: x as f64, y: y as f64, score: s as f64, angle: 0.0 });
            }
        }
    }
    sort_keypoints(&mut out);
    out
}

/// FAST-9 corners with non-maximum suppression, sorted by descending score.
pub fn detect_fast(img: &Image, threshold: u8, nms_radius: usize) -> Result<Vec<Keypoint>, FeatureError> {
    check_size(img)?;
    if threshold == 0 {
        return Err(FeatureError::InvalidParameter("FAST threshold must be at least 1".into()));
    }
    Ok(non_max_suppression(&response_map(img, threshold), img.dims(), nms_radius))
}

/// Intensity-centroid orientation over the disk of `radius` around `kp`.
pub fn orientation(img: &Image, kp: &Keypoint, radius: i32) -> Result<f64, FeatureError> {
    let (cx, cy) = (kp.x.round() as i64, kp.y.round() as i64);
    let r = radius as i64;
    if cx - r < 0 || cy - r < 0 || cx + r >= img.width() as i64 || cy + r >= img.height() as i64 {
        return Err(FeatureError::PatchOutOfBounds { x: kp.x, y: kp.y, radius });
    }
    let (mut m10, mut m01) = (0i64, 0i64);
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy > r * r {
                continue;
            }
            let v = img.get((cx + dx) as usize, (cy + dy) as usize) as i64;
            m10 += dx * v;
            m01 += dy * v;
        }
    }
    if m10 == 0 && m01 == 0 {
        return Ok(0.0);
    }
    let mut a = (m01 as f64).atan2(m10 as f64);
    if a < 0.0 {
        a += std::f64::consts::TAU;
    }
    if a >= std::f64::consts::TAU {
        a = 0.0;
    }
    Ok(a)
}

/// Rotated BRIEF: bit i is set iff `I(p_i') < I(q_i')`, offsets rotated by the
/// keypoint angle and rounded to the nearest pixel.
pub fn describe(img: &Image, kp: &Keypoint, pattern: &Pattern) -> Result<Descriptor, FeatureError> {
    let (cx, cy) = (kp.x.round() as i64, kp.y.round() as i64);
    let r = PATCH_RADIUS as i64;
    if cx - r < 0 || cy - r < 0 || cx + r >= img.width() as i64 || cy + r >= img.height() as i64 {
        return Err(FeatureError::PatchOutOfBounds { x: kp.x, y: kp.y, radius: PATCH_RADIUS });
    }
    let (s, c) = kp.angle.sin_cos();
    let at = |(ox, oy): (i32, i32)| {
        let rx = (c * ox as f64 - s * oy as f64).round() as i64;
        let ry = (s * ox as f64 + c * oy as f64).round() as i64;
        img.get((cx + rx) as usize, (cy + ry) as usize)
    };
    let mut d = Descriptor::default();
    for (i, [p, q]) in pattern.pairs.iter().enumerate() {
        if at(*p) < at(*q) {
            d.set_bit(i);
        }
    }
    Ok(d)
}

/// Detection half of [`extract`]: corners (two-pass thresholding), top
/// `preset` by score, each with its orientation.
pub fn detect_keypoints(img: &Image, preset: usize, cfg: &ExtractConfig) -> Result<Vec<Keypoint>, FeatureError> {
    check_size(img)?;
    if preset == 0 {
        return Err(FeatureError::InvalidParameter("preset must be at least 1".into()));
    }
    if cfg.fast_threshold == 0 || cfg.fallback_threshold == 0 {
        return Err(FeatureError::InvalidParameter("FAST threshold must be at least 1".into()));
    }
    let mut map = response_map(img, cfg.fast_threshold);
    let mut kps = non_max_suppression(&map, img.dims(), cfg.nms_radius);
    if kps.len() < preset && cfg.fallback_threshold != cfg.fast_threshold {
        let low = response_map(img, cfg.fallback_threshold);
        for (m, l) in map.iter_mut().zip(low) {
            *m = (*m).max(l);
        }
        kps = non_max_suppression(&map, img.dims(), cfg.nms_radius);
    }
    kps.truncate(preset);
    for kp in &mut kps {
        kp.angle = orientation(img, kp, cfg.orientation_radius)?;
    }
    Ok(kps)
}

/// Description half of [`extract`].
pub fn describe_keypoints(img: &Image, keypoints: Vec<Keypoint>, pattern: &Pattern) -> Result<FeatureSet, FeatureError> {
    let descriptors = keypoints
        .iter()
        .map(|kp| describe(img, kp, pattern))
        .collect::<Result<_, _>>()?;
    Ok(FeatureSet { keypoints, descriptors, source_dims: img.dims() })
}

/// Detects, orients and describes at most `preset` features.
pub fn extract(img: &Image, preset: usize) -> Result<FeatureSet, FeatureError> {
    extract_with(img, preset, &ExtractConfig::default())
}

pub fn extract_with(img: &Image, preset: usize, cfg: &ExtractConfig) -> Result<FeatureSet, FeatureError> {
    let kps = detect_keypoints(img, preset, cfg)?;
    describe_keypoints(img, kps, Pattern::shipped())
}
