//! Grayscale rasters, binary PGM I/O, homography warping and synthetic
//! ground-truth generation.

use std::path::Path;

use nalgebra::Matrix3;
use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{invert_homography, normalize_unit_corner, project};
use crate::Point;

/// Outliers closer than this to the true transfer are re-drawn.
const OUTLIER_REJECT_PX: f64 = 3.0;
const MAX_DRAWS: usize = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum ImageError {
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("unsupported maxval {0} (only 8-bit PGM is accepted)")]
    UnsupportedMaxval(u32),
    #[error("homography is singular")]
    SingularHomography,
    #[error("invalid image dimensions {width}x{height} for {len} bytes")]
    InvalidDimensions { width: usize, height: usize, len: usize },
    #[error("could not draw a point inside the target extent; homography maps the extent away")]
    ExtentUnreachable,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Width × height of an image or sampling extent, in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Dims {
    pub width: usize,
    pub height: usize,
}

impl Dims {
    pub const fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x < self.width as f64 && p.y < self.height as f64
    }
}

/// Row-major 8-bit grayscale raster.
#[derive(Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for Image {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Image")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(ImageError::InvalidDimensions { width, height, len: data.len() });
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0);
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0);
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Bilinear sample at a real-valued location, or `None` outside `[0, w-1] × [0, h-1]`.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Option<f64> {
        let (w, h) = (self.width as f64, self.height as f64);
        if !(x >= 0.0 && y >= 0.0 && x <= w - 1.0 && y <= h - 1.0) {
            return None;
        }
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.get(x0, y0) as f64 * (1.0 - fx) + self.get(x1, y0) as f64 * fx;
        let bot = self.get(x0, y1) as f64 * (1.0 - fx) + self.get(x1, y1) as f64 * fx;
        Some(top * (1.0 - fy) + bot * fy)
    }
}

fn quantize(v: f64) -> u8 {
    // round half up
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64, ImageError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageError::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::MalformedHeader(format!("bad {what}")))
    }
}

/// Parses a binary (`P5`) PGM file.
pub fn read_pgm(bytes: &[u8]) -> Result<Image, ImageError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(ImageError::MalformedHeader("magic is not P5".into()));
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(ImageError::MalformedHeader(format!("nonpositive dimensions {width}x{height}")));
    }
    if maxval == 0 {
        return Err(ImageError::MalformedHeader("maxval is 0".into()));
    }
    if maxval > 255 {
        return Err(ImageError::UnsupportedMaxval(maxval.min(u32::MAX as u64) as u32));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(ImageError::MalformedHeader("missing separator after maxval".into())),
    }
    let expected = width * height;
    let found = bytes.len() - cur.pos;
    if found < expected {
        return Err(ImageError::TruncatedData { expected, found });
    }
    Image::new(width, height, bytes[cur.pos..cur.pos + expected].to_vec())
}

/// Serializes an image as binary PGM with maxval 255.
pub fn write_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Image, ImageError> {
    read_pgm(&std::fs::read(path)?)
}

pub fn save_pgm(img: &Image, path: impl AsRef<Path>) -> Result<(), ImageError> {
    std::fs::write(path, write_pgm(img))?;
    Ok(())
}

/// Warps `src` by the homography `h` (source → destination coordinates).
///
/// Each output pixel is sampled bilinearly from `src` at `h⁻¹·(x, y, 1)`;
/// samples falling outside the source get `fill`.
pub fn warp_image(src: &Image, h: &Matrix3<f64>, fill: u8) -> Result<Image, ImageError> {
    let inv = invert_homography(h).ok_or(ImageError::SingularHomography)?;
    Ok(Image::from_fn(src.width, src.height, |x, y| {
        project(&inv, &Point::new(x as f64, y as f64))
            .and_then(|s| src.sample_bilinear(s.x, s.y))
            .map_or(fill, quantize)
    }))
}

/// Ground-truth labels for a synthetic correspondence set.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    /// Source → destination homography, bottom-right entry 1.
    pub homography: Matrix3<f64>,
    pub inlier_labels: Vec<bool>,
    pub noise_sigma: f64,
}

impl GroundTruth {
    pub fn num_inliers(&self) -> usize {
        self.inlier_labels.iter().filter(|&&b| b).count()
    }
}

/// A correspondence between a point in the first view and one in the second.
pub type PointPair = (Point, Point);

fn uniform_point(rng: &mut impl Rng, extent: Dims) -> Point {
    Point::new(
        rng.random::<f64>() * extent.width as f64,
        rng.random::<f64>() * extent.height as f64,
    )
}

/// Draws `n_inliers` noisy transfers of `h` and `n_outliers` independent
/// uniform pairs over `extent`, shuffled together.
///
/// Inlier sources are uniform over `extent`, conditioned on the noisy
/// destination also landing inside it. Outliers that happen to fall within
/// 3 px of the true transfer are re-drawn, so labels are unambiguous.
pub fn synth_correspondences(
    n_inliers: usize,
    n_outliers: usize,
    h: &Matrix3<f64>,
    noise_sigma: f64,
    extent: Dims,
    seed: u64,
) -> Result<(Vec<PointPair>, GroundTruth), ImageError> {
    let h = normalize_unit_corner(h);
    invert_homography(&h).ok_or(ImageError::SingularHomography)?;
    if extent.width == 0 || extent.height == 0 {
        return Err(ImageError::InvalidDimensions { width: extent.width, height: extent.height, len: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sigma.max(0.0)).expect("finite sigma");

    let mut pairs = Vec::with_capacity(n_inliers + n_outliers);
    let mut labels = Vec::with_capacity(n_inliers + n_outliers);
    for _ in 0..n_inliers {
        let mut found = None;
        for _ in 0..MAX_DRAWS {
            let p = uniform_point(&mut rng, extent);
            let Some(t) = project(&h, &p) else { continue };
            let q = if noise_sigma > 0.0 {
                Point::new(t.x + noise.sample(&mut rng), t.y + noise.sample(&mut rng))
            } else {
                t
            };
            if extent.contains(&q) {
                found = Some((p, q));
                break;
            }
        }
        pairs.push(found.ok_or(ImageError::ExtentUnreachable)?);
        labels.push(true);
    }
    for _ in 0..n_outliers {
        let mut found = None;
        for _ in 0..MAX_DRAWS {
            let p = uniform_point(&mut rng, extent);
            let q = uniform_point(&mut rng, extent);
            let consistent = project(&h, &p).is_some_and(|t| (t - q).norm() < OUTLIER_REJECT_PX);
            if !consistent {
                found = Some((p, q));
                break;
            }
        }
        pairs.push(found.ok_or(ImageError::ExtentUnreachable)?);
        labels.push(false);
    }

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut rng);
    let pairs = order.iter().map(|&i| pairs[i]).collect();
    let inlier_labels = order.iter().map(|&i| labels[i]).collect();
    Ok((pairs, GroundTruth { homography: h, inlier_labels, noise_sigma }))
}

/// A mild random viewpoint change about the centre of `extent`: rotation up
/// to ±0.15 rad, scale in [0.9, 1.1], translation up to 4 % of the extent and
/// a small projective component.
pub fn random_homography(rng: &mut impl Rng, extent: Dims) -> Matrix3<f64> {
    let (w, h) = (extent.width as f64, extent.height as f64);
    let theta = rng.random_range(-0.15..0.15);
    let scale = rng.random_range(0.9..1.1);
    let tx = rng.random_range(-0.04..0.04) * w;
    let ty = rng.random_range(-0.04..0.04) * h;
    let px = rng.random_range(-0.1..0.1) / w;
    let py = rng.random_range(-0.1..0.1) / h;
    let (s, c) = f64::sin_cos(theta);
    let center = Matrix3::new(1.0, 0.0, w / 2.0, 0.0, 1.0, h / 2.0, 0.0, 0.0, 1.0);
    let uncenter = Matrix3::new(1.0, 0.0, -w / 2.0, 0.0, 1.0, -h / 2.0, 0.0, 0.0, 1.0);
    let similarity = Matrix3::new(scale * c, -scale * s, tx, scale * s, scale * c, ty, 0.0, 0.0, 1.0);
    let perspective = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, px, py, 1.0);
    normalize_unit_corner(&(center * similarity * perspective * uncenter))
}

/// Renders a corner-rich test scene: a smooth value-noise background under
/// many overlapping rectangles and triangles of random intensity.
pub fn render_scene(dims: Dims, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (dims.width, dims.height);

    let step = 24usize;
    let gw = w / step + 2;
    let gh = h / step + 2;
    let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.random_range(70.0..180.0)).collect();
    let mut img = Image::from_fn(w, h, |x, y| {
        let gx = x as f64 / step as f64;
        let gy = y as f64 / step as f64;
        let (x0, y0) = (gx.floor() as usize, gy.floor() as usize);
        let (fx, fy) = (gx - x0 as f64, gy - y0 as f64);
        let at = |i: usize, j: usize| lattice[j * gw + i];
        let top = at(x0, y0) * (1.0 - fx) + at(x0 + 1, y0) * fx;
        let bot = at(x0, y0 + 1) * (1.0 - fx) + at(x0 + 1, y0 + 1) * fx;
        quantize(top * (1.0 - fy) + bot * fy)
    });

    let n_shapes = (w * h) / 160;
    for _ in 0..n_shapes {
        let value: u8 = rng.random();
        let cx = rng.random_range(0.0..w as f64);
        let cy = rng.random_range(0.0..h as f64);
        if rng.random_bool(0.6) {
            let hw = rng.random_range(2.0..14.0);
            let hh = rng.random_range(2.0..14.0);
            let x0 = (cx - hw).max(0.0) as usize;
            let x1 = ((cx + hw) as usize).min(w - 1);
            let y0 = (cy - hh).max(0.0) as usize;
            let y1 = ((cy + hh) as usize).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    img.set(x, y, value);
                }
            }
        } else {
            let r = rng.random_range(4.0..16.0);
            let verts: Vec<(f64, f64)> = (0..3)
                .map(|_| {
                    let a = rng.random_range(0.0..std::f64::consts::TAU);
                    (cx + r * a.cos(), cy + r * a.sin())
                })
                .collect();
            fill_triangle(&mut img, &verts, value);
        }
    }
    img
}

fn fill_triangle(img: &mut Image, v: &[(f64, f64)], value: u8) {
    let edge = |a: (f64, f64), b: (f64, f64), x: f64, y: f64| (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0);
    let area = edge(v[0], v[1], v[2].0, v[2].1);
    if area.abs() < 1.0 {
        return;
    }
    let min_x = v.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).max(0.0) as usize;
    let max_x = v.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).min((img.width - 1) as f64);
    let min_y = v.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).max(0.0) as usize;
    let max_y = v.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).min((img.height - 1) as f64);
    if max_x < 0.0 || max_y < 0.0 {
        return;
    }
    for y in min_y..=max_y as usize {
        for x in min_x..=max_x as usize {
            let (px, py) = (x as f64, y as f64);
            let e0 = edge(v[0], v[1], px, py) * area.signum();
            let e1 = edge(v[1], v[2], px, py) * area.signum();
            let e2 = edge(v[2], v[0], px, py) * area.signum();
            if e0 >= 0.0 && e1 >= 0.0 && e2 >= 0.0 {
                img.set(x, y, value);
            }
        }
    }
}
