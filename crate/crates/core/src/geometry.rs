//! Small homogeneous-coordinate helpers shared by the image and estimation code.

use nalgebra::{Matrix3, Vector3};

use crate::Point;

/// Maps `p` through `h`; `None` when the point lands on the line at infinity.
#[inline]
pub fn project(h: &Matrix3<f64>, p: &Point) -> Option<Point> {
    let v = h * Vector3::new(p.x, p.y, 1.0);
    if v.z.abs() < 1e-12 {
        None
    } else {
        Some(Point::new(v.x / v.z, v.y / v.z))
    }
}

/// Scales `h` so the bottom-right entry is 1 (left untouched when that entry is ~0).
pub fn normalize_unit_corner(h: &Matrix3<f64>) -> Matrix3<f64> {
    let c = h[(2, 2)];
    if c.abs() > 1e-12 {
        h / c
    } else {
        *h
    }
}

/// Scales `m` so its largest-magnitude entry is exactly `+1`.
pub fn normalize_max_entry(m: &Matrix3<f64>) -> Matrix3<f64> {
    let mut best = 0.0f64;
    for v in m.iter() {
        if v.abs() > best.abs() {
            best = *v;
        }
    }
    if best == 0.0 {
        *m
    } else {
        m / best
    }
}

/// Inverse of a homography normalized with [`normalize_unit_corner`], or `None`
/// when its determinant magnitude is at most `1e-9`.
pub fn invert_homography(h: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let n = normalize_unit_corner(h);
    if n.determinant().abs() <= 1e-9 {
        return None;
    }
    n.try_inverse()
}

/// Hartley conditioning: translate the centroid to the origin and scale the
/// mean distance to sqrt(2). Returns the conditioned points and the 3x3 transform.
pub fn hartley_normalize(pts: &[Point]) -> (Vec<Point>, Matrix3<f64>) {
    let n = pts.len().max(1) as f64;
    let (mut cx, mut cy) = (0.0, 0.0);
    for p in pts {
        cx += p.x;
        cy += p.y;
    }
    cx /= n;
    cy /= n;
    let mean_dist = pts
        .iter()
        .map(|p| ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    let s = if mean_dist > 1e-12 {
        std::f64::consts::SQRT_2 / mean_dist
    } else {
        1.0
    };
    let t = Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0);
    let out = pts
        .iter()
        .map(|p| Point::new(s * (p.x - cx), s * (p.y - cy)))
        .collect();
    (out, t)
}
