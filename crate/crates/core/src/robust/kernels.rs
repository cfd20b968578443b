//! Minimal and least-squares solvers for the two geometric kernels, and
//! their residuals.

use nalgebra::{DMatrix, Matrix3, SMatrix, SymmetricEigen, Vector3, SVD};

use super::{ModelKind, RobustError};
use crate::geometry::{hartley_normalize, invert_homography, normalize_max_entry, project};
use crate::Point;

const COLLINEAR_EPS: f64 = 1e-9;
const GAP_EPS: f64 = 1e-12;
const RANK_EPS: f64 = 1e-9;

type Mat9 = SMatrix<f64, 9, 9>;

fn doubled_area(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn any_three_collinear(pts: &[Point]) -> bool {
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if doubled_area(&pts[i], &pts[j], &pts[k]).abs() < COLLINEAR_EPS {
                    return true;
                }
            }
        }
    }
    false
}

fn row_of(v: &[f64]) -> Matrix3<f64> {
    Matrix3::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8])
}

fn homography_rows(a: &Point, b: &Point) -> [[f64; 9]; 2] {
    let (x, y, u, v) = (a.x, a.y, b.x, b.y);
    [
        [-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u],
        [0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v],
    ]
}

fn fundamental_row(a: &Point, b: &Point) -> [f64; 9] {
    let (x, y, xp, yp) = (a.x, a.y, b.x, b.y);
    [xp * x, xp * y, xp, yp * x, yp * y, yp, x, y, 1.0]
}

/// Right singular vector of the smallest singular value, plus all singular
/// values in ascending order. Systems with fewer than nine rows are padded with
/// zero rows so the full right singular basis is available.
fn null_vector_svd(rows: &[[f64; 9]]) -> Result<([f64; 9], Vec<f64>), RobustError> {
    let m = rows.len().max(9);
    let mut a = DMatrix::<f64>::zeros(m, 9);
    for (i, r) in rows.iter().enumerate() {
        for (j, v) in r.iter().enumerate() {
            a[(i, j)] = *v;
        }
    }
    let svd = SVD::new(a, false, true);
    let v_t = svd.v_t.ok_or(RobustError::NumericalFailure)?;
    let sv = &svd.singular_values;
    let mut idx: Vec<usize> = (0..sv.len()).collect();
    idx.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let row = v_t.row(idx[0]);
    let mut out = [0.0; 9];
    for (o, v) in out.iter_mut().zip(row.iter()) {
        *o = *v;
    }
    Ok((out, idx.iter().map(|&i| sv[i]).collect()))
}

/// Same as [`null_vector_svd`] through the 9×9 normal matrix; used for large
/// least-squares refits where forming the full SVD would dominate the cost.
fn null_vector_normal(ata: Mat9) -> Result<([f64; 9], Vec<f64>), RobustError> {
    let eig = SymmetricEigen::new(ata);
    let mut idx: Vec<usize> = (0..9).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let col = eig.eigenvectors.column(idx[0]);
    let mut out = [0.0; 9];
    for (o, v) in out.iter_mut().zip(col.iter()) {
        *o = *v;
    }
    let sv = idx.iter().map(|&i| eig.eigenvalues[i].max(0.0).sqrt()).collect();
    Ok((out, sv))
}

fn accumulate(ata: &mut Mat9, r: &[f64; 9]) {
    for i in 0..9 {
        if r[i] == 0.0 {
            continue;
        }
        for j in i..9 {
            ata[(i, j)] += r[i] * r[j];
        }
    }
}

fn symmetrize(ata: &mut Mat9) {
    for i in 0..9 {
        for j in 0..i {
            ata[(i, j)] = ata[(j, i)];
        }
    }
}

fn check_lengths(src: &[Point], dst: &[Point], need: usize) -> Result<(), RobustError> {
    if src.len() != dst.len() || src.len() < need {
        return Err(RobustError::TooFewMatches { need, got: src.len().min(dst.len()) });
    }
    Ok(())
}

/// Normalized DLT homography mapping `src` onto `dst`, scaled so its largest
/// entry is 1. Four pairs give the minimal solver (with a collinearity test);
/// more pairs give the least-squares fit.
pub fn estimate_homography(src: &[Point], dst: &[Point]) -> Result<Matrix3<f64>, RobustError> {
    check_lengths(src, dst, 4)?;
    if src.len() == 4 && (any_three_collinear(src) || any_three_collinear(dst)) {
        return Err(RobustError::DegenerateSample);
    }
    let (ns, ts) = hartley_normalize(src);
    let (nd, td) = hartley_normalize(dst);
    let (v, sv) = if src.len() <= 8 {
        let rows: Vec<[f64; 9]> = ns.iter().zip(&nd).flat_map(|(a, b)| homography_rows(a, b)).collect();
        null_vector_svd(&rows)?
    } else {
        let mut ata = Mat9::zeros();
        for (a, b) in ns.iter().zip(&nd) {
            for r in homography_rows(a, b) {
                accumulate(&mut ata, &r);
            }
        }
        symmetrize(&mut ata);
        null_vector_normal(ata)?
    };
    if sv[1] - sv[0] < GAP_EPS {
        return Err(RobustError::NumericalFailure);
    }
    let hn = row_of(&v);
    let td_inv = td.try_inverse().ok_or(RobustError::NumericalFailure)?;
    let h = normalize_max_entry(&(td_inv * hn * ts));
    if !h.iter().all(|x| x.is_finite()) || invert_homography(&h).is_none() {
        return Err(RobustError::DegenerateSample);
    }
    Ok(h)
}

/// Normalized eight-point fundamental matrix with `dstᵀ F src = 0`, rank 2,
/// unit Frobenius norm and a positive largest-magnitude entry.
pub fn estimate_fundamental(src: &[Point], dst: &[Point]) -> Result<Matrix3<f64>, RobustError> {
    check_lengths(src, dst, 8)?;
    let (ns, ts) = hartley_normalize(src);
    let (nd, td) = hartley_normalize(dst);
    let (v, sv) = if src.len() <= 9 {
        let rows: Vec<[f64; 9]> = ns.iter().zip(&nd).map(|(a, b)| fundamental_row(a, b)).collect();
        null_vector_svd(&rows)?
    } else {
        let mut ata = Mat9::zeros();
        for (a, b) in ns.iter().zip(&nd) {
            accumulate(&mut ata, &fundamental_row(a, b));
        }
        symmetrize(&mut ata);
        null_vector_normal(ata)?
    };
    // the eight largest singular values must all be nonzero
    if sv[1] <= RANK_EPS {
        return Err(RobustError::DegenerateSample);
    }
    if sv[1] - sv[0] < GAP_EPS {
        return Err(RobustError::NumericalFailure);
    }
    let f = enforce_rank2(&row_of(&v))?;
    let f = td.transpose() * f * ts;
    let norm = f.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(RobustError::NumericalFailure);
    }
    let f = f / norm;
    let mut peak = 0.0f64;
    for x in f.iter() {
        if x.abs() > peak.abs() {
            peak = *x;
        }
    }
    Ok(if peak < 0.0 { -f } else { f })
}

/// Zeroes the smallest singular value.
pub fn enforce_rank2(f: &Matrix3<f64>) -> Result<Matrix3<f64>, RobustError> {
    let svd = f.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(RobustError::NumericalFailure),
    };
    let mut s = svd.singular_values;
    let (imin, _) = s.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("3 values");
    s[imin] = 0.0;
    Ok(u * Matrix3::from_diagonal(&s) * v_t)
}

/// ½(|H·p − q| + |H⁻¹·q − p|); infinite when either transfer hits infinity.
#[inline]
pub fn symmetric_transfer(h: &Matrix3<f64>, h_inv: &Matrix3<f64>, p: &Point, q: &Point) -> f64 {
    match (project(h, p), project(h_inv, q)) {
        (Some(fp), Some(bq)) => 0.5 * ((fp - q).norm() + (bq - p).norm()),
        _ => f64::INFINITY,
    }
}

/// First-order geometric distance of `(p, q)` to `qᵀ F p = 0`.
#[inline]
pub fn sampson(f: &Matrix3<f64>, p: &Point, q: &Point) -> f64 {
    let x = Vector3::new(p.x, p.y, 1.0);
    let xp = Vector3::new(q.x, q.y, 1.0);
    let fx = f * x;
    let ftxp = f.transpose() * xp;
    let e = xp.dot(&fx);
    let denom = fx.x * fx.x + fx.y * fx.y + ftxp.x * ftxp.x + ftxp.y * ftxp.y;
    if denom <= 0.0 {
        return if e == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (e * e / denom).sqrt()
}

/// Residual evaluator with per-model precomputation (the homography inverse).
#[derive(Clone, Copy, Debug)]
pub enum Residual {
    Homography { h: Matrix3<f64>, h_inv: Matrix3<f64> },
    Fundamental { f: Matrix3<f64> },
}

impl Residual {
    pub fn new(kind: ModelKind, m: &Matrix3<f64>) -> Result<Self, RobustError> {
        Ok(match kind {
            ModelKind::Homography => Residual::Homography {
                h: *m,
                h_inv: invert_homography(m).ok_or(RobustError::SingularHomography)?,
            },
            ModelKind::Fundamental => Residual::Fundamental { f: *m },
        })
    }

    #[inline]
    pub fn eval(&self, p: &Point, q: &Point) -> f64 {
        match self {
            Residual::Homography { h, h_inv } => symmetric_transfer(h, h_inv, p, q),
            Residual::Fundamental { f } => sampson(f, p, q),
        }
    }
}

pub fn fit(kind: ModelKind, src: &[Point], dst: &[Point]) -> Result<Matrix3<f64>, RobustError> {
    match kind {
        ModelKind::Homography => estimate_homography(src, dst),
        ModelKind::Fundamental => estimate_fundamental(src, dst),
    }
}
