//! Grid-based motion statistics.
//!
//! Both images are divided into a coarse grid. A match whose endpoints fall in
//! cells `(a, b)` is supported by every other match landing in a cell pair
//! `(a + d, b + d)` for the nine offsets `d` of the 3×3 neighbourhood. That
//! support count is the match's *confidence*. A match is kept when, under at
//! least one of the half-cell shifts of grid A, its support reaches
//! `alpha · sqrt(n̄)`, where `n̄` is the mean number of matches per non-empty
//! cell of grid A. Grid B is never shifted.

use std::collections::HashMap;

use crate::features::FeatureSet;
use crate::imageio::Dims;
use crate::matcher::Match;
use crate::Point;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GmsError {
    #[error("point ({x}, {y}) lies outside the {width}x{height} image")]
    PointOutOfBounds { x: f64, y: f64, width: usize, height: usize },
    #[error("cell assignment lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("match index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid GMS configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridShift {
    None,
    HalfX,
    HalfY,
    HalfBoth,
}

impl GridShift {
    pub const ALL: [GridShift; 4] = [GridShift::None, GridShift::HalfX, GridShift::HalfY, GridShift::HalfBoth];

    fn halves(self) -> (bool, bool) {
        match self {
            GridShift::None => (false, false),
            GridShift::HalfX => (true, false),
            GridShift::HalfY => (false, true),
            GridShift::HalfBoth => (true, true),
        }
    }
}

impl std::str::FromStr for GridShift {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "none" => Ok(GridShift::None),
            "half-x" => Ok(GridShift::HalfX),
            "half-y" => Ok(GridShift::HalfY),
            "half-both" => Ok(GridShift::HalfBoth),
            other => Err(format!("unknown grid shift '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub cols: usize,
    pub rows: usize,
    pub shift: GridShift,
}

impl GridSpec {
    pub fn new(cols: usize, rows: usize, shift: GridShift) -> Self {
        Self { cols, rows, shift }
    }

    pub fn num_cells(&self) -> usize {
        self.cols * self.rows
    }

    /// Cell containing `p`; callers guarantee `p` lies inside `dims`.
    #[inline]
    fn cell_of(&self, p: &Point, dims: Dims) -> usize {
        let cw = dims.width as f64 / self.cols as f64;
        let ch = dims.height as f64 / self.rows as f64;
        let (hx, hy) = self.shift.halves();
        let sx = if hx { cw / 2.0 } else { 0.0 };
        let sy = if hy { ch / 2.0 } else { 0.0 };
        let cx = (((p.x + sx) / cw).floor() as usize).min(self.cols - 1);
        let cy = (((p.y + sy) / ch).floor() as usize).min(self.rows - 1);
        cx + self.cols * cy
    }

    /// Cell reached from `cell` by the offset `(dx, dy)`, if it stays on the grid.
    #[inline]
    pub fn neighbor(&self, cell: usize, dx: isize, dy: isize) -> Option<usize> {
        let x = (cell % self.cols) as isize + dx;
        let y = (cell / self.cols) as isize + dy;
        (x >= 0 && y >= 0 && x < self.cols as isize && y < self.rows as isize)
            .then(|| x as usize + self.cols * y as usize)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GmsConfig {
    pub cols: usize,
    pub rows: usize,
    pub alpha: f64,
    pub shifts: Vec<GridShift>,
    /// When false every match is scored and returned, none is dropped.
    pub reject: bool,
}

impl Default for GmsConfig {
    fn default() -> Self {
        Self { cols: 20, rows: 20, alpha: 6.0, shifts: GridShift::ALL.to_vec(), reject: true }
    }
}

impl GmsConfig {
    fn validate(&self) -> Result<(), GmsError> {
        if self.cols == 0 || self.rows == 0 {
            return Err(GmsError::InvalidConfig("grid needs at least one row and column".into()));
        }
        if !(self.alpha > 0.0) {
            return Err(GmsError::InvalidConfig("alpha must be positive".into()));
        }
        if self.shifts.is_empty() {
            return Err(GmsError::InvalidConfig("at least one grid shift must be enabled".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScoredMatch {
    pub m: Match,
    /// Supporting matches in the 3×3 cell-pair neighbourhood (self excluded),
    /// maximised over the enabled grid shifts.
    pub confidence: u32,
    pub cell_a: usize,
    pub cell_b: usize,
}

pub fn assign_cells(points: &[Point], dims: Dims, grid: &GridSpec) -> Result<Vec<usize>, GmsError> {
    points
        .iter()
        .map(|p| {
            if dims.contains(p) {
                Ok(grid.cell_of(p, dims))
            } else {
                Err(GmsError::PointOutOfBounds { x: p.x, y: p.y, width: dims.width, height: dims.height })
            }
        })
        .collect()
}

/// Number of matches per `(cell_a, cell_b)` pair.
pub fn cell_pair_scores(cells_a: &[usize], cells_b: &[usize]) -> Result<HashMap<(usize, usize), u32>, GmsError> {
    if cells_a.len() != cells_b.len() {
        return Err(GmsError::LengthMismatch(cells_a.len(), cells_b.len()));
    }
    let mut tally = HashMap::new();
    for (&a, &b) in cells_a.iter().zip(cells_b) {
        *tally.entry((a, b)).or_insert(0) += 1;
    }
    Ok(tally)
}

/// Per-shift outcome for one match.
struct ShiftScore {
    score: u32,
    passed: bool,
    cell_a: usize,
    cell_b: usize,
}

fn endpoints(matches: &[Match], pts_a: &[Point], pts_b: &[Point]) -> Result<(Vec<Point>, Vec<Point>), GmsError> {
    let mut a = Vec::with_capacity(matches.len());
    let mut b = Vec::with_capacity(matches.len());
    for m in matches {
        a.push(*pts_a.get(m.idx_a).ok_or(GmsError::IndexOutOfRange { index: m.idx_a, len: pts_a.len() })?);
        b.push(*pts_b.get(m.idx_b).ok_or(GmsError::IndexOutOfRange { index: m.idx_b, len: pts_b.len() })?);
    }
    Ok((a, b))
}

fn score_shift(
    ends_a: &[Point],
    cells_b: &[usize],
    dims_a: Dims,
    cfg: &GmsConfig,
    shift: GridShift,
) -> Result<Vec<ShiftScore>, GmsError> {
    let grid_a = GridSpec::new(cfg.cols, cfg.rows, shift);
    let grid_b = GridSpec::new(cfg.cols, cfg.rows, GridShift::None);
    let cells_a = assign_cells(ends_a, dims_a, &grid_a)?;
    let tally = cell_pair_scores(&cells_a, cells_b)?;

    let mut occupied = vec![false; grid_a.num_cells()];
    for &c in &cells_a {
        occupied[c] = true;
    }
    let nonempty = occupied.iter().filter(|&&o| o).count().max(1);
    let tau = cfg.alpha * (cells_a.len() as f64 / nonempty as f64).sqrt();

    Ok(cells_a
        .iter()
        .zip(cells_b)
        .map(|(&ca, &cb)| {
            let mut support = 0u32;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let (Some(na), Some(nb)) = (grid_a.neighbor(ca, dx, dy), grid_b.neighbor(cb, dx, dy)) {
                        support += tally.get(&(na, nb)).copied().unwrap_or(0);
                    }
                }
            }
            let score = support - 1;
            ShiftScore { score, passed: score as f64 >= tau, cell_a: ca, cell_b: cb }
        })
        .collect())
}

/// Scores every match and reports whether it passed the threshold under any shift.
pub fn gms_score(
    matches: &[Match],
    pts_a: &[Point],
    dims_a: Dims,
    pts_b: &[Point],
    dims_b: Dims,
    cfg: &GmsConfig,
) -> Result<Vec<(ScoredMatch, bool)>, GmsError> {
    cfg.validate()?;
    if matches.is_empty() {
        return Ok(Vec::new());
    }
    let (ends_a, ends_b) = endpoints(matches, pts_a, pts_b)?;
    let cells_b = assign_cells(&ends_b, dims_b, &GridSpec::new(cfg.cols, cfg.rows, GridShift::None))?;

    let mut out: Vec<(ScoredMatch, bool)> = matches
        .iter()
        .map(|&m| (ScoredMatch { m, confidence: 0, cell_a: 0, cell_b: 0 }, false))
        .collect();
    let mut first = true;
    for &shift in &cfg.shifts {
        let scores = score_shift(&ends_a, &cells_b, dims_a, cfg, shift)?;
        for ((sm, passed), s) in out.iter_mut().zip(scores) {
            if first || s.score > sm.confidence {
                sm.confidence = s.score;
                sm.cell_a = s.cell_a;
                sm.cell_b = s.cell_b;
            }
            *passed |= s.passed;
        }
        first = false;
    }
    Ok(out)
}

/// Keeps matches with enough neighbourhood support (all of them when
/// `cfg.reject` is false), in input order, each carrying its confidence.
pub fn gms_filter(
    matches: &[Match],
    pts_a: &[Point],
    dims_a: Dims,
    pts_b: &[Point],
    dims_b: Dims,
    cfg: &GmsConfig,
) -> Result<Vec<ScoredMatch>, GmsError> {
    Ok(gms_score(matches, pts_a, dims_a, pts_b, dims_b, cfg)?
        .into_iter()
        .filter(|(_, passed)| *passed || !cfg.reject)
        .map(|(sm, _)| sm)
        .collect())
}

pub fn gms_filter_sets(
    matches: &[Match],
    fs_a: &FeatureSet,
    fs_b: &FeatureSet,
    cfg: &GmsConfig,
) -> Result<Vec<ScoredMatch>, GmsError> {
    gms_filter(matches, &fs_a.points(), fs_a.source_dims, &fs_b.points(), fs_b.source_dims, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid20() -> GridSpec {
        GridSpec::new(20, 20, GridShift::None)
    }

    #[test]
    fn assign_corners() {
        let d = Dims::new(100, 100);
        let cells = assign_cells(&[Point::new(0.0, 0.0), Point::new(99.9, 99.9)], d, &grid20()).unwrap();
        assert_eq!(cells, vec![0, 399]);
        let shifted = GridSpec::new(20, 20, GridShift::HalfBoth);
        let cells = assign_cells(&[Point::new(0.0, 0.0), Point::new(99.9, 99.9)], d, &shifted).unwrap();
        assert_eq!(cells, vec![0, 399]);
        assert!(matches!(
            assign_cells(&[Point::new(100.0, 3.0)], d, &grid20()),
            Err(GmsError::PointOutOfBounds { .. })
        ));
    }

    #[test]
    fn tally_cases() {
        assert!(cell_pair_scores(&[], &[]).unwrap().is_empty());
        let t = cell_pair_scores(&[5; 10], &[7; 10]).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[&(5, 7)], 10);
        assert_eq!(cell_pair_scores(&[1], &[]), Err(GmsError::LengthMismatch(1, 0)));
    }

    fn cluster(n: usize) -> (Vec<Match>, Vec<Point>, Vec<Point>) {
        // 640x480 with 20x20 cells of 32x24; the cluster sits in the first
        // quarter of a cell so no half shift splits it
        let pa: Vec<Point> = (0..n).map(|i| Point::new(330.0 + (i % 5) as f64, 246.0 + (i / 5 % 4) as f64)).collect();
        let pb: Vec<Point> = pa.iter().map(|p| Point::new(p.x + 64.0, p.y + 48.0)).collect();
        let m = (0..n).map(|i| Match { idx_a: i, idx_b: i, distance: 0 }).collect();
        (m, pa, pb)
    }

    #[test]
    fn single_match_is_rejected() {
        let (m, pa, pb) = cluster(1);
        let d = Dims::new(640, 480);
        assert!(gms_filter(&m, &pa, d, &pb, d, &GmsConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn threshold_edge_30_vs_40() {
        let d = Dims::new(640, 480);
        let (m, pa, pb) = cluster(30);
        assert!(gms_filter(&m, &pa, d, &pb, d, &GmsConfig::default()).unwrap().is_empty());
        let scored = gms_score(&m, &pa, d, &pb, d, &GmsConfig::default()).unwrap();
        assert!(scored.iter().all(|(s, _)| s.confidence == 29));

        let (m, pa, pb) = cluster(40);
        let kept = gms_filter(&m, &pa, d, &pb, d, &GmsConfig::default()).unwrap();
        assert_eq!(kept.len(), 40);
        assert!(kept.iter().all(|s| s.confidence == 39));
    }

    #[test]
    fn score_only_keeps_everything() {
        let (m, pa, pb) = cluster(3);
        let d = Dims::new(640, 480);
        let cfg = GmsConfig { reject: false, ..GmsConfig::default() };
        let kept = gms_filter(&m, &pa, d, &pb, d, &cfg).unwrap();
        assert_eq!(kept.len(), 3);
        assert!(kept.iter().all(|s| s.confidence == 2));
    }

    #[test]
    fn empty_input() {
        let d = Dims::new(64, 64);
        assert!(gms_filter(&[], &[], d, &[], d, &GmsConfig::default()).unwrap().is_empty());
    }
}
