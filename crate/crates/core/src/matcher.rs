//! Brute-force nearest-neighbour matching under Hamming distance.

use crate::features::{Descriptor, FeatureSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Match {
    pub idx_a: usize,
    pub idx_b: usize,
    /// Hamming distance in bits, 0..=256.
    pub distance: u32,
}

#[inline]
pub fn hamming(a: &Descriptor, b: &Descriptor) -> u32 {
    a.0.iter().zip(&b.0).map(|(x, y)| (x ^ y).count_ones()).sum()
}

/// Index and distance of the nearest descriptor in `pool`; ties go to the lowest index.
fn nearest(d: &Descriptor, pool: &[Descriptor]) -> Option<(usize, u32)> {
    let mut best: Option<(usize, u32)> = None;
    for (j, e) in pool.iter().enumerate() {
        let dist = hamming(d, e);
        if best.is_none_or(|(_, b)| dist < b) {
            best = Some((j, dist));
            if dist == 0 {
                break;
            }
        }
    }
    best
}

/// For every descriptor of `a`, its nearest partner in `b`.
///
/// With `cross_check`, only mutual nearest pairs survive. Output is sorted by
/// `idx_a`.
pub fn match_descriptors(a: &[Descriptor], b: &[Descriptor], cross_check: bool) -> Vec<Match> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let forward: Vec<Match> = a
        .iter()
        .enumerate()
        .filter_map(|(i, d)| nearest(d, b).map(|(j, distance)| Match { idx_a: i, idx_b: j, distance }))
        .collect();
    if !cross_check {
        return forward;
    }
    let mut backward: Vec<Option<usize>> = vec![None; b.len()];
    forward
        .into_iter()
        .filter(|m| {
            let back = *backward[m.idx_b].get_or_insert_with(|| nearest(&b[m.idx_b], a).map_or(usize::MAX, |(i, _)| i));
            back == m.idx_a
        })
        .collect()
}

pub fn match_bruteforce(a: &FeatureSet, b: &FeatureSet, cross_check: bool) -> Vec<Match> {
    match_descriptors(&a.descriptors, &b.descriptors, cross_check)
}
