//! Client-side next-POI ranking.
//!
//! The score of candidate `k` for a user at POI `j` is `uᵀv_k + v_jᵀv_k`.
//! Only the public POI matrix and the client's own state are needed, so
//! the current location never leaves the device.

use std::cmp::Ordering;

use crate::dataset::PoiId;
use crate::error::{Error, Result};
use crate::matrix::{dot, DenseMatrix};

/// Ranked candidates, best first. Ties are broken by ascending POI id.
#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    ranked: Vec<(PoiId, f64)>,
}

impl Recommendation {
    pub fn ranked(&self) -> &[(PoiId, f64)] {
        &self.ranked
    }

    pub fn pois(&self) -> impl Iterator<Item = PoiId> + '_ {
        self.ranked.iter().map(|&(p, _)| p)
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }

    /// 1-indexed position of `poi`, if ranked.
    pub fn position(&self, poi: PoiId) -> Option<usize> {
        self.ranked.iter().position(|&(p, _)| p == poi).map(|i| i + 1)
    }
}

fn check(v: &DenseMatrix, poi: PoiId) -> Result<()> {
    if poi < v.rows() {
        Ok(())
    } else {
        Err(Error::Domain { poi, n: v.rows() })
    }
}

pub fn preference(u: &[f64], current: PoiId, candidate: PoiId, v: &DenseMatrix) -> Result<f64> {
    check(v, current)?;
    check(v, candidate)?;
    Ok(dot(u, v.row(candidate)) + dot(v.row(current), v.row(candidate)))
}

/// Scores of every POI. With `current = None` only the personal term
/// `uᵀv_k` is used, which is how the user–POI-only baselines rank.
pub fn scores(u: &[f64], current: Option<PoiId>, v: &DenseMatrix) -> Result<Vec<f64>> {
    if u.len() != v.cols() {
        return Err(Error::InvalidInput(format!("user vector has {} dims, V has {}", u.len(), v.cols())));
    }
    let here = match current {
        Some(c) => {
            check(v, c)?;
            Some(v.row(c))
        }
        None => None,
    };
    Ok((0..v.rows())
        .map(|k| {
            let vk = v.row(k);
            dot(u, vk) + here.map_or(0.0, |h| dot(h, vk))
        })
        .collect())
}

fn by_score(a: &(PoiId, f64), b: &(PoiId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

pub fn rank_scores(scores: &[f64], k: usize) -> Result<Recommendation> {
    if k == 0 || k > scores.len() {
        return Err(Error::param("k", format!("need 1 <= k <= {}, got {k}", scores.len())));
    }
    let mut all: Vec<(PoiId, f64)> = scores.iter().copied().enumerate().collect();
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, by_score);
        all.truncate(k);
    }
    all.sort_by(by_score);
    Ok(Recommendation { ranked: all })
}

pub fn top_k(u: &[f64], current: Option<PoiId>, v: &DenseMatrix, k: usize) -> Result<Recommendation> {
    rank_scores(&scores(u, current, v)?, k)
}

/// 1-indexed rank `target` would get in the full ordering, without sorting.
pub fn rank_of(scores: &[f64], target: PoiId) -> Result<usize> {
    let t = *scores.get(target).ok_or(Error::Domain { poi: target, n: scores.len() })?;
    let ahead = scores
        .iter()
        .enumerate()
        .filter(|&(p, &s)| by_score(&(p, s), &(target, t)) == Ordering::Less)
        .count();
    Ok(ahead + 1)
}
