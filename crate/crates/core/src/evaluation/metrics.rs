use crate::dataset::PoiId;
use crate::error::{Error, Result};
use crate::recommender::Recommendation;

fn check_lengths(recs: usize, held_out: usize) -> Result<()> {
    if recs != held_out {
        return Err(Error::Evaluation(format!(
            "{recs} recommendation lists for {held_out} held-out check-ins"
        )));
    }
    if held_out == 0 {
        return Err(Error::Evaluation("no users to evaluate".into()));
    }
    Ok(())
}

/// Fraction of users whose held-out POI is among the first `k` entries of
/// their list.
pub fn recall_at_k(recs: &[Recommendation], held_out: &[PoiId], k: usize) -> Result<f64> {
    check_lengths(recs.len(), held_out.len())?;
    let hits = recs
        .iter()
        .zip(held_out)
        .filter(|(r, &h)| r.pois().take(k).any(|p| p == h))
        .count();
    Ok(hits as f64 / held_out.len() as f64)
}

/// Mean reciprocal rank over full rankings.
pub fn mrr(recs: &[Recommendation], held_out: &[PoiId]) -> Result<f64> {
    check_lengths(recs.len(), held_out.len())?;
    let mut sum = 0.0;
    for (r, &h) in recs.iter().zip(held_out) {
        let pos = r
            .position(h)
            .ok_or_else(|| Error::Evaluation(format!("held-out POI {h} missing from a full ranking")))?;
        sum += 1.0 / pos as f64;
    }
    Ok(sum / held_out.len() as f64)
}

/// Recall@k from 1-indexed ranks of the held-out POIs.
pub fn recall_from_ranks(ranks: &[usize], k: usize) -> f64 {
    ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len().max(1) as f64
}

/// Mean reciprocal rank, counting only ranks within `cutoff` (pass
/// `usize::MAX` for the untruncated mean).
pub fn mrr_from_ranks(ranks: &[usize], cutoff: usize) -> f64 {
    ranks.iter().filter(|&&r| r <= cutoff).map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recommender::rank_scores;

    fn rec(order: &[usize]) -> Recommendation {
        // Scores descending along `order`.
        let mut scores = vec![0.0; order.len()];
        for (pos, &p) in order.iter().enumerate() {
            scores[p] = (order.len() - pos) as f64;
        }
        rank_scores(&scores, order.len()).unwrap()
    }

    #[test]
    fn all_hits() {
        let recs = vec![rec(&[0, 1, 2]), rec(&[2, 0, 1])];
        assert_eq!(recall_at_k(&recs, &[0, 2], 1).unwrap(), 1.0);
        assert_eq!(mrr(&recs, &[0, 2]).unwrap(), 1.0);
    }

    #[test]
    fn second_place_gives_half() {
        assert_eq!(mrr(&[rec(&[1, 0, 2])], &[0]).unwrap(), 0.5);
        assert_eq!(recall_at_k(&[rec(&[1, 0, 2])], &[0], 1).unwrap(), 0.0);
    }

    #[test]
    fn full_list_always_hits() {
        let recs = vec![rec(&[2, 1, 0]), rec(&[0, 2, 1])];
        assert_eq!(recall_at_k(&recs, &[0, 1], 3).unwrap(), 1.0);
    }

    #[test]
    fn missing_user_is_error() {
        assert!(matches!(recall_at_k(&[rec(&[0, 1])], &[0, 1], 1), Err(Error::Evaluation(_))));
        let partial = rank_scores(&[1.0, 0.0, 0.5], 1).unwrap();
        assert!(matches!(mrr(&[partial], &[1]), Err(Error::Evaluation(_))));
    }

    #[test]
    fn rank_helpers_agree() {
        let ranks = [1, 3, 2, 10];
        assert_eq!(recall_from_ranks(&ranks, 2), 0.5);
        assert!((mrr_from_ranks(&ranks, usize::MAX) - (1.0 + 1.0 / 3.0 + 0.5 + 0.1) / 4.0).abs() < 1e-15);
        assert!((mrr_from_ranks(&ranks, 2) - 1.5 / 4.0).abs() < 1e-15);
    }
}
