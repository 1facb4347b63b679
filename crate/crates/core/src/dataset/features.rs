use rand::Rng;

use super::{Checkin, CheckinHistory, PoiId, Transition, VisitCountRow};
use crate::error::{Error, Result};

/// Splits off the latest check-in as the held-out test item.
pub fn split_train_test(history: &CheckinHistory) -> Result<(Vec<Checkin>, Checkin)> {
    match history.checkins() {
        [train @ .., last] if !train.is_empty() => Ok((train.to_vec(), *last)),
        _ => Err(Error::InvalidInput(format!(
            "user `{}` needs at least 2 check-ins to hold one out, has {}",
            history.user_id(),
            history.len()
        ))),
    }
}

pub fn extract_visit_counts(training: &[Checkin]) -> VisitCountRow {
    let mut row = VisitCountRow::default();
    for c in training {
        row.increment(c.poi);
    }
    row
}

/// Uniform draw over the consecutive pairs of `training`; `None` when there
/// are fewer than two check-ins.
pub fn sample_transition<R: Rng + ?Sized>(training: &[Checkin], rng: &mut R) -> Option<Transition> {
    if training.len() < 2 {
        return None;
    }
    let i = rng.gen_range(0..training.len() - 1);
    Some(Transition { src: training[i].poi, dst: training[i + 1].poi })
}

/// What one simulated client derives from its own history: the training
/// prefix, the held-out POI and the POI it is currently at.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientData {
    pub user_id: String,
    pub training: Vec<Checkin>,
    pub held_out: PoiId,
    pub visits: VisitCountRow,
}

impl ClientData {
    pub fn from_history(history: &CheckinHistory) -> Result<Self> {
        let (training, held_out) = split_train_test(history)?;
        let visits = extract_visit_counts(&training);
        Ok(Self { user_id: history.user_id().to_owned(), training, held_out: held_out.poi, visits })
    }

    /// Location used as the current POI when ranking the held-out one.
    pub fn current(&self) -> PoiId {
        self.training.last().map(|c| c.poi).expect("training prefix is never empty")
    }
}
