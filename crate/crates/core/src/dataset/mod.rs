//! Check-in histories and the client-side features extracted from them.

mod features;
mod io;
mod synthetic;

use std::collections::BTreeMap;

pub use features::{extract_visit_counts, sample_transition, split_train_test, ClientData};
pub use io::{load_checkins, write_checkins, LoadedCheckins};
pub use synthetic::{generate_synthetic, ModelSpec, SyntheticSpec, TransitionModel};

use crate::error::{Error, Result};

/// Dense POI index in `[0, n)`.
pub type PoiId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoiDomain {
    n: usize,
    labels: Option<Vec<String>>,
}

impl PoiDomain {
    /// Domain whose raw labels are the integers `0..n`.
    pub fn dense(n: usize) -> Self {
        Self { n, labels: None }
    }

    pub fn with_labels(labels: Vec<String>) -> Self {
        Self { n: labels.len(), labels: Some(labels) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, poi: PoiId) -> String {
        match &self.labels {
            Some(l) => l[poi].clone(),
            None => poi.to_string(),
        }
    }

    pub fn check(&self, poi: PoiId) -> Result<()> {
        if poi < self.n {
            Ok(())
        } else {
            Err(Error::Domain { poi, n: self.n })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Checkin {
    pub poi: PoiId,
    pub time: i64,
}

/// One user's time-ordered check-ins. Never leaves the simulated client.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckinHistory {
    user_id: String,
    checkins: Vec<Checkin>,
}

impl CheckinHistory {
    /// Builds a history, rejecting decreasing timestamps.
    pub fn new(user_id: impl Into<String>, checkins: Vec<Checkin>) -> Result<Self> {
        let user_id = user_id.into();
        if checkins.windows(2).any(|w| w[1].time < w[0].time) {
            return Err(Error::InvalidInput(format!(
                "timestamps of user `{user_id}` are not non-decreasing"
            )));
        }
        Ok(Self { user_id, checkins })
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn checkins(&self) -> &[Checkin] {
        &self.checkins
    }

    pub fn len(&self) -> usize {
        self.checkins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkins.is_empty()
    }

    pub fn pois(&self) -> impl Iterator<Item = PoiId> + '_ {
        self.checkins.iter().map(|c| c.poi)
    }
}

/// Sparse per-user visit counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VisitCountRow {
    counts: BTreeMap<PoiId, u32>,
}

impl VisitCountRow {
    pub fn get(&self, poi: PoiId) -> u32 {
        self.counts.get(&poi).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (PoiId, u32)> + '_ {
        self.counts.iter().map(|(&p, &c)| (p, c))
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| c as u64).sum()
    }

    pub fn max_count(&self) -> u32 {
        self.counts.values().copied().max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Dense row scaled by this user's own maximum count, so entries lie
    /// in `[0, 1]`. All zeros for a user with no visits.
    pub fn normalized(&self, n: usize) -> Vec<f64> {
        let mut row = vec![0.0; n];
        let max = self.max_count();
        if max == 0 {
            return row;
        }
        for (p, c) in self.iter() {
            row[p] = c as f64 / max as f64;
        }
        row
    }

    pub(crate) fn increment(&mut self, poi: PoiId) {
        *self.counts.entry(poi).or_insert(0) += 1;
    }
}

/// An ordered pair of consecutively visited POIs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transition {
    pub src: PoiId,
    pub dst: PoiId,
}

/// A POI domain together with the histories of every user.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    domain: PoiDomain,
    histories: Vec<CheckinHistory>,
}

impl Dataset {
    /// Validates that every check-in falls inside the domain and that every
    /// history has at least two check-ins.
    pub fn new(domain: PoiDomain, histories: Vec<CheckinHistory>) -> Result<Self> {
        for h in &histories {
            if h.len() < 2 {
                return Err(Error::InvalidInput(format!(
                    "user `{}` has {} check-ins, need at least 2",
                    h.user_id(),
                    h.len()
                )));
            }
            for c in h.checkins() {
                domain.check(c.poi)?;
            }
        }
        Ok(Self { domain, histories })
    }

    pub fn domain(&self) -> &PoiDomain {
        &self.domain
    }

    pub fn n_pois(&self) -> usize {
        self.domain.len()
    }

    pub fn n_users(&self) -> usize {
        self.histories.len()
    }

    pub fn histories(&self) -> &[CheckinHistory] {
        &self.histories
    }

    /// Keeps only the latest `max_len` check-ins of every user.
    pub fn truncate_latest(&mut self, max_len: usize) {
        for h in &mut self.histories {
            if h.checkins.len() > max_len {
                let drop = h.checkins.len() - max_len;
                h.checkins.drain(..drop);
            }
        }
    }
}
