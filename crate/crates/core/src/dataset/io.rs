//! Check-in text format.
//!
//! One record per line, tab- or comma-separated (detected from the first
//! record). Three fields are read as `user_id, timestamp, poi_id`; five
//! fields as the Gowalla layout `user, time, latitude, longitude,
//! location_id` with the coordinates ignored. Timestamps are integers,
//! decimals or RFC 3339 strings. A first line whose timestamp does not parse
//! is taken as a header. Blank lines and lines starting with `#` are skipped.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Checkin, CheckinHistory, Dataset, PoiDomain};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCheckins {
    pub dataset: Dataset,
    /// Users dropped because they had a single check-in.
    pub dropped_users: usize,
}

struct Record<'a> {
    user: &'a str,
    time: i64,
    poi: &'a str,
}

fn parse_time(field: &str) -> Option<i64> {
    if let Ok(t) = field.parse::<i64>() {
        return Some(t);
    }
    if let Ok(t) = field.parse::<f64>() {
        return t.is_finite().then(|| t.floor() as i64);
    }
    chrono::DateTime::parse_from_rfc3339(field).ok().map(|d| d.timestamp())
}

fn split_record(line: &str, delim: char) -> Vec<&str> {
    line.split(delim).map(str::trim).collect()
}

fn parse_record<'a>(fields: &[&'a str], line_no: usize) -> Result<Record<'a>> {
    let (user, time, poi) = match fields {
        [u, t, p] => (*u, *t, *p),
        [u, t, _, _, p] => (*u, *t, *p),
        _ => {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("expected 3 or 5 fields, found {}", fields.len()),
            })
        }
    };
    if user.is_empty() || poi.is_empty() {
        return Err(Error::Parse { line: line_no, reason: "empty user or POI field".into() });
    }
    let time = parse_time(time).ok_or_else(|| Error::Parse {
        line: line_no,
        reason: format!("unparseable timestamp `{time}`"),
    })?;
    Ok(Record { user, time, poi })
}

/// Sorts raw labels numerically when they are all integers, otherwise
/// lexicographically. The position in the sorted order is the dense id.
fn infer_domain(labels: BTreeSet<&str>) -> PoiDomain {
    let mut labels: Vec<&str> = labels.into_iter().collect();
    if labels.iter().all(|l| l.parse::<u64>().is_ok()) {
        labels.sort_by_key(|l| l.parse::<u64>().unwrap());
    }
    PoiDomain::with_labels(labels.into_iter().map(str::to_owned).collect())
}

fn label_index(domain: &PoiDomain) -> Option<HashMap<&str, usize>> {
    domain.labels().map(|l| l.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect())
}

/// Reads a check-in file, grouping records per user (in order of first
/// appearance) and sorting each history by time. With `domain = None` the
/// POI domain is inferred from the labels seen; otherwise every label must
/// belong to the given domain.
pub fn load_checkins(path: &Path, domain: Option<&PoiDomain>) -> Result<LoadedCheckins> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checkins(&text, domain)
}

pub(crate) fn parse_checkins(text: &str, domain: Option<&PoiDomain>) -> Result<LoadedCheckins> {
    let mut delim = None;
    let mut records = Vec::new();
    let mut first = true;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let d = *delim.get_or_insert(if line.contains('\t') { '\t' } else { ',' });
        let fields = split_record(line, d);
        let parsed = parse_record(&fields, line_no);
        if first {
            first = false;
            // A header has the right shape but a non-time second column.
            if matches!(fields.len(), 3 | 5) && parse_time(fields[1]).is_none() {
                continue;
            }
        }
        records.push(parsed?);
    }

    let domain = match domain {
        Some(d) => d.clone(),
        None => infer_domain(records.iter().map(|r| r.poi).collect()),
    };
    let index = label_index(&domain);
    let resolve = |label: &str| -> Result<usize> {
        match &index {
            Some(map) => map.get(label).copied().ok_or_else(|| Error::UnknownPoi(label.to_owned())),
            None => {
                let id: usize = label.parse().map_err(|_| Error::UnknownPoi(label.to_owned()))?;
                domain.check(id)?;
                Ok(id)
            }
        }
    };

    let mut order: Vec<&str> = Vec::new();
    let mut per_user: HashMap<&str, Vec<Checkin>> = HashMap::new();
    for r in &records {
        let poi = resolve(r.poi)?;
        per_user
            .entry(r.user)
            .or_insert_with(|| {
                order.push(r.user);
                Vec::new()
            })
            .push(Checkin { poi, time: r.time });
    }

    let mut histories = Vec::with_capacity(order.len());
    let mut dropped_users = 0;
    for user in order {
        let mut checkins = per_user.remove(user).unwrap_or_default();
        checkins.sort_by_key(|c| c.time);
        if checkins.len() < 2 {
            dropped_users += 1;
            continue;
        }
        histories.push(CheckinHistory::new(user, checkins)?);
    }
    if dropped_users > 0 {
        log::warn!("dropped {dropped_users} users with a single check-in");
    }
    Ok(LoadedCheckins { dataset: Dataset::new(domain, histories)?, dropped_users })
}

pub(crate) fn format_checkins(dataset: &Dataset) -> String {
    let mut out = String::from("user_id\ttimestamp\tpoi_id\n");
    for h in dataset.histories() {
        for c in h.checkins() {
            let _ = writeln!(out, "{}\t{}\t{}", h.user_id(), c.time, dataset.domain().label(c.poi));
        }
    }
    out
}

/// Writes the tab-separated three-column form with a header line.
pub fn write_checkins(path: &Path, dataset: &Dataset) -> Result<()> {
    fs::write(path, format_checkins(dataset)).map_err(|e| Error::io(path, e))
}
