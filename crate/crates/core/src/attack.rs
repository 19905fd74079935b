//! POI-extraction attack: sequential stay-point clustering.
//!
//! A candidate cluster grows record by record while every member stays
//! within `max_diameter / 2` of the running centroid. When the next record
//! would break that bound, the candidate is emitted as a POI if it lasted at
//! least `min_stay`, and a new candidate starts at the breaking record.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::geo::{LocalPlane, Location, PlanarPoint};
use crate::model::{Dataset, Fix, Timestamp, Trace, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AttackConfig {
    /// Maximum cluster diameter in meters.
    pub max_diameter: f64,
    /// Minimum dwell in seconds.
    pub min_stay: i64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            max_diameter: 200.0,
            min_stay: 15 * 60,
        }
    }
}

impl AttackConfig {
    pub fn new(max_diameter: f64, min_stay: i64) -> Result<Self, ConfigError> {
        ConfigError::check(
            max_diameter.is_finite() && max_diameter > 0.0,
            "max_diameter",
            "a positive number of meters",
            max_diameter,
        )?;
        ConfigError::check(min_stay > 0, "min_stay", "positive", min_stay as f64)?;
        Ok(Self {
            max_diameter,
            min_stay,
        })
    }
}

/// An extracted (or planted) stay point.
#[derive(Debug, Clone, PartialEq)]
pub struct Poi {
    pub user: UserId,
    pub center: Location,
    pub start: Timestamp,
    pub end: Timestamp,
    pub record_count: usize,
}

impl Poi {
    pub fn duration(&self) -> i64 {
        self.end - self.start
    }
}

pub type PoiMap = BTreeMap<UserId, Vec<Poi>>;

struct Candidate {
    plane: LocalPlane,
    start: usize,
    points: Vec<PlanarPoint>,
    sum: PlanarPoint,
}

impl Candidate {
    fn start(fixes: &[Fix], at: usize) -> Self {
        Self {
            plane: LocalPlane::new(fixes[at].loc),
            start: at,
            points: vec![PlanarPoint::ORIGIN],
            sum: PlanarPoint::ORIGIN,
        }
    }

    fn end(&self) -> usize {
        self.start + self.points.len()
    }

    fn centroid_with(&self, extra: Option<PlanarPoint>) -> PlanarPoint {
        let (sx, sy, n) = match extra {
            Some(p) => (self.sum.x + p.x, self.sum.y + p.y, self.points.len() + 1),
            None => (self.sum.x, self.sum.y, self.points.len()),
        };
        PlanarPoint::new(sx / n as f64, sy / n as f64)
    }

    /// Adds the record following the current members if the radius bound
    /// still holds for every member.
    fn try_extend(&mut self, fixes: &[Fix], radius: f64) -> bool {
        let p = self.plane.project(&fixes[self.end()].loc);
        let c = self.centroid_with(Some(p));
        if p.distance(&c) > radius || self.points.iter().any(|q| q.distance(&c) > radius) {
            return false;
        }
        self.points.push(p);
        self.sum.x += p.x;
        self.sum.y += p.y;
        true
    }

    fn into_poi(self, fixes: &[Fix], user: &UserId, min_stay: i64) -> Option<Poi> {
        let start = fixes[self.start].time;
        let end = fixes[self.end() - 1].time;
        if end - start < min_stay {
            return None;
        }
        Some(Poi {
            user: user.clone(),
            center: self.plane.unproject(&self.centroid_with(None)),
            start,
            end,
            record_count: self.points.len(),
        })
    }
}

/// Stay points of one trace, in chronological order.
pub fn extract_pois(trace: &Trace, cfg: &AttackConfig) -> Vec<Poi> {
    let fixes = trace.fixes();
    let radius = cfg.max_diameter / 2.0;
    let mut pois = Vec::new();
    let mut start = 0;
    while start < fixes.len() {
        let mut cand = Candidate::start(fixes, start);
        while cand.end() < fixes.len() && cand.try_extend(fixes, radius) {}
        start = cand.end();
        if let Some(poi) = cand.into_poi(fixes, trace.user(), cfg.min_stay) {
            pois.push(poi);
        }
    }
    pois
}

/// Runs [`extract_pois`] on every trace; users without POIs map to an empty
/// list.
pub fn extract_all_pois(d: &Dataset, cfg: &AttackConfig) -> PoiMap {
    let traces: Vec<&Trace> = d.traces().collect();
    traces
        .par_iter()
        .map(|t| (t.user().clone(), extract_pois(t, cfg)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}
