//! Synthetic traces with planted stay points.
//!
//! Each user travels along straight legs at constant speed and stops at
//! `pois_per_trace` places, where records are jittered uniformly inside a
//! disc of diameter `poi_diameter` for `poi_dwell` seconds. The planted stays
//! are returned as ground truth for the POI attack.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{Poi, PoiMap};
use crate::error::ConfigError;
use crate::geo::{LocalPlane, Location, PlanarPoint};
use crate::model::{Dataset, Fix, Timestamp, Trace, UserId};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SyntheticSpec {
    pub user_count: usize,
    pub pois_per_trace: usize,
    /// Meters.
    pub poi_diameter: f64,
    /// Seconds spent at each planted stay.
    pub poi_dwell: i64,
    /// Meters per second on travel legs.
    pub travel_speed: f64,
    /// Seconds between consecutive records.
    pub sampling_interval: i64,
    pub seed: u64,
    pub origin: Location,
    /// Side of the square, centered on `origin`, where traces start.
    pub extent: f64,
    /// Bounds on the length of each travel leg, in meters.
    pub min_leg: f64,
    pub max_leg: f64,
    /// Earliest trace start; each user starts up to one hour later.
    pub start_time: Timestamp,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            user_count: 100,
            pois_per_trace: 3,
            poi_diameter: 100.0,
            poi_dwell: 30 * 60,
            travel_speed: 10.0,
            sampling_interval: 30,
            seed: 0,
            origin: Location::normalized(45.75, 4.85),
            extent: 20_000.0,
            min_leg: 1_000.0,
            max_leg: 3_000.0,
            start_time: 1_293_840_000,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        ConfigError::check(self.user_count > 0, "user_count", "positive", self.user_count as f64)?;
        ConfigError::check(
            self.poi_diameter.is_finite() && self.poi_diameter >= 0.0,
            "poi_diameter",
            "non-negative",
            self.poi_diameter,
        )?;
        ConfigError::check(
            self.pois_per_trace == 0 || self.poi_dwell >= self.sampling_interval,
            "poi_dwell",
            "at least one sampling interval",
            self.poi_dwell as f64,
        )?;
        ConfigError::check(
            self.travel_speed.is_finite() && self.travel_speed > 0.0,
            "travel_speed",
            "positive",
            self.travel_speed,
        )?;
        ConfigError::check(
            self.sampling_interval >= 1,
            "sampling_interval",
            "at least 1 s",
            self.sampling_interval as f64,
        )?;
        ConfigError::check(
            self.extent.is_finite() && self.extent >= 0.0,
            "extent",
            "non-negative",
            self.extent,
        )?;
        ConfigError::check(
            self.min_leg.is_finite() && self.min_leg > 0.0,
            "min_leg",
            "positive",
            self.min_leg,
        )?;
        ConfigError::check(
            self.max_leg.is_finite() && self.max_leg >= self.min_leg,
            "max_leg",
            "at least min_leg",
            self.max_leg,
        )?;
        Ok(())
    }

    /// Mean number of records per generated trace.
    pub fn expected_records_per_user(&self) -> f64 {
        let legs = (self.pois_per_trace + 1) as f64;
        let travel = legs * (self.min_leg + self.max_leg) / 2.0 / self.travel_speed;
        let stays = (self.pois_per_trace as i64 * self.poi_dwell) as f64;
        (travel + stays) / self.sampling_interval as f64 + 1.0
    }

    pub fn user_id(&self, index: usize) -> UserId {
        let width = self.user_count.saturating_sub(1).to_string().len().max(4);
        UserId::new(format!("u{index:0width$}")).expect("non-empty")
    }
}

enum Segment {
    Travel { from: PlanarPoint, to: PlanarPoint },
    Stay { index: usize, around: LocalPlane },
}

struct Timed {
    start: f64,
    end: f64,
    segment: Segment,
}

fn generate_user(spec: &SyntheticSpec, index: usize) -> (Trace, Vec<Poi>) {
    let user = spec.user_id(index);
    let mut rng = rng::indexed_substream(spec.seed, "synth/user", index as u64);
    let plane = LocalPlane::new(spec.origin);
    let half = spec.extent / 2.0;

    let mut pos = PlanarPoint::new(
        rng.gen_range(-half..=half),
        rng.gen_range(-half..=half),
    );
    let t0 = spec.start_time + rng.gen_range(0..3600);

    let mut schedule = Vec::with_capacity(2 * spec.pois_per_trace + 1);
    let mut clock = 0.0;
    let mut centers = Vec::with_capacity(spec.pois_per_trace);
    for leg in 0..=spec.pois_per_trace {
        let length = rng.gen_range(spec.min_leg..=spec.max_leg);
        let heading = rng.gen_range(0.0..std::f64::consts::TAU);
        let to = PlanarPoint::new(pos.x + length * heading.cos(), pos.y + length * heading.sin());
        let duration = length / spec.travel_speed;
        schedule.push(Timed {
            start: clock,
            end: clock + duration,
            segment: Segment::Travel { from: pos, to },
        });
        clock += duration;
        pos = to;
        if leg < spec.pois_per_trace {
            let dwell = spec.poi_dwell as f64;
            let center = plane.unproject(&pos);
            schedule.push(Timed {
                start: clock,
                end: clock + dwell,
                segment: Segment::Stay {
                    index: centers.len(),
                    around: LocalPlane::new(center),
                },
            });
            centers.push(center);
            clock += dwell;
        }
    }

    let radius = spec.poi_diameter / 2.0;
    let step = spec.sampling_interval;
    let mut fixes = Vec::new();
    // (start, end, record count) per planted stay
    let mut stays: Vec<(Timestamp, Timestamp, usize)> = vec![(0, 0, 0); centers.len()];
    let mut seg = 0;
    let mut elapsed: i64 = 0;
    while elapsed as f64 <= clock {
        let e = elapsed as f64;
        while seg + 1 < schedule.len() && e >= schedule[seg].end {
            seg += 1;
        }
        let time = t0 + elapsed;
        let timed = &schedule[seg];
        let loc = match &timed.segment {
            Segment::Travel { from, to } => {
                let f = ((e - timed.start) / (timed.end - timed.start)).clamp(0.0, 1.0);
                plane.unproject(&PlanarPoint::new(
                    from.x + f * (to.x - from.x),
                    from.y + f * (to.y - from.y),
                ))
            }
            Segment::Stay { index, around } => {
                let r = radius * rng.gen::<f64>().sqrt();
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                let s = &mut stays[*index];
                if s.2 == 0 {
                    s.0 = time;
                }
                s.1 = time;
                s.2 += 1;
                around.unproject(&PlanarPoint::new(r * a.cos(), r * a.sin()))
            }
        };
        fixes.push(Fix::new(loc, time));
        elapsed += step;
    }

    let pois = stays
        .into_iter()
        .zip(centers)
        .map(|((start, end, record_count), center)| Poi {
            user: user.clone(),
            center,
            start,
            end,
            record_count,
        })
        .collect();
    let trace = Trace::new(user, fixes).expect("generated fixes are ordered and non-empty");
    (trace, pois)
}

/// Generates the dataset and the planted stays, keyed by user.
///
/// Users are generated from independent substreams, so the output does not
/// depend on the thread count.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, PoiMap), ConfigError> {
    spec.validate()?;
    let users: Vec<(Trace, Vec<Poi>)> = (0..spec.user_count)
        .into_par_iter()
        .map(|i| generate_user(spec, i))
        .collect();
    let mut truth = BTreeMap::new();
    let mut dataset = Dataset::new();
    for (trace, pois) in users {
        truth.insert(trace.user().clone(), pois);
        dataset.insert(trace).expect("user ids are unique");
    }
    Ok((dataset, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::distance;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            user_count: 5,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let (a, ta) = generate_synthetic(&small()).unwrap();
        let (b, tb) = generate_synthetic(&small()).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (c, _) = generate_synthetic(&SyntheticSpec { seed: 1, ..small() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn no_pois_means_pure_movement() {
        let spec = SyntheticSpec {
            pois_per_trace: 0,
            ..small()
        };
        let (d, truth) = generate_synthetic(&spec).unwrap();
        assert!(truth.values().all(Vec::is_empty));
        assert_eq!(d.trace_count(), 5);
    }

    #[test]
    fn ground_truth_count() {
        let (_, truth) = generate_synthetic(&small()).unwrap();
        assert_eq!(truth.values().map(Vec::len).sum::<usize>(), 15);
    }

    #[test]
    fn stay_records_lie_within_half_diameter() {
        let spec = small();
        let (d, truth) = generate_synthetic(&spec).unwrap();
        for (user, pois) in &truth {
            let trace = d.get(user.as_str()).unwrap();
            for p in pois {
                assert!(p.end - p.start >= spec.poi_dwell - spec.sampling_interval);
                let members: Vec<_> = trace
                    .fixes()
                    .iter()
                    .filter(|f| f.time >= p.start && f.time <= p.end)
                    .collect();
                assert_eq!(members.len(), p.record_count);
                for f in members {
                    assert!(distance(&f.loc, &p.center) <= spec.poi_diameter / 2.0 + 0.01);
                }
            }
        }
    }

    #[test]
    fn travel_samples_are_evenly_spaced() {
        let spec = SyntheticSpec {
            pois_per_trace: 0,
            ..small()
        };
        let (d, _) = generate_synthetic(&spec).unwrap();
        let expected = spec.travel_speed * spec.sampling_interval as f64;
        for t in d.traces() {
            // legs are straight in the plane of `origin`, hence the slack
            for w in t.fixes().windows(2) {
                assert!((distance(&w[0].loc, &w[1].loc) - expected).abs() < 1.0);
                assert_eq!(w[1].time - w[0].time, spec.sampling_interval);
            }
        }
    }

    #[test]
    fn rejects_invalid_spec() {
        assert!(generate_synthetic(&SyntheticSpec { sampling_interval: 0, ..small() }).is_err());
        assert!(generate_synthetic(&SyntheticSpec { travel_speed: 0.0, ..small() }).is_err());
        assert!(generate_synthetic(&SyntheticSpec { poi_diameter: -1.0, ..small() }).is_err());
    }

    #[test]
    fn user_ids_sort_by_index() {
        let spec = SyntheticSpec {
            user_count: 12_345,
            ..small()
        };
        assert!(spec.user_id(9) < spec.user_id(10_000));
        assert_eq!(spec.user_id(7).as_str(), "u00007");
    }
}
