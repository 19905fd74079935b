//! Speed smoothing by time distortion.
//!
//! Each trace is resampled into locations exactly `eps` meters apart along
//! the original path, the first and last samples are dropped, and the
//! remaining samples receive evenly spaced timestamps spanning their original
//! time range. The published trace therefore moves at constant speed and
//! shows no stops, while every location stays on the original path.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::geo::{self, LocalPlane, Location, PlanarPoint};
use crate::model::{Dataset, Fix, Timestamp, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PromesseConfig {
    /// Spacing between published locations, in meters. Should be at least
    /// the diameter of the places to hide.
    pub eps: f64,
}

impl PromesseConfig {
    pub fn new(eps: f64) -> Result<Self, ConfigError> {
        ConfigError::check(
            eps.is_finite() && eps > 0.0,
            "epsilon",
            "a positive number of meters",
            eps,
        )?;
        Ok(Self { eps })
    }
}

/// Exit point of the walk `from -> rest[0] -> rest[1] -> ...` out of the
/// disc of radius `eps` around `from`, as `(index of the segment end vertex,
/// location)`. `None` if the walk never leaves the disc.
fn exit_disc(from: &Location, rest: &[Location], eps: f64) -> Option<(usize, Location)> {
    let plane = LocalPlane::new(*from);
    let mut a = PlanarPoint::ORIGIN;
    for (i, loc) in rest.iter().enumerate() {
        let b = plane.project(loc);
        if b.norm() >= eps {
            // larger root of |a + t(b - a)| = eps; |a| < eps so it lies in (0, 1]
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let qa = dx * dx + dy * dy;
            let qb = 2.0 * (a.x * dx + a.y * dy);
            let qc = a.x * a.x + a.y * a.y - eps * eps;
            let t = ((-qb + (qb * qb - 4.0 * qa * qc).max(0.0).sqrt()) / (2.0 * qa)).clamp(0.0, 1.0);
            let p = PlanarPoint::new(a.x + t * dx, a.y + t * dy);
            return Some((i, geo::at_distance(&plane, &p, eps)));
        }
        a = b;
    }
    None
}

/// Locations `eps` apart (straight-line) along the trace, each stamped with
/// the time of the record that triggered it. The first record seeds the
/// sequence. Each new sample is the first point of the path beyond the
/// previous sample at distance `eps` from it, so samples stay on the path
/// even across corners.
fn sample(trace: &Trace, eps: f64) -> Vec<Fix> {
    let fixes = trace.fixes();
    let mut samples = Vec::with_capacity(fixes.len());
    samples.push(fixes[0]);
    let mut prev = fixes[0].loc;
    // path vertices walked since `prev`
    let mut pending: Vec<Location> = Vec::new();
    for curr in &fixes[1..] {
        pending.push(curr.loc);
        while geo::distance(&curr.loc, &prev) >= eps {
            let (i, next) = exit_disc(&prev, &pending, eps)
                .unwrap_or_else(|| (pending.len() - 1, geo::step_towards(&prev, &curr.loc, eps)));
            pending.drain(..i);
            prev = next;
            samples.push(Fix::new(prev, curr.time));
        }
    }
    samples
}

/// `t_min + round(i * span / intervals)`, exact in integer arithmetic.
fn spread(t_min: Timestamp, span: i64, i: usize, intervals: usize) -> Timestamp {
    let num = i as i128 * span as i128;
    let den = intervals as i128;
    t_min + ((2 * num + den) / (2 * den)) as i64
}

/// Smooths one trace. Returns `None` when fewer than two samples survive
/// endpoint removal, or when the survivors share a single timestamp.
pub fn smooth_speed(trace: &Trace, cfg: &PromesseConfig) -> Option<Trace> {
    let mut samples = sample(trace, cfg.eps);
    if samples.len() < 4 {
        return None;
    }
    samples.pop();
    samples.remove(0);

    let t_min = samples.iter().map(|s| s.time).min()?;
    let t_max = samples.iter().map(|s| s.time).max()?;
    if t_max == t_min {
        return None;
    }
    let intervals = samples.len() - 1;
    let fixes = samples
        .iter()
        .enumerate()
        .map(|(i, s)| Fix::new(s.loc, spread(t_min, t_max - t_min, i, intervals)))
        .collect();
    Some(Trace::new(trace.user().clone(), fixes).expect("timestamps are increasing"))
}

/// Applies [`smooth_speed`] to every trace; unprotectable traces are
/// dropped. Deterministic and independent of the thread count.
pub fn promesse(d: &Dataset, cfg: &PromesseConfig) -> Dataset {
    d.par_map_traces(|t| smooth_speed(t, cfg))
}

/// Number of samples the resampling step would produce, before endpoint
/// removal. Useful to size outputs without materializing them.
pub fn sample_count(trace: &Trace, eps: f64) -> usize {
    sample(trace, eps).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{distance, unproject};
    use crate::model::UserId;

    fn origin() -> Location {
        Location::new(48.0, 2.0).unwrap()
    }

    fn trace(points: &[(f64, f64, i64)]) -> Trace {
        let fixes = points
            .iter()
            .map(|&(x, y, t)| Fix::new(unproject(&origin(), &PlanarPoint::new(x, y)), t))
            .collect();
        Trace::new(UserId::new("u").unwrap(), fixes).unwrap()
    }

    #[test]
    fn straight_line_walkthrough() {
        // 11 records, 100 m and 60 s apart, eps = 100
        let pts: Vec<_> = (0..=10).map(|i| (100.0 * i as f64, 0.0, 60 * i as i64)).collect();
        let t = trace(&pts);
        let raw = sample(&t, 100.0);
        // planar and haversine metrics differ by a hair; samples land within
        // a few mm of the records either way
        assert!(raw.len() == 11 || raw.len() == 10, "{}", raw.len());

        let out = smooth_speed(&t, &PromesseConfig::new(100.0).unwrap()).unwrap();
        let n = out.len();
        assert_eq!(n, raw.len() - 2);
        let x: Vec<f64> = out
            .fixes()
            .iter()
            .map(|f| crate::geo::project(&origin(), &f.loc).x)
            .collect();
        for (i, xi) in x.iter().enumerate() {
            assert!((xi - 100.0 * (i + 1) as f64).abs() < 0.1, "{i}: {xi}");
        }
        let t_min = out.first().time;
        let t_max = out.last().time;
        assert_eq!(t_min, raw[1].time);
        assert_eq!(t_max, raw[raw.len() - 2].time);
        for w in out.fixes().windows(2) {
            let dt = w[1].time - w[0].time;
            let ideal = (t_max - t_min) as f64 / (n - 1) as f64;
            assert!((dt as f64 - ideal).abs() <= 1.0);
        }
    }

    #[test]
    fn straight_line_hand_walk() {
        // records at 0, 100.5, ..., so every step is strictly inside a segment
        let pts: Vec<_> = (0..=10).map(|i| (100.5 * i as f64, 0.0, 60 * i as i64)).collect();
        let out = smooth_speed(&trace(&pts), &PromesseConfig::new(100.0).unwrap()).unwrap();
        // 1005 m path: samples at 0, 100, ..., 1000 -> 11; minus endpoints -> 9
        assert_eq!(out.len(), 9);
        // sample at k*100 m is triggered by the record at index ceil(k*100/100.5)
        let trig = |k: usize| 60 * ((k as f64 * 100.0 / 100.5).ceil() as i64);
        assert_eq!(out.first().time, trig(1));
        assert_eq!(out.last().time, trig(9));
        let span = trig(9) - trig(1);
        for (i, f) in out.fixes().iter().enumerate() {
            let expected = trig(1) as f64 + i as f64 * span as f64 / 8.0;
            assert!((f.time as f64 - expected).abs() <= 0.5);
        }
    }

    #[test]
    fn stationary_user_is_not_protectable() {
        let pts: Vec<_> = (0..50)
            .map(|i| ((i % 5) as f64 * 10.0, (i % 3) as f64 * 10.0, 30 * i as i64))
            .collect();
        assert!(smooth_speed(&trace(&pts), &PromesseConfig::new(100.0).unwrap()).is_none());
    }

    #[test]
    fn three_samples_are_discarded() {
        // 250 m path with eps 100: samples at 0, 100, 200 -> one left after blur
        let pts = [(0.0, 0.0, 0), (250.0, 0.0, 600)];
        assert_eq!(sample_count(&trace(&pts), 100.0), 3);
        assert!(smooth_speed(&trace(&pts), &PromesseConfig::new(100.0).unwrap()).is_none());
    }

    #[test]
    fn zero_retained_duration_is_discarded() {
        // a single long jump: all samples share the jump's timestamp
        let pts = [(0.0, 0.0, 0), (1000.0, 0.0, 60)];
        assert!(smooth_speed(&trace(&pts), &PromesseConfig::new(100.0).unwrap()).is_none());
    }

    #[test]
    fn output_stays_on_path_with_constant_spacing() {
        let pts = [
            (0.0, 0.0, 0),
            (400.0, 30.0, 100),
            (420.0, 500.0, 250),
            (-100.0, 700.0, 400),
            (-150.0, 200.0, 700),
        ];
        let t = trace(&pts);
        let eps = 75.0;
        let out = smooth_speed(&t, &PromesseConfig::new(eps).unwrap()).unwrap();
        let line: Vec<Location> = t.locations().collect();
        for f in out.fixes() {
            let (_, d) = crate::geo::project_onto_polyline(&f.loc, &line).unwrap();
            assert!(d < 0.5, "{d}");
        }
        for w in out.fixes().windows(2) {
            assert!((distance(&w[0].loc, &w[1].loc) - eps).abs() < 0.1);
        }
    }

    #[test]
    fn spread_rounds_to_nearest() {
        assert_eq!(spread(0, 10, 1, 3), 3);
        assert_eq!(spread(0, 10, 2, 3), 7);
        assert_eq!(spread(100, 10, 3, 3), 110);
        assert_eq!(spread(0, i64::MAX / 2, 7, 7), i64::MAX / 2);
    }

    #[test]
    fn deterministic_and_drops_empty() {
        let moving = trace(&(0..30).map(|i| (50.0 * i as f64, 0.0, 30 * i as i64)).collect::<Vec<_>>());
        let still = Trace::new(UserId::new("v").unwrap(), vec![Fix::new(origin(), 0)]).unwrap();
        let d = Dataset::from_traces([moving, still]).unwrap();
        let cfg = PromesseConfig::new(100.0).unwrap();
        let a = promesse(&d, &cfg);
        assert_eq!(a, promesse(&d, &cfg));
        assert_eq!(a.trace_count(), 1);
        assert!(a.get("v").is_none());
    }

    #[test]
    fn config_rejects_non_positive() {
        assert!(PromesseConfig::new(0.0).is_err());
        assert!(PromesseConfig::new(-5.0).is_err());
        assert!(PromesseConfig::new(f64::NAN).is_err());
    }
}
