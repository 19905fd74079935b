//! Privacy and utility metrics: POI matching scores, spatial error, range
//! query distortion and compression degree.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{extract_all_pois, AttackConfig, Poi, PoiMap};
use crate::error::{ConfigError, MetricsError};
use crate::geo::{self, LocalPlane, Location};
use crate::model::{Dataset, Timestamp, Trace};
use crate::rng;

// ---------------------------------------------------------------------------
// POI retrieval

/// A protected POI paired with its closest original POI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoiMatch {
    pub original: usize,
    pub protected: usize,
    pub distance: f64,
}

fn canonical_order(pois: &[Poi]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pois.len()).collect();
    idx.sort_by(|&a, &b| {
        let (pa, pb) = (&pois[a], &pois[b]);
        pa.center
            .lat()
            .total_cmp(&pb.center.lat())
            .then(pa.center.lon().total_cmp(&pb.center.lon()))
            .then(pa.start.cmp(&pb.start))
            .then(a.cmp(&b))
    });
    idx
}

/// Pairs each protected POI with the closest original POI, when that
/// distance is at most `ell`. Ties go to the first original POI in
/// (lat, lon, start) order.
pub fn match_pois(original: &[Poi], protected: &[Poi], ell: f64) -> Vec<PoiMatch> {
    let order = canonical_order(original);
    protected
        .iter()
        .enumerate()
        .filter_map(|(j, q)| {
            let mut best: Option<(usize, f64)> = None;
            for &i in &order {
                let d = geo::distance(&original[i].center, &q.center);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((i, d));
                }
            }
            best.filter(|&(_, d)| d <= ell).map(|(i, d)| PoiMatch {
                original: i,
                protected: j,
                distance: d,
            })
        })
        .collect()
}

/// Number of distinct original POIs that were matched.
fn matched_originals(original: &[Poi], protected: &[Poi], ell: f64) -> usize {
    match_pois(original, protected, ell)
        .into_iter()
        .map(|m| m.original)
        .collect::<HashSet<_>>()
        .len()
}

/// Share of original POIs retrieved; `None` when there are none.
pub fn recall(original: &[Poi], protected: &[Poi], ell: f64) -> Option<f64> {
    if original.is_empty() {
        return None;
    }
    Some(matched_originals(original, protected, ell) as f64 / original.len() as f64)
}

/// Share of retrieved POIs that are real; `None` when nothing was retrieved.
pub fn precision(original: &[Poi], protected: &[Poi], ell: f64) -> Option<f64> {
    if protected.is_empty() {
        return None;
    }
    Some(matched_originals(original, protected, ell) as f64 / protected.len() as f64)
}

/// Harmonic mean of precision and recall.
///
/// Zero when exactly one side is empty or when both ratios are zero;
/// `None` when both sides are empty.
pub fn fscore(original: &[Poi], protected: &[Poi], ell: f64) -> Option<f64> {
    match (original.is_empty(), protected.is_empty()) {
        (true, true) => None,
        (true, false) | (false, true) => Some(0.0),
        (false, false) => {
            let m = matched_originals(original, protected, ell) as f64;
            let p = m / protected.len() as f64;
            let r = m / original.len() as f64;
            Some(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) })
        }
    }
}

/// Per-trace scores averaged over the traces where each score is defined.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PoiScores {
    pub fscore: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    /// Traces contributing to the F-score average.
    pub scored_traces: usize,
}

#[derive(Default)]
struct Mean {
    sum: f64,
    n: usize,
}

impl Mean {
    fn add(&mut self, v: Option<f64>) {
        if let Some(v) = v {
            self.sum += v;
            self.n += 1;
        }
    }

    fn get(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

/// Compares POI sets user by user. Every user of `protected` must exist in
/// `original`; original users missing from `protected` count as having
/// retrieved nothing.
pub fn score_pois(original: &PoiMap, protected: &PoiMap, ell: f64) -> Result<PoiScores, MetricsError> {
    if let Some(u) = protected.keys().find(|u| !original.contains_key(*u)) {
        return Err(MetricsError::UnknownUser(u.to_string()));
    }
    let (mut f, mut p, mut r) = (Mean::default(), Mean::default(), Mean::default());
    for (user, orig) in original {
        let prot = protected.get(user).map(Vec::as_slice).unwrap_or(&[]);
        f.add(fscore(orig, prot, ell));
        p.add(precision(orig, prot, ell));
        r.add(recall(orig, prot, ell));
    }
    Ok(PoiScores {
        fscore: f.get(),
        precision: p.get(),
        recall: r.get(),
        scored_traces: f.n,
    })
}

/// Runs the attack on both datasets and scores the protected POIs against
/// the original ones, with matching threshold `ell`.
pub fn dataset_scores(
    original: &Dataset,
    protected: &Dataset,
    attack: &AttackConfig,
    ell: f64,
) -> Result<PoiScores, MetricsError> {
    let orig = extract_all_pois(original, attack);
    let prot = extract_all_pois(protected, attack);
    score_pois(&orig, &prot, ell)
}

/// Mean per-trace F-score, or `None` when no trace has a defined score.
pub fn dataset_fscore(
    original: &Dataset,
    protected: &Dataset,
    attack: &AttackConfig,
    ell: f64,
) -> Result<Option<f64>, MetricsError> {
    Ok(dataset_scores(original, protected, attack, ell)?.fscore)
}

// ---------------------------------------------------------------------------
// Spatial error

fn trace_error_sum(original: &Trace, protected: &Trace) -> f64 {
    protected
        .fixes()
        .iter()
        .map(|f| {
            let plane = LocalPlane::new(f.loc);
            let (foot, _) = geo::closest_on_polyline(&plane, original.locations())
                .expect("traces are non-empty");
            geo::distance(&f.loc, &foot)
        })
        .sum()
}

/// Mean distance, over all protected records, to the original trace of the
/// same user seen as a polyline.
pub fn spatial_error(original: &Dataset, protected: &Dataset) -> Result<f64, MetricsError> {
    let pairs = protected
        .traces()
        .map(|p| {
            original
                .get(p.user().as_str())
                .map(|o| (o, p))
                .ok_or_else(|| MetricsError::UnknownUser(p.user().to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if protected.is_empty() {
        return Err(MetricsError::EmptyProtected);
    }
    let sums: Vec<f64> = pairs.par_iter().map(|(o, p)| trace_error_sum(o, p)).collect();
    Ok(sums.iter().sum::<f64>() / protected.len() as f64)
}

// ---------------------------------------------------------------------------
// Range queries

/// Unique-user count over a square area and a closed time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RangeQuery {
    pub center: Location,
    /// Half of the square's diagonal, in meters.
    pub half_diagonal: f64,
    pub window_start: Timestamp,
    pub window_end: Timestamp,
}

impl RangeQuery {
    pub fn new(
        center: Location,
        half_diagonal: f64,
        window_start: Timestamp,
        window_end: Timestamp,
    ) -> Result<Self, ConfigError> {
        ConfigError::check(
            half_diagonal.is_finite() && half_diagonal > 0.0,
            "half_diagonal",
            "positive",
            half_diagonal,
        )?;
        ConfigError::check(
            window_end > window_start,
            "window_end",
            "after window_start",
            window_end as f64,
        )?;
        Ok(Self {
            center,
            half_diagonal,
            window_start,
            window_end,
        })
    }

    /// Half of the square's side.
    pub fn half_side(&self) -> f64 {
        self.half_diagonal / std::f64::consts::SQRT_2
    }

    pub fn contains_time(&self, t: Timestamp) -> bool {
        (self.window_start..=self.window_end).contains(&t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QueryGenConfig {
    pub count: usize,
    /// Window length bounds, in seconds.
    pub min_duration: i64,
    pub max_duration: i64,
    /// Half-diagonal bounds, in meters.
    pub min_half_diagonal: f64,
    pub max_half_diagonal: f64,
    pub seed: u64,
}

impl Default for QueryGenConfig {
    fn default() -> Self {
        Self {
            count: 1000,
            min_duration: 2 * 3600,
            max_duration: 8 * 3600,
            min_half_diagonal: 500.0,
            max_half_diagonal: 5000.0,
            seed: 0,
        }
    }
}

impl QueryGenConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        ConfigError::check(self.min_duration > 0, "min_duration", "positive", self.min_duration as f64)?;
        ConfigError::check(
            self.max_duration >= self.min_duration,
            "max_duration",
            "at least min_duration",
            self.max_duration as f64,
        )?;
        ConfigError::check(
            self.min_half_diagonal.is_finite() && self.min_half_diagonal > 0.0,
            "min_half_diagonal",
            "positive",
            self.min_half_diagonal,
        )?;
        ConfigError::check(
            self.max_half_diagonal.is_finite() && self.max_half_diagonal >= self.min_half_diagonal,
            "max_half_diagonal",
            "at least min_half_diagonal",
            self.max_half_diagonal,
        )
    }
}

/// Random queries, each centered in space and time on a record drawn
/// uniformly from `original`, so every query matches at least that record.
pub fn generate_queries(original: &Dataset, cfg: &QueryGenConfig) -> Result<Vec<RangeQuery>, MetricsError> {
    cfg.validate()?;
    if original.is_empty() {
        return Err(MetricsError::EmptyOriginal);
    }
    let traces: Vec<&Trace> = original.traces().collect();
    let mut ends = Vec::with_capacity(traces.len());
    let mut total = 0;
    for t in &traces {
        total += t.len();
        ends.push(total);
    }

    let mut rng = rng::indexed_substream(cfg.seed, "queries", 0);
    let mut out = Vec::with_capacity(cfg.count);
    for _ in 0..cfg.count {
        let k = rng.gen_range(0..total);
        let ti = ends.partition_point(|&e| e <= k);
        let offset = k - if ti == 0 { 0 } else { ends[ti - 1] };
        let fix = traces[ti].fixes()[offset];
        let duration = rng.gen_range(cfg.min_duration..=cfg.max_duration);
        let half_diagonal = rng.gen_range(cfg.min_half_diagonal..=cfg.max_half_diagonal);
        let window_start = fix.time - duration / 2;
        out.push(RangeQuery {
            center: fix.loc,
            half_diagonal,
            window_start,
            window_end: window_start + duration,
        });
    }
    Ok(out)
}

fn trace_hits(trace: &Trace, q: &RangeQuery, plane: &LocalPlane, half: f64) -> bool {
    let fixes = trace.fixes();
    let from = fixes.partition_point(|f| f.time < q.window_start);
    fixes[from..]
        .iter()
        .take_while(|f| f.time <= q.window_end)
        .any(|f| {
            let p = plane.project(&f.loc);
            p.x.abs() <= half && p.y.abs() <= half
        })
}

/// Number of distinct users with a record inside the query's square during
/// its window.
pub fn evaluate_query(d: &Dataset, q: &RangeQuery) -> usize {
    let plane = LocalPlane::new(q.center);
    let half = q.half_side();
    d.traces().filter(|t| trace_hits(t, q, &plane, half)).count()
}

/// Mean relative error of the query answers on `protected` versus
/// `original`. Fails if any query has no result on `original`.
pub fn query_distortion(
    original: &Dataset,
    protected: &Dataset,
    queries: &[RangeQuery],
) -> Result<f64, MetricsError> {
    if queries.is_empty() {
        return Ok(0.0);
    }
    let counts: Vec<(usize, usize)> = queries
        .par_iter()
        .map(|q| (evaluate_query(original, q), evaluate_query(protected, q)))
        .collect();
    let mut sum = 0.0;
    for (index, &(a, b)) in counts.iter().enumerate() {
        if a == 0 {
            return Err(MetricsError::ZeroQuery { index });
        }
        sum += (a as f64 - b as f64).abs() / a as f64;
    }
    Ok(sum / queries.len() as f64)
}

// ---------------------------------------------------------------------------
// Compression

/// `|protected| / |original|` in records.
pub fn compression(original: &Dataset, protected: &Dataset) -> Result<f64, MetricsError> {
    if original.is_empty() {
        return Err(MetricsError::EmptyOriginal);
    }
    Ok(protected.len() as f64 / original.len() as f64)
}
