//! Dataset preparation: empty-day removal, start-day alignment, duration
//! truncation and temporal gap splitting into virtual users.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::model::{Dataset, Fix, Trace, UserId, SECONDS_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PreprocessConfig {
    /// Longest tolerated silence inside a trace, in seconds.
    pub max_gap: i64,
    /// Number of days kept from the start of each trace.
    pub days: i64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            max_gap: 4 * 3600,
            days: 20,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        ConfigError::check(self.max_gap >= 0, "max_gap", "non-negative", self.max_gap as f64)?;
        ConfigError::check(self.days >= 1, "days", "at least 1", self.days as f64)
    }
}

#[inline]
fn day_of(time: i64) -> i64 {
    time.div_euclid(SECONDS_PER_DAY)
}

fn rebuild(user: &UserId, fixes: Vec<Fix>) -> Trace {
    Trace::new(user.clone(), fixes).expect("time order and non-emptiness preserved")
}

/// Cuts every trace where two consecutive records are more than `max_gap`
/// seconds apart. Part `k` of user `u` becomes virtual user `u-k`.
///
/// The text after the last `-` of a virtual id is always the part number, so
/// distinct `(u, k)` pairs never collide.
pub fn split_on_gaps(d: &Dataset, max_gap: i64) -> Dataset {
    let mut out = Dataset::new();
    for trace in d.traces() {
        let fixes = trace.fixes();
        let mut part = 0;
        let mut begin = 0;
        for i in 1..=fixes.len() {
            if i == fixes.len() || fixes[i].time - fixes[i - 1].time > max_gap {
                let user = UserId::new(format!("{}-{}", trace.user(), part)).expect("non-empty");
                out.insert(rebuild(&user, fixes[begin..i].to_vec()))
                    .expect("virtual ids are unique");
                part += 1;
                begin = i;
            }
        }
    }
    out
}

/// Keeps, per trace, the records in `[first, first + days * 86400)`.
pub fn truncate_days(d: &Dataset, days: i64) -> Dataset {
    let window = days.max(1) * SECONDS_PER_DAY;
    d.par_map_traces(|t| {
        let cutoff = t.first().time + window;
        let kept: Vec<Fix> = t.fixes().iter().take_while(|f| f.time < cutoff).copied().collect();
        Some(rebuild(t.user(), kept))
    })
}

/// Shifts every trace by whole days so that all of them start on the
/// earliest UTC day of the dataset.
pub fn align_start_day(d: &Dataset) -> Dataset {
    let Some(earliest) = d.traces().map(|t| day_of(t.first().time)).min() else {
        return d.clone();
    };
    d.par_map_traces(|t| {
        let shift = (day_of(t.first().time) - earliest) * SECONDS_PER_DAY;
        let fixes = t
            .fixes()
            .iter()
            .map(|f| Fix::new(f.loc, f.time - shift))
            .collect();
        Some(rebuild(t.user(), fixes))
    })
}

/// Removes calendar days without records by pulling later records back,
/// preserving their time of day.
pub fn drop_empty_days(d: &Dataset) -> Dataset {
    d.par_map_traces(|t| {
        let first_day = day_of(t.first().time);
        let mut distinct = 0;
        let mut last_day = None;
        let fixes = t
            .fixes()
            .iter()
            .map(|f| {
                let day = day_of(f.time);
                if last_day != Some(day) {
                    if last_day.is_some() {
                        distinct += 1;
                    }
                    last_day = Some(day);
                }
                let missing = day - first_day - distinct;
                Fix::new(f.loc, f.time - missing * SECONDS_PER_DAY)
            })
            .collect();
        Some(rebuild(t.user(), fixes))
    })
}

/// Full preparation pipeline, in the order: drop empty days, align start
/// day, truncate, split on gaps.
pub fn preprocess(d: &Dataset, cfg: &PreprocessConfig) -> Result<Dataset, ConfigError> {
    cfg.validate()?;
    let d = drop_empty_days(d);
    let d = align_start_day(&d);
    let d = truncate_days(&d, cfg.days);
    Ok(split_on_gaps(&d, cfg.max_gap))
}
