//! Records, traces and datasets.

use std::collections::btree_map::{self, BTreeMap};
use std::fmt;
use std::sync::Arc;

use crate::error::TraceError;
use crate::geo::{self, Location};

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

pub const SECONDS_PER_DAY: i64 = 86_400;

/// Opaque, non-empty user identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(Arc<str>);

impl UserId {
    pub fn new(id: impl AsRef<str>) -> Result<Self, TraceError> {
        let id = id.as_ref();
        if id.is_empty() {
            return Err(TraceError::EmptyUserId);
        }
        Ok(Self(Arc::from(id)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for UserId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for UserId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// A located instant within a trace; the user is carried by the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fix {
    pub loc: Location,
    pub time: Timestamp,
}

impl Fix {
    pub fn new(loc: Location, time: Timestamp) -> Self {
        Self { loc, time }
    }
}

/// The atomic datum: who was where, when.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub user: UserId,
    pub loc: Location,
    pub time: Timestamp,
}

impl Record {
    pub fn new(user: UserId, loc: Location, time: Timestamp) -> Self {
        Self { user, loc, time }
    }
}

/// All records of one logical user, in chronological order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    user: UserId,
    fixes: Vec<Fix>,
}

impl Trace {
    pub fn new(user: UserId, fixes: Vec<Fix>) -> Result<Self, TraceError> {
        if fixes.is_empty() {
            return Err(TraceError::EmptyTrace(user.to_string()));
        }
        if let Some(index) = fixes.windows(2).position(|w| w[1].time < w[0].time) {
            return Err(TraceError::Unordered {
                user: user.to_string(),
                index: index + 1,
            });
        }
        Ok(Self { user, fixes })
    }

    pub fn user(&self) -> &UserId {
        &self.user
    }

    pub fn fixes(&self) -> &[Fix] {
        &self.fixes
    }

    pub fn into_fixes(self) -> Vec<Fix> {
        self.fixes
    }

    pub fn len(&self) -> usize {
        self.fixes.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.fixes.is_empty()
    }

    pub fn first(&self) -> &Fix {
        &self.fixes[0]
    }

    pub fn last(&self) -> &Fix {
        &self.fixes[self.fixes.len() - 1]
    }

    /// Elapsed seconds between the first and last record.
    pub fn duration(&self) -> i64 {
        self.last().time - self.first().time
    }

    /// Sum of distances between consecutive records, in meters.
    pub fn path_length(&self) -> f64 {
        self.fixes
            .windows(2)
            .map(|w| geo::distance(&w[0].loc, &w[1].loc))
            .sum()
    }

    pub fn locations(&self) -> impl Iterator<Item = Location> + '_ {
        self.fixes.iter().map(|f| f.loc)
    }

    pub fn records(&self) -> impl Iterator<Item = Record> + '_ {
        self.fixes
            .iter()
            .map(move |f| Record::new(self.user.clone(), f.loc, f.time))
    }

    pub fn with_user(self, user: UserId) -> Self {
        Self {
            user,
            fixes: self.fixes,
        }
    }
}

/// One trace per user, iterated in user-id order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    traces: BTreeMap<UserId, Trace>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Groups records by user and orders each group by time.
    ///
    /// When several records of a user share a timestamp only the first one
    /// in input order is kept, which also collapses exact duplicates.
    pub fn from_records<I>(records: I) -> Self
    where
        I: IntoIterator<Item = Record>,
    {
        let mut groups: BTreeMap<UserId, Vec<Fix>> = BTreeMap::new();
        for r in records {
            groups
                .entry(r.user)
                .or_default()
                .push(Fix::new(r.loc, r.time));
        }
        let traces = groups
            .into_iter()
            .map(|(user, mut fixes)| {
                // stable: equal timestamps keep input order
                fixes.sort_by_key(|f| f.time);
                fixes.dedup_by_key(|f| f.time);
                let trace = Trace { user: user.clone(), fixes };
                (user, trace)
            })
            .collect();
        Self { traces }
    }

    pub fn from_traces<I>(traces: I) -> Result<Self, TraceError>
    where
        I: IntoIterator<Item = Trace>,
    {
        let mut dataset = Self::new();
        for t in traces {
            dataset.insert(t)?;
        }
        Ok(dataset)
    }

    pub fn insert(&mut self, trace: Trace) -> Result<(), TraceError> {
        match self.traces.entry(trace.user.clone()) {
            btree_map::Entry::Occupied(e) => Err(TraceError::DuplicateUser(e.key().to_string())),
            btree_map::Entry::Vacant(e) => {
                e.insert(trace);
                Ok(())
            }
        }
    }

    /// Total number of records.
    pub fn len(&self) -> usize {
        self.traces.values().map(Trace::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn trace_count(&self) -> usize {
        self.traces.len()
    }

    pub fn get(&self, user: &str) -> Option<&Trace> {
        self.traces.get(user)
    }

    pub fn traces(&self) -> impl ExactSizeIterator<Item = &Trace> + '_ {
        self.traces.values()
    }

    pub fn users(&self) -> impl Iterator<Item = &UserId> + '_ {
        self.traces.keys()
    }

    pub fn into_traces(self) -> impl Iterator<Item = Trace> {
        self.traces.into_values()
    }

    pub fn records(&self) -> impl Iterator<Item = Record> + '_ {
        self.traces.values().flat_map(Trace::records)
    }

    /// Applies `f` to every trace in parallel, keeping non-empty results.
    ///
    /// Output order follows user ids regardless of scheduling, so results are
    /// identical for any thread count.
    pub fn par_map_traces<F>(&self, f: F) -> Dataset
    where
        F: Fn(&Trace) -> Option<Trace> + Sync + Send,
    {
        use rayon::prelude::*;
        let traces: Vec<&Trace> = self.traces.values().collect();
        let mapped: Vec<Option<Trace>> = traces.par_iter().map(|t| f(t)).collect();
        Dataset {
            traces: mapped
                .into_iter()
                .flatten()
                .map(|t| (t.user.clone(), t))
                .collect(),
        }
    }
}

/// Size of a dataset in records.
pub fn dataset_size(d: &Dataset) -> usize {
    d.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(user: &str, time: i64, lat: f64) -> Record {
        Record::new(
            UserId::new(user).unwrap(),
            Location::new(lat, 2.0).unwrap(),
            time,
        )
    }

    #[test]
    fn empty_user_id_rejected() {
        assert_eq!(UserId::new(""), Err(TraceError::EmptyUserId));
    }

    #[test]
    fn trace_rejects_empty_and_unordered() {
        let u = UserId::new("a").unwrap();
        assert!(Trace::new(u.clone(), vec![]).is_err());
        let l = Location::new(0.0, 0.0).unwrap();
        let err = Trace::new(u, vec![Fix::new(l, 5), Fix::new(l, 3)]).unwrap_err();
        assert!(matches!(err, TraceError::Unordered { index: 1, .. }));
    }

    #[test]
    fn sorts_out_of_order_records() {
        let d = Dataset::from_records(vec![rec("u", 30, 1.0), rec("u", 10, 2.0), rec("u", 20, 3.0)]);
        let t = d.get("u").unwrap();
        let times: Vec<_> = t.fixes().iter().map(|f| f.time).collect();
        assert_eq!(times, vec![10, 20, 30]);
    }

    #[test]
    fn collapses_duplicates() {
        let d = Dataset::from_records(vec![rec("u", 10, 1.0), rec("u", 10, 1.0)]);
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn same_time_keeps_first_in_input_order() {
        let d = Dataset::from_records(vec![rec("u", 10, 1.0), rec("u", 5, 0.0), rec("u", 10, 2.0)]);
        let t = d.get("u").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.fixes()[1].loc.lat(), 1.0);
    }

    #[test]
    fn partitions_interleaved_users() {
        let input = vec![
            rec("a", 1, 1.0),
            rec("b", 1, 1.0),
            rec("a", 2, 1.0),
            rec("b", 3, 1.0),
            rec("a", 4, 1.0),
        ];
        let d = Dataset::from_records(input.clone());
        assert_eq!(d.trace_count(), 2);
        assert_eq!(d.get("a").unwrap().len(), 3);
        assert_eq!(d.get("b").unwrap().len(), 2);
        let mut back: Vec<_> = d.records().map(|r| (r.user.to_string(), r.time)).collect();
        let mut expected: Vec<_> = input.iter().map(|r| (r.user.to_string(), r.time)).collect();
        back.sort();
        expected.sort();
        assert_eq!(back, expected);
    }

    #[test]
    fn size_counts_records() {
        assert_eq!(dataset_size(&Dataset::new()), 0);
        let mut recs: Vec<_> = (0..3).map(|i| rec("a", i, 1.0)).collect();
        recs.extend((0..4).map(|i| rec("b", i, 1.0)));
        assert_eq!(dataset_size(&Dataset::from_records(recs)), 7);
    }

    #[test]
    fn duplicate_trace_rejected() {
        let l = Location::new(0.0, 0.0).unwrap();
        let t = Trace::new(UserId::new("a").unwrap(), vec![Fix::new(l, 0)]).unwrap();
        assert!(matches!(
            Dataset::from_traces(vec![t.clone(), t]),
            Err(TraceError::DuplicateUser(_))
        ));
    }
}
