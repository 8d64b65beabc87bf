//! Event logs, traces and variants.
//!
//! A trace is the chronologically ordered list of events recorded for one
//! case. Projecting a trace onto its activity labels gives its variant. An
//! [`EventLog`] keeps every trace (it is a multiset), the [`VariantLog`] keeps
//! one variant per trace, and the [`UniqueVariantLog`] keeps each distinct
//! variant once in first-occurrence order.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use chrono::{DateTime, Duration, NaiveDateTime, TimeZone, Utc};
use indexmap::IndexSet;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An activity label. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Activity(Arc<str>);

impl Activity {
    pub fn new(label: impl AsRef<str>) -> Result<Self> {
        let label = label.as_ref();
        if label.is_empty() {
            return Err(Error::invalid("activity label must be non-empty"));
        }
        Ok(Activity(Arc::from(label)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Activity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Activity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Activity::new(s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventInstance {
    pub activity: Activity,
    pub timestamp: DateTime<Utc>,
}

/// A non-empty, strictly time-ordered sequence of events of one case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    case_id: String,
    events: Vec<EventInstance>,
}

impl Trace {
    pub fn new(case_id: impl Into<String>, events: Vec<EventInstance>) -> Result<Self> {
        let case_id = case_id.into();
        if events.is_empty() {
            return Err(Error::invalid(format!("trace {case_id} is empty")));
        }
        if let Some(w) = events.windows(2).find(|w| w[0].timestamp >= w[1].timestamp) {
            return Err(Error::invalid(format!(
                "trace {case_id}: timestamps not strictly increasing at {}",
                w[1].timestamp
            )));
        }
        Ok(Trace { case_id, events })
    }

    pub fn case_id(&self) -> &str {
        &self.case_id
    }

    pub fn events(&self) -> &[EventInstance] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// A non-empty sequence of activity labels.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Activity>", into = "Vec<Activity>")]
pub struct Variant(Vec<Activity>);

impl Variant {
    pub fn new(labels: Vec<Activity>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("variant must be non-empty"));
        }
        Ok(Variant(labels))
    }

    /// Builds a variant from plain strings.
    pub fn from_labels<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let labels = labels
            .into_iter()
            .map(Activity::new)
            .collect::<Result<Vec<_>>>()?;
        Variant::new(labels)
    }

    pub fn labels(&self) -> &[Activity] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<Activity>> for Variant {
    type Error = Error;
    fn try_from(v: Vec<Activity>) -> Result<Self> {
        Variant::new(v)
    }
}

impl From<Variant> for Vec<Activity> {
    fn from(v: Variant) -> Self {
        v.0
    }
}

impl fmt::Debug for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "⟩")
    }
}

/// Shorthand for tests and examples: `variant!["a", "b"]`.
#[macro_export]
macro_rules! variant {
    ($($l:expr),+ $(,)?) => {
        $crate::log::Variant::from_labels([$($l),+]).expect("non-empty literal variant")
    };
}

/// Recorded traces; duplicates are kept.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    traces: Vec<Trace>,
}

impl EventLog {
    pub fn new(traces: Vec<Trace>) -> Self {
        EventLog { traces }
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Distinct activities in order of first appearance.
    pub fn alphabet(&self) -> Vec<Activity> {
        let mut seen = IndexSet::new();
        for t in &self.traces {
            for e in &t.events {
                seen.insert(e.activity.clone());
            }
        }
        seen.into_iter().collect()
    }
}

/// One variant per trace of the source log.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VariantLog {
    variants: Vec<Variant>,
}

impl VariantLog {
    pub fn new(variants: Vec<Variant>) -> Self {
        VariantLog { variants }
    }

    pub fn variants(&self) -> &[Variant] {
        &self.variants
    }

    pub fn len(&self) -> usize {
        self.variants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variants.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Variant> {
        self.variants.iter()
    }
}

impl FromIterator<Variant> for VariantLog {
    fn from_iter<I: IntoIterator<Item = Variant>>(iter: I) -> Self {
        VariantLog::new(iter.into_iter().collect())
    }
}

/// Distinct variants, kept in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UniqueVariantLog {
    variants: IndexSet<Variant>,
}

impl UniqueVariantLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `true` if the variant was not present yet.
    pub fn insert(&mut self, v: Variant) -> bool {
        self.variants.insert(v)
    }

    pub fn contains(&self, v: &Variant) -> bool {
        self.variants.contains(v)
    }

    pub fn len(&self) -> usize {
        self.variants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variants.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &Variant> {
        self.variants.iter()
    }

    pub fn get(&self, idx: usize) -> Option<&Variant> {
        self.variants.get_index(idx)
    }

    pub fn as_set(&self) -> &IndexSet<Variant> {
        &self.variants
    }

    pub fn to_vec(&self) -> Vec<Variant> {
        self.variants.iter().cloned().collect()
    }

    /// Longest variant length; 0 when empty.
    pub fn max_len(&self) -> usize {
        self.variants.iter().map(Variant::len).max().unwrap_or(0)
    }

    /// Distinct activities in order of first appearance.
    pub fn alphabet(&self) -> Vec<Activity> {
        let mut seen = IndexSet::new();
        for v in &self.variants {
            for a in v.labels() {
                seen.insert(a.clone());
            }
        }
        seen.into_iter().collect()
    }

    /// Each distinct variant once, as a variant log.
    pub fn to_variant_log(&self) -> VariantLog {
        VariantLog::new(self.to_vec())
    }
}

impl FromIterator<Variant> for UniqueVariantLog {
    fn from_iter<I: IntoIterator<Item = Variant>>(iter: I) -> Self {
        UniqueVariantLog {
            variants: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a UniqueVariantLog {
    type Item = &'a Variant;
    type IntoIter = indexmap::set::Iter<'a, Variant>;
    fn into_iter(self) -> Self::IntoIter {
        self.variants.iter()
    }
}

/// Read-only view over a collection of distinct variants.
pub trait VariantSet {
    fn contains_variant(&self, v: &Variant) -> bool;
    fn size(&self) -> usize;
    fn variants_iter(&self) -> Box<dyn Iterator<Item = &Variant> + '_>;
}

impl VariantSet for UniqueVariantLog {
    fn contains_variant(&self, v: &Variant) -> bool {
        self.contains(v)
    }
    fn size(&self) -> usize {
        self.len()
    }
    fn variants_iter(&self) -> Box<dyn Iterator<Item = &Variant> + '_> {
        Box::new(self.iter())
    }
}

impl VariantSet for std::collections::BTreeSet<Variant> {
    fn contains_variant(&self, v: &Variant) -> bool {
        self.contains(v)
    }
    fn size(&self) -> usize {
        self.len()
    }
    fn variants_iter(&self) -> Box<dyn Iterator<Item = &Variant> + '_> {
        Box::new(self.iter())
    }
}

impl<S: std::hash::BuildHasher> VariantSet for std::collections::HashSet<Variant, S> {
    fn contains_variant(&self, v: &Variant) -> bool {
        self.contains(v)
    }
    fn size(&self) -> usize {
        self.len()
    }
    fn variants_iter(&self) -> Box<dyn Iterator<Item = &Variant> + '_> {
        Box::new(self.iter())
    }
}

impl<S: std::hash::BuildHasher> VariantSet for IndexSet<Variant, S> {
    fn contains_variant(&self, v: &Variant) -> bool {
        self.contains(v)
    }
    fn size(&self) -> usize {
        self.len()
    }
    fn variants_iter(&self) -> Box<dyn Iterator<Item = &Variant> + '_> {
        Box::new(self.iter())
    }
}

/// `|a ∩ b|`, probing the larger set with the smaller one.
pub fn intersection_count(a: &dyn VariantSet, b: &dyn VariantSet) -> usize {
    let (small, large) = if a.size() <= b.size() { (a, b) } else { (b, a) };
    small.variants_iter().filter(|v| large.contains_variant(v)).count()
}

pub fn variant_of(trace: &Trace) -> Result<Variant> {
    Variant::new(trace.events.iter().map(|e| e.activity.clone()).collect())
}

/// Longest trace length in the log.
pub fn max_trace_len(log: &EventLog) -> Result<usize> {
    log.traces
        .iter()
        .map(Trace::len)
        .max()
        .ok_or_else(|| Error::invalid("empty event log"))
}

pub fn build_variant_logs(log: &EventLog) -> Result<(VariantLog, UniqueVariantLog)> {
    if log.is_empty() {
        return Err(Error::invalid("empty event log"));
    }
    let lstar: VariantLog = log
        .traces
        .iter()
        .map(variant_of)
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();
    let lplus = lstar.iter().cloned().collect();
    Ok((lstar, lplus))
}

/// Rounds `x` down, ignoring floating-point noise just below an integer.
pub(crate) fn floor_tol(x: f64) -> usize {
    (x + 1e-9).floor() as usize
}

/// Rounds `x` up, ignoring floating-point noise just above an integer.
pub(crate) fn ceil_tol(x: f64) -> usize {
    (x - 1e-9).ceil() as usize
}

/// Randomly partitions `lplus` into a train part of `ceil(fraction·n)`
/// variants and a holdout part. Both keep the input order.
///
/// The holdout side always keeps at least one variant.
pub fn split_holdout(
    lplus: &UniqueVariantLog,
    fraction: f64,
    seed: u64,
) -> Result<(UniqueVariantLog, UniqueVariantLog)> {
    let n = lplus.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "holdout split needs at least 2 variants, got {n}"
        )));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!(
            "holdout fraction must lie in (0,1), got {fraction}"
        )));
    }
    let n_train = ceil_tol(fraction * n as f64).clamp(1, n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut in_train = vec![false; n];
    for &i in &idx[..n_train] {
        in_train[i] = true;
    }
    let mut train = UniqueVariantLog::new();
    let mut holdout = UniqueVariantLog::new();
    for (v, keep) in lplus.iter().zip(in_train) {
        if keep {
            train.insert(v.clone());
        } else {
            holdout.insert(v.clone());
        }
    }
    Ok((train, holdout))
}

/// Fixed origin for synthetic timestamps.
pub fn synthetic_epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2000, 1, 1, 0, 0, 0).unwrap()
}

/// Builds a log with exactly one trace per variant. Case order is a
/// seeded shuffle; events are one second apart from a fixed epoch.
pub fn synth_event_log<'a, I>(variants: I, seed: u64) -> Result<EventLog>
where
    I: IntoIterator<Item = &'a Variant>,
{
    let mut distinct: IndexSet<&Variant> = variants.into_iter().collect();
    if distinct.is_empty() {
        return Err(Error::invalid("cannot synthesize a log from no variants"));
    }
    let mut order: Vec<&Variant> = distinct.drain(..).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let epoch = synthetic_epoch();
    let width = order.len().to_string().len();
    let traces = order
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let events = v
                .labels()
                .iter()
                .enumerate()
                .map(|(j, a)| EventInstance {
                    activity: a.clone(),
                    timestamp: epoch + Duration::seconds(j as i64),
                })
                .collect();
            Trace::new(format!("case_{:0width$}", i + 1), events)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EventLog::new(traces))
}

// ---------------------------------------------------------------------------
// CSV event logs

#[derive(Debug, Deserialize, Serialize)]
struct CsvRow {
    case_id: String,
    activity: String,
    timestamp: String,
}

fn parse_timestamp(raw: &str) -> Result<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Ok(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Ok(Utc.from_utc_datetime(&t));
        }
    }
    Err(Error::Format {
        what: "timestamp",
        detail: format!("{raw:?} is not ISO-8601"),
    })
}

/// Reads a `case_id,activity,timestamp` CSV. Rows may come in any order;
/// traces are sorted by case id and events by timestamp.
pub fn read_csv_log<R: std::io::Read>(reader: R) -> Result<EventLog> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    for required in ["case_id", "activity", "timestamp"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::Format {
                what: "event log CSV",
                detail: format!("missing column {required:?}"),
            });
        }
    }
    let mut cases: BTreeMap<String, Vec<EventInstance>> = BTreeMap::new();
    for (line, row) in rdr.deserialize::<CsvRow>().enumerate() {
        let row = row?;
        let timestamp = parse_timestamp(&row.timestamp).map_err(|e| e.at(format!("row {}", line + 2)))?;
        cases.entry(row.case_id).or_default().push(EventInstance {
            activity: Activity::new(&row.activity)?,
            timestamp,
        });
    }
    let traces = cases
        .into_iter()
        .map(|(case, mut events)| {
            events.sort_by_key(|e| e.timestamp);
            Trace::new(case, events)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EventLog::new(traces))
}

pub fn write_csv_log<W: Write>(log: &EventLog, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for t in &log.traces {
        for e in &t.events {
            wtr.serialize(CsvRow {
                case_id: t.case_id.clone(),
                activity: e.activity.to_string(),
                timestamp: e.timestamp.format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string(),
            })?;
        }
    }
    wtr.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Variant TSV: one variant per line, labels separated by TAB.

pub fn read_variants<R: BufRead>(reader: R) -> Result<Vec<Variant>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let v = Variant::from_labels(line.split('\t')).map_err(|e| e.at(format!("line {}", i + 1)))?;
        out.push(v);
    }
    Ok(out)
}

pub fn write_variants<'a, W, I>(variants: I, mut writer: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a Variant>,
{
    for v in variants {
        for (i, a) in v.labels().iter().enumerate() {
            if a.as_str().contains(['\t', '\n', '\r']) {
                return Err(Error::Format {
                    what: "variant TSV",
                    detail: format!("label {:?} contains a tab or newline", a.as_str()),
                });
            }
            if i > 0 {
                writer.write_all(b"\t")?;
            }
            writer.write_all(a.as_str().as_bytes())?;
        }
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Serializes variants to a TSV string.
pub fn variants_to_tsv<'a, I>(variants: I) -> Result<String>
where
    I: IntoIterator<Item = &'a Variant>,
{
    let mut buf = Vec::new();
    write_variants(variants, &mut buf)?;
    Ok(String::from_utf8(buf).expect("labels are UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(a: &str, secs: i64) -> EventInstance {
        EventInstance {
            activity: Activity::new(a).unwrap(),
            timestamp: synthetic_epoch() + Duration::seconds(secs),
        }
    }

    fn trace(case: &str, labels: &[&str]) -> Trace {
        let events = labels.iter().enumerate().map(|(i, a)| ev(a, i as i64)).collect();
        Trace::new(case, events).unwrap()
    }

    #[test]
    fn variant_projection() {
        assert_eq!(variant_of(&trace("1", &["a", "b"])).unwrap(), variant!["a", "b"]);
        assert_eq!(variant_of(&trace("1", &["a"])).unwrap(), variant!["a"]);
        assert_eq!(
            variant_of(&trace("1", &["a", "a", "b"])).unwrap(),
            variant!["a", "a", "b"]
        );
    }

    #[test]
    fn trace_invariants_rejected() {
        assert!(Trace::new("x", vec![]).is_err());
        assert!(Trace::new("x", vec![ev("a", 1), ev("b", 1)]).is_err());
        assert!(Trace::new("x", vec![ev("a", 2), ev("b", 1)]).is_err());
        assert!(Activity::new("").is_err());
    }

    #[test]
    fn max_len() {
        let log = EventLog::new(vec![trace("1", &["a", "b", "c"])]);
        assert_eq!(max_trace_len(&log).unwrap(), 3);
        let log = EventLog::new(vec![
            trace("1", &["a", "b"]),
            trace("2", &["a", "b", "c", "d", "e", "f", "g"]),
        ]);
        assert_eq!(max_trace_len(&log).unwrap(), 7);
        assert!(max_trace_len(&EventLog::default()).is_err());
    }

    #[test]
    fn variant_logs_keep_first_occurrence_order() {
        let log = EventLog::new(vec![
            trace("1", &["a", "b"]),
            trace("2", &["a", "b"]),
            trace("3", &["a", "c"]),
        ]);
        let (lstar, lplus) = build_variant_logs(&log).unwrap();
        assert_eq!(lstar.len(), 3);
        assert_eq!(lplus.to_vec(), vec![variant!["a", "b"], variant!["a", "c"]]);

        let same = EventLog::new((0..6).map(|i| trace(&i.to_string(), &["x"])).collect());
        assert_eq!(build_variant_logs(&same).unwrap().1.len(), 1);
        assert!(build_variant_logs(&EventLog::default()).is_err());
    }

    fn numbered(n: usize) -> UniqueVariantLog {
        (0..n).map(|i| variant![format!("a{i}")]).collect()
    }

    #[test]
    fn holdout_sizes() {
        let (t, h) = split_holdout(&numbered(10), 0.9, 1).unwrap();
        assert_eq!((t.len(), h.len()), (9, 1));
        let (t, h) = split_holdout(&numbered(124), 0.9, 1).unwrap();
        assert_eq!((t.len(), h.len()), (112, 12));
        // ceil(1.8) = 2 would leave nothing held out
        let (t, h) = split_holdout(&numbered(2), 0.9, 1).unwrap();
        assert_eq!((t.len(), h.len()), (1, 1));
    }

    #[test]
    fn holdout_deterministic_and_validated() {
        let l = numbered(30);
        assert_eq!(split_holdout(&l, 0.9, 5).unwrap(), split_holdout(&l, 0.9, 5).unwrap());
        assert!(split_holdout(&numbered(1), 0.9, 0).is_err());
        assert!(split_holdout(&l, 1.0, 0).is_err());
        assert!(split_holdout(&l, 0.0, 0).is_err());
    }

    #[test]
    fn synth_log_round_trip() {
        let single = vec![variant!["a"]];
        let log = synth_event_log(&single, 0).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log.traces()[0].len(), 1);

        let set = vec![variant!["a", "b"], variant!["a", "c"]];
        let log = synth_event_log(&set, 3).unwrap();
        assert_eq!(log.len(), 2);
        let (_, lplus) = build_variant_logs(&log).unwrap();
        let mut got = lplus.to_vec();
        got.sort();
        assert_eq!(got, set);
        assert!(synth_event_log(&Vec::<Variant>::new(), 0).is_err());

        let many: Vec<Variant> = (0..178).map(|i| variant![format!("x{i}")]).collect();
        assert_eq!(synth_event_log(&many, 9).unwrap().len(), 178);
    }

    #[test]
    fn csv_round_trip_and_sorting() {
        let raw = "case_id,activity,timestamp\n\
                   c2,b,2020-01-01T00:00:02Z\n\
                   c1,b,2020-01-01T00:00:05.250Z\n\
                   c2,a,2020-01-01T00:00:01Z\n\
                   c1,a,2020-01-01T00:00:01\n";
        let log = read_csv_log(raw.as_bytes()).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log.traces()[0].case_id(), "c1");
        assert_eq!(variant_of(&log.traces()[1]).unwrap(), variant!["a", "b"]);

        let mut buf = Vec::new();
        write_csv_log(&log, &mut buf).unwrap();
        let again = read_csv_log(buf.as_slice()).unwrap();
        assert_eq!(again, log);
    }

    #[test]
    fn csv_bad_timestamp_is_an_error() {
        let raw = "case_id,activity,timestamp\nc1,a,yesterday\n";
        assert!(read_csv_log(raw.as_bytes()).is_err());
        let dup = "case_id,activity,timestamp\nc1,a,2020-01-01T00:00:01Z\nc1,b,2020-01-01T00:00:01Z\n";
        assert!(read_csv_log(dup.as_bytes()).is_err());
        assert!(read_csv_log("case,activity\n".as_bytes()).is_err());
    }

    #[test]
    fn tsv_round_trip() {
        let vs = vec![variant!["a", "b c"], variant!["ä"]];
        let s = variants_to_tsv(&vs).unwrap();
        assert_eq!(s, "a\tb c\nä\n");
        assert_eq!(read_variants(s.as_bytes()).unwrap(), vs);
    }
}
