//! Telemetry ingestion, cohort filtering and sampling, and the per-cluster
//! report tables (player characteristics and cumulative churn).
//!
//! Input files are CSV with a required header:
//!
//! * activity: `subject_id,date,time_played_s,sessions,actions,purchase`
//! * attributes: `subject_id,install_date,level_at_start,is_paying_user_at_start,last_activity_date`
//!
//! Dates are ISO-8601 (`YYYY-MM-DD`); booleans are `0`/`1`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use chrono::{Duration, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::series::{SeriesSet, SubjectId, TimeSeries, VariableKind};

pub const ACTIVITY_HEADER: [&str; 6] = [
    "subject_id",
    "date",
    "time_played_s",
    "sessions",
    "actions",
    "purchase",
];

pub const ATTRIBUTES_HEADER: [&str; 5] = [
    "subject_id",
    "install_date",
    "level_at_start",
    "is_paying_user_at_start",
    "last_activity_date",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityRecord {
    pub subject_id: SubjectId,
    pub date: NaiveDate,
    pub time_played: f64,
    pub sessions: f64,
    pub actions: f64,
    pub purchase: f64,
}

impl ActivityRecord {
    pub fn value(&self, kind: VariableKind) -> f64 {
        match kind {
            VariableKind::Time => self.time_played,
            VariableKind::Sessions => self.sessions,
            VariableKind::Actions => self.actions,
            VariableKind::Purchase => self.purchase,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectAttributes {
    pub subject_id: SubjectId,
    pub install_date: NaiveDate,
    pub level_at_start: u32,
    pub is_paying_user_at_start: bool,
    pub last_activity_date: NaiveDate,
}

/// Indexed, immutable telemetry: daily activity and per-subject attributes.
#[derive(Debug, Clone, Default)]
pub struct TelemetryStore {
    activity: BTreeMap<SubjectId, BTreeMap<NaiveDate, ActivityRecord>>,
    attributes: BTreeMap<SubjectId, SubjectAttributes>,
}

impl TelemetryStore {
    pub fn from_records(
        activity: impl IntoIterator<Item = ActivityRecord>,
        attributes: impl IntoIterator<Item = SubjectAttributes>,
    ) -> Result<Self> {
        let mut store = TelemetryStore::default();
        for rec in activity {
            store.insert_activity(rec)?;
        }
        for attr in attributes {
            if store.attributes.contains_key(&attr.subject_id) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate attributes for subject {}",
                    attr.subject_id
                )));
            }
            store.attributes.insert(attr.subject_id.clone(), attr);
        }
        Ok(store)
    }

    fn insert_activity(&mut self, rec: ActivityRecord) -> Result<()> {
        let days = self.activity.entry(rec.subject_id.clone()).or_default();
        if days.contains_key(&rec.date) {
            return Err(Error::DuplicateRecord {
                subject: rec.subject_id.to_string(),
                date: rec.date,
            });
        }
        days.insert(rec.date, rec);
        Ok(())
    }

    pub fn subject_count(&self) -> usize {
        let mut ids: Vec<&SubjectId> = self.activity.keys().collect();
        ids.extend(self.attributes.keys());
        ids.sort();
        ids.dedup();
        ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activity.is_empty() && self.attributes.is_empty()
    }

    pub fn activity(&self, subject: &SubjectId, date: NaiveDate) -> Option<&ActivityRecord> {
        self.activity.get(subject)?.get(&date)
    }

    pub fn attributes(&self) -> &BTreeMap<SubjectId, SubjectAttributes> {
        &self.attributes
    }

    pub fn subject_activity(&self, subject: &SubjectId) -> Option<&BTreeMap<NaiveDate, ActivityRecord>> {
        self.activity.get(subject)
    }
}

fn parse_date(s: &str, line: u64, field: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|e| Error::parse(line, format!("{field}: bad date `{s}`: {e}")))
}

fn parse_amount(s: &str, line: u64, field: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::parse(line, format!("{field}: bad number `{s}`")))?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::parse(line, format!("{field}: must be finite and >= 0, got {s}")));
    }
    Ok(v)
}

fn records<R: Read>(r: R, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let found = rdr.headers().map_err(|e| Error::parse(1, e.to_string()))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::parse(
            1,
            format!("expected header `{}`", header.join(",")),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::parse(line, format!("expected {} fields", header.len())));
        }
        out.push((line, rec));
    }
    Ok(out)
}

pub fn read_activity<R: Read>(r: R) -> Result<Vec<ActivityRecord>> {
    records(r, &ACTIVITY_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            Ok(ActivityRecord {
                subject_id: SubjectId::new(&rec[0]),
                date: parse_date(&rec[1], line, "date")?,
                time_played: parse_amount(&rec[2], line, "time_played_s")?,
                sessions: parse_amount(&rec[3], line, "sessions")?,
                actions: parse_amount(&rec[4], line, "actions")?,
                purchase: parse_amount(&rec[5], line, "purchase")?,
            })
        })
        .collect()
}

pub fn read_attributes<R: Read>(r: R) -> Result<Vec<SubjectAttributes>> {
    records(r, &ATTRIBUTES_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            let level = rec[2]
                .parse()
                .map_err(|_| Error::parse(line, format!("level_at_start: bad level `{}`", &rec[2])))?;
            let paying = match &rec[3] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::parse(
                        line,
                        format!("is_paying_user_at_start: expected 0 or 1, got `{other}`"),
                    ))
                }
            };
            let attr = SubjectAttributes {
                subject_id: SubjectId::new(&rec[0]),
                install_date: parse_date(&rec[1], line, "install_date")?,
                level_at_start: level,
                is_paying_user_at_start: paying,
                last_activity_date: parse_date(&rec[4], line, "last_activity_date")?,
            };
            if attr.install_date > attr.last_activity_date {
                return Err(Error::parse(line, "install_date after last_activity_date"));
            }
            Ok(attr)
        })
        .collect()
}

/// Parses both telemetry files into a store.
///
/// Duplicate `(subject, date)` activity rows are rejected.
pub fn ingest<A: Read, B: Read>(activity: A, attributes: B) -> Result<TelemetryStore> {
    let acts = read_activity(activity)?;
    let attrs = read_attributes(attributes)?;
    // Attribute duplicates are reported with their line.
    let mut seen = BTreeMap::new();
    for (n, a) in attrs.iter().enumerate() {
        if seen.insert(a.subject_id.clone(), n).is_some() {
            return Err(Error::parse(
                n as u64 + 2,
                format!("duplicate attributes for subject {}", a.subject_id),
            ));
        }
    }
    TelemetryStore::from_records(acts, attrs)
}

pub fn write_activity<W: Write>(w: W, rows: &[ActivityRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::parse(0, e.to_string());
    out.write_record(ACTIVITY_HEADER).map_err(err)?;
    for r in rows {
        out.write_record([
            r.subject_id.to_string(),
            r.date.to_string(),
            r.time_played.to_string(),
            r.sessions.to_string(),
            r.actions.to_string(),
            r.purchase.to_string(),
        ])
        .map_err(err)?;
    }
    out.flush().map_err(|e| Error::parse(0, e.to_string()))
}

pub fn write_attributes<W: Write>(w: W, rows: &[SubjectAttributes]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::parse(0, e.to_string());
    out.write_record(ATTRIBUTES_HEADER).map_err(err)?;
    for r in rows {
        out.write_record([
            r.subject_id.to_string(),
            r.install_date.to_string(),
            r.level_at_start.to_string(),
            if r.is_paying_user_at_start { "1" } else { "0" }.to_string(),
            r.last_activity_date.to_string(),
        ])
        .map_err(err)?;
    }
    out.flush().map_err(|e| Error::parse(0, e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortConfig {
    pub p_start: NaiveDate,
    pub n_weeks: usize,
    pub variable_kind: VariableKind,
    pub min_active_days_per_week: u32,
    pub require_purchase_in_period: bool,
    pub sample_size: usize,
    pub rng_seed: u64,
}

impl CohortConfig {
    pub fn new(p_start: NaiveDate, n_weeks: usize, variable_kind: VariableKind) -> Self {
        CohortConfig {
            p_start,
            n_weeks,
            variable_kind,
            min_active_days_per_week: if variable_kind == VariableKind::Purchase { 0 } else { 6 },
            require_purchase_in_period: variable_kind == VariableKind::Purchase,
            sample_size: 1000,
            rng_seed: 0,
        }
    }

    pub fn length(&self) -> usize {
        7 * self.n_weeks
    }

    /// Last day of the studied period.
    pub fn p_end(&self) -> NaiveDate {
        self.p_start + Duration::days(self.length() as i64 - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_weeks == 0 {
            return Err(Error::InvalidConfig("n_weeks must be positive".into()));
        }
        if self.min_active_days_per_week > 7 {
            return Err(Error::InvalidConfig(format!(
                "min_active_days_per_week must be in 0..=7, got {}",
                self.min_active_days_per_week
            )));
        }
        if self.sample_size == 0 {
            return Err(Error::InvalidConfig("sample_size must be positive".into()));
        }
        Ok(())
    }
}

/// Why a subject was left out of a cohort.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exclusion {
    NoAttributes,
    InstalledLate,
    InactiveAfterPeriod,
    TooFewActiveDays { week: usize },
    NoPurchase,
}

/// Applies the filters in order and returns the subject's daily values, or the
/// first filter it fails.
pub fn qualify(
    store: &TelemetryStore,
    subject: &SubjectId,
    cfg: &CohortConfig,
) -> std::result::Result<Vec<f64>, Exclusion> {
    let attr = store.attributes.get(subject).ok_or(Exclusion::NoAttributes)?;
    if attr.install_date >= cfg.p_start {
        return Err(Exclusion::InstalledLate);
    }
    if attr.last_activity_date <= cfg.p_end() {
        return Err(Exclusion::InactiveAfterPeriod);
    }
    let days: Vec<Option<&ActivityRecord>> = (0..cfg.length())
        .map(|d| store.activity(subject, cfg.p_start + Duration::days(d as i64)))
        .collect();
    if cfg.variable_kind == VariableKind::Purchase {
        if cfg.require_purchase_in_period {
            let total: f64 = days.iter().flatten().map(|r| r.purchase).sum();
            if total <= 0.0 {
                return Err(Exclusion::NoPurchase);
            }
        }
    } else {
        for (week, chunk) in days.chunks(7).enumerate() {
            let active = chunk
                .iter()
                .filter(|r| r.is_some_and(|r| r.time_played > 0.0))
                .count() as u32;
            if active < cfg.min_active_days_per_week {
                return Err(Exclusion::TooFewActiveDays { week });
            }
        }
    }
    Ok(days
        .iter()
        .map(|r| r.map_or(0.0, |r| r.value(cfg.variable_kind)))
        .collect())
}

/// Builds the cohort's series set, sorted by subject id.
pub fn build_cohort(store: &TelemetryStore, cfg: &CohortConfig) -> Result<SeriesSet> {
    cfg.validate()?;
    let mut subjects: Vec<&SubjectId> = store.activity.keys().collect();
    subjects.extend(store.attributes.keys());
    subjects.sort();
    subjects.dedup();

    let qualifying: Vec<(&SubjectId, Vec<f64>)> = subjects
        .into_iter()
        .filter_map(|s| qualify(store, s, cfg).ok().map(|v| (s, v)))
        .collect();
    if qualifying.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let chosen: Vec<usize> = if qualifying.len() > cfg.sample_size {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let mut idx = rand::seq::index::sample(&mut rng, qualifying.len(), cfg.sample_size).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..qualifying.len()).collect()
    };
    let series = chosen
        .into_iter()
        .map(|i| {
            let (id, values) = &qualifying[i];
            TimeSeries::new((*id).clone(), cfg.p_start, cfg.variable_kind, values.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    SeriesSet::new(series, SeriesSet::weekly_boundaries(cfg.length()))
}

/// Writes series in wide form: `subject_id,start_date,variable,d0,d1,...`.
pub fn write_series<W: Write>(w: W, set: &SeriesSet) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::parse(0, e.to_string());
    let mut header = vec!["subject_id".to_string(), "start_date".into(), "variable".into()];
    header.extend((0..set.length()).map(|d| format!("d{d}")));
    out.write_record(&header).map_err(err)?;
    for s in set.series() {
        let mut row = vec![
            s.subject_id().to_string(),
            s.start_date().to_string(),
            s.kind().to_string(),
        ];
        row.extend(s.values().iter().map(f64::to_string));
        out.write_record(&row).map_err(err)?;
    }
    out.flush().map_err(|e| Error::parse(0, e.to_string()))
}

pub fn read_series<R: Read>(r: R) -> Result<SeriesSet> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rdr.headers().map_err(|e| Error::parse(1, e.to_string()))?.clone();
    if header.len() < 5 || &header[0] != "subject_id" || &header[1] != "start_date" || &header[2] != "variable" {
        return Err(Error::parse(1, "expected header `subject_id,start_date,variable,d0,...`"));
    }
    let mut series = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let start = parse_date(&rec[1], line, "start_date")?;
        let kind: VariableKind = rec[2].parse().map_err(|e: Error| Error::parse(line, e.to_string()))?;
        let values = rec
            .iter()
            .skip(3)
            .map(|v| v.parse::<f64>().map_err(|_| Error::parse(line, format!("bad value `{v}`"))))
            .collect::<Result<Vec<_>>>()?;
        let s = TimeSeries::new(SubjectId::new(&rec[0]), start, kind, values)
            .map_err(|e| Error::parse(line, e.to_string()))?;
        series.push(s);
    }
    let length = series.first().map_or(0, TimeSeries::len);
    SeriesSet::new(series, SeriesSet::weekly_boundaries(length))
}

fn lookup<'a>(
    ids: &[SubjectId],
    attrs: &'a BTreeMap<SubjectId, SubjectAttributes>,
) -> Result<Vec<&'a SubjectAttributes>> {
    let missing: Vec<String> = ids
        .iter()
        .filter(|id| !attrs.contains_key(*id))
        .map(ToString::to_string)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingAttributes(missing));
    }
    Ok(ids.iter().map(|id| &attrs[id]).collect())
}

fn check_ids(ids: &[SubjectId], p: &Partition) -> Result<()> {
    if ids.len() != p.len() {
        return Err(Error::LengthMismatch {
            left: ids.len(),
            right: p.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCharacteristics {
    pub cluster: usize,
    pub members: usize,
    pub paying_ratio: f64,
    pub mean_level: f64,
}

/// Per-cluster size, paying-user share and mean level at the period start.
pub fn characteristics_table(
    p: &Partition,
    ids: &[SubjectId],
    attrs: &BTreeMap<SubjectId, SubjectAttributes>,
) -> Result<Vec<ClusterCharacteristics>> {
    check_ids(ids, p)?;
    let rows = lookup(ids, attrs)?;
    Ok(p.clusters()
        .iter()
        .enumerate()
        .map(|(c, members)| {
            let n = members.len() as f64;
            let paying = members.iter().filter(|&&i| rows[i].is_paying_user_at_start).count();
            let level: f64 = members.iter().map(|&i| rows[i].level_at_start as f64).sum();
            ClusterCharacteristics {
                cluster: c + 1,
                members: members.len(),
                paying_ratio: paying as f64 / n,
                mean_level: level / n,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChurnConfig {
    checkpoints: Vec<NaiveDate>,
    inactivity_window_days: u32,
}

impl ChurnConfig {
    pub fn new(checkpoints: Vec<NaiveDate>, inactivity_window_days: u32, p_end: NaiveDate) -> Result<Self> {
        if checkpoints.is_empty() {
            return Err(Error::InvalidConfig("no churn checkpoints".into()));
        }
        if inactivity_window_days == 0 {
            return Err(Error::InvalidConfig("inactivity window must be positive".into()));
        }
        if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("churn checkpoints must be strictly increasing".into()));
        }
        if checkpoints[0] <= p_end {
            return Err(Error::InvalidConfig(format!(
                "churn checkpoint {} is not after the period end {p_end}",
                checkpoints[0]
            )));
        }
        Ok(ChurnConfig {
            checkpoints,
            inactivity_window_days,
        })
    }

    pub fn checkpoints(&self) -> &[NaiveDate] {
        &self.checkpoints
    }

    pub fn inactivity_window_days(&self) -> u32 {
        self.inactivity_window_days
    }

    /// A subject is churned at `checkpoint` when nothing was recorded in the
    /// trailing window before it.
    pub fn is_churned(&self, last_activity: NaiveDate, checkpoint: NaiveDate) -> bool {
        last_activity < checkpoint - Duration::days(self.inactivity_window_days as i64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChurnTable {
    pub checkpoints: Vec<NaiveDate>,
    /// `ratios[c][t]`: share of cluster `c + 1` churned at checkpoint `t`.
    pub ratios: Vec<Vec<f64>>,
    pub members: Vec<usize>,
}

pub fn churn_table(
    p: &Partition,
    ids: &[SubjectId],
    attrs: &BTreeMap<SubjectId, SubjectAttributes>,
    cfg: &ChurnConfig,
) -> Result<ChurnTable> {
    check_ids(ids, p)?;
    let rows = lookup(ids, attrs)?;
    let clusters = p.clusters();
    let ratios = clusters
        .iter()
        .map(|members| {
            cfg.checkpoints
                .iter()
                .map(|&at| {
                    let churned = members
                        .iter()
                        .filter(|&&i| cfg.is_churned(rows[i].last_activity_date, at))
                        .count();
                    churned as f64 / members.len() as f64
                })
                .collect()
        })
        .collect();
    Ok(ChurnTable {
        checkpoints: cfg.checkpoints.clone(),
        ratios,
        members: clusters.iter().map(Vec::len).collect(),
    })
}

/// Renders rows as left-aligned text columns.
fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| format!("{cell:>w$}", w = widths[c]))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

fn csv_string(rows: &[Vec<String>]) -> Result<String> {
    let mut out = csv::Writer::from_writer(Vec::new());
    for r in rows {
        out.write_record(r).map_err(|e| Error::parse(0, e.to_string()))?;
    }
    let bytes = out.into_inner().map_err(|e| Error::parse(0, e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn characteristics_rows(table: &[ClusterCharacteristics], digits: Option<usize>) -> Vec<Vec<String>> {
    let num = |v: f64| match digits {
        Some(d) => format!("{v:.d$}"),
        None => v.to_string(),
    };
    let mut rows = vec![vec![
        "cluster".to_string(),
        "members".into(),
        "paying_ratio".into(),
        "mean_level".into(),
    ]];
    rows.extend(table.iter().map(|r| {
        vec![
            r.cluster.to_string(),
            r.members.to_string(),
            num(r.paying_ratio),
            num(r.mean_level),
        ]
    }));
    rows
}

pub fn characteristics_csv(table: &[ClusterCharacteristics]) -> Result<String> {
    csv_string(&characteristics_rows(table, None))
}

pub fn characteristics_text(table: &[ClusterCharacteristics]) -> String {
    aligned(&characteristics_rows(table, Some(3)))
}

impl ChurnTable {
    fn rows(&self, digits: Option<usize>) -> Vec<Vec<String>> {
        let mut header = vec!["cluster".to_string(), "members".into()];
        header.extend(self.checkpoints.iter().map(|d| d.to_string()));
        let mut rows = vec![header];
        for (c, r) in self.ratios.iter().enumerate() {
            let mut row = vec![(c + 1).to_string(), self.members[c].to_string()];
            row.extend(r.iter().map(|v| match digits {
                Some(d) => format!("{v:.d$}"),
                None => v.to_string(),
            }));
            rows.push(row);
        }
        rows
    }

    pub fn to_csv(&self) -> Result<String> {
        csv_string(&self.rows(None))
    }

    pub fn to_text(&self) -> String {
        aligned(&self.rows(Some(3)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn empty_input_gives_empty_store() {
        let store = ingest(
            "subject_id,date,time_played_s,sessions,actions,purchase\n".as_bytes(),
            "subject_id,install_date,level_at_start,is_paying_user_at_start,last_activity_date\n".as_bytes(),
        )
        .unwrap();
        assert!(store.is_empty());
        assert_eq!(store.subject_count(), 0);
    }

    #[test]
    fn duplicate_rows_rejected() {
        let acts = "subject_id,date,time_played_s,sessions,actions,purchase\n\
                    a,2015-06-11,10,1,5,0\n\
                    a,2015-06-11,20,1,5,0\n";
        let attrs = "subject_id,install_date,level_at_start,is_paying_user_at_start,last_activity_date\n";
        assert!(matches!(
            ingest(acts.as_bytes(), attrs.as_bytes()),
            Err(Error::DuplicateRecord { .. })
        ));
    }

    #[test]
    fn parse_errors_carry_lines() {
        let attrs = "subject_id,install_date,level_at_start,is_paying_user_at_start,last_activity_date\n";
        let bad_date = "subject_id,date,time_played_s,sessions,actions,purchase\n\
                        a,2015-06-11,10,1,5,0\n\
                        b,2015-13-01,10,1,5,0\n";
        match ingest(bad_date.as_bytes(), attrs.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let negative = "subject_id,date,time_played_s,sessions,actions,purchase\n\
                        a,2015-06-11,-1,1,5,0\n";
        assert!(matches!(ingest(negative.as_bytes(), attrs.as_bytes()), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(
            ingest("who,date\n".as_bytes(), attrs.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        let bad_bool = "subject_id,install_date,level_at_start,is_paying_user_at_start,last_activity_date\n\
                        a,2015-01-01,3,yes,2015-02-01\n";
        let acts = "subject_id,date,time_played_s,sessions,actions,purchase\n";
        assert!(matches!(ingest(acts.as_bytes(), bad_bool.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    fn store_with(subjects: &[(&str, &str, &str, &[f64], f64)]) -> TelemetryStore {
        // (id, install, last, daily time from p_start, purchase on day 0)
        let p_start = date("2015-06-11");
        let mut acts = Vec::new();
        let mut attrs = Vec::new();
        for &(id, install, last, days, purchase) in subjects {
            for (d, &t) in days.iter().enumerate() {
                acts.push(ActivityRecord {
                    subject_id: id.into(),
                    date: p_start + Duration::days(d as i64),
                    time_played: t,
                    sessions: 1.0,
                    actions: 2.0,
                    purchase: if d == 0 { purchase } else { 0.0 },
                });
            }
            attrs.push(SubjectAttributes {
                subject_id: id.into(),
                install_date: date(install),
                level_at_start: 5,
                is_paying_user_at_start: purchase > 0.0,
                last_activity_date: date(last),
            });
        }
        TelemetryStore::from_records(acts, attrs).unwrap()
    }

    #[test]
    fn filters_exclude_late_installers_and_sparse_weeks() {
        let full = [100.0; 14];
        let mut gap = [100.0; 14];
        gap[8] = 0.0;
        gap[9] = 0.0;
        let store = store_with(&[
            ("ok", "2015-01-01", "2015-08-01", &full, 0.0),
            ("late", "2015-06-12", "2015-08-01", &full, 0.0),
            ("gap", "2015-01-01", "2015-08-01", &gap, 0.0),
        ]);
        let cfg = CohortConfig::new(date("2015-06-11"), 2, VariableKind::Time);
        assert_eq!(qualify(&store, &"late".into(), &cfg), Err(Exclusion::InstalledLate));
        assert_eq!(
            qualify(&store, &"gap".into(), &cfg),
            Err(Exclusion::TooFewActiveDays { week: 1 })
        );
        let set = build_cohort(&store, &cfg).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.series()[0].subject_id().as_str(), "ok");
        assert_eq!(set.length(), 14);
        assert_eq!(set.event_boundaries(), &[7]);
    }

    #[test]
    fn missing_days_become_zeros() {
        let store = store_with(&[("p", "2015-01-01", "2015-08-01", &[1.0, 2.0], 3.0)]);
        let mut cfg = CohortConfig::new(date("2015-06-11"), 1, VariableKind::Purchase);
        cfg.sample_size = 10;
        let set = build_cohort(&store, &cfg).unwrap();
        assert_eq!(set.series()[0].values(), &[3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn empty_cohort_errors() {
        let store = store_with(&[("late", "2015-07-01", "2015-08-01", &[1.0; 7], 0.0)]);
        let cfg = CohortConfig::new(date("2015-06-11"), 1, VariableKind::Time);
        assert!(matches!(build_cohort(&store, &cfg), Err(Error::EmptyCohort)));
    }

    #[test]
    fn characteristics_single_cluster() {
        let mut attrs = BTreeMap::new();
        for (id, level, paying) in [("a", 10, true), ("b", 20, false)] {
            attrs.insert(
                SubjectId::new(id),
                SubjectAttributes {
                    subject_id: id.into(),
                    install_date: date("2015-01-01"),
                    level_at_start: level,
                    is_paying_user_at_start: paying,
                    last_activity_date: date("2015-09-01"),
                },
            );
        }
        let ids = vec![SubjectId::new("a"), SubjectId::new("b")];
        let p = Partition::new(vec![1, 1]).unwrap();
        let t = characteristics_table(&p, &ids, &attrs).unwrap();
        assert_eq!(
            t,
            vec![ClusterCharacteristics {
                cluster: 1,
                members: 2,
                paying_ratio: 0.5,
                mean_level: 15.0
            }]
        );
        let other = vec![SubjectId::new("x"), SubjectId::new("y")];
        match characteristics_table(&p, &other, &attrs) {
            Err(Error::MissingAttributes(ids)) => assert_eq!(ids, vec!["x", "y"]),
            r => panic!("unexpected {r:?}"),
        }
        assert!(characteristics_text(&t).contains("0.500"));
        assert_eq!(characteristics_csv(&t).unwrap(), "cluster,members,paying_ratio,mean_level\n1,2,0.5,15\n");
    }

    #[test]
    fn churn_examples() {
        let p_end = date("2015-07-01");
        let mut attrs = BTreeMap::new();
        for id in ["a", "b"] {
            attrs.insert(
                SubjectId::new(id),
                SubjectAttributes {
                    subject_id: id.into(),
                    install_date: date("2015-01-01"),
                    level_at_start: 1,
                    is_paying_user_at_start: false,
                    last_activity_date: p_end,
                },
            );
        }
        let ids = vec![SubjectId::new("a"), SubjectId::new("b")];
        let p = Partition::new(vec![1, 2]).unwrap();
        let cfg = ChurnConfig::new(vec![p_end + Duration::days(60)], 30, p_end).unwrap();
        let t = churn_table(&p, &ids, &attrs, &cfg).unwrap();
        assert_eq!(t.ratios, vec![vec![1.0], vec![1.0]]);

        let cfg = ChurnConfig::new(vec![p_end + Duration::days(10)], 30, p_end).unwrap();
        let t = churn_table(&p, &ids, &attrs, &cfg).unwrap();
        assert_eq!(t.ratios, vec![vec![0.0], vec![0.0]]);
        assert!(t.to_text().contains("0.000"));

        assert!(ChurnConfig::new(vec![p_end], 30, p_end).is_err());
        assert!(ChurnConfig::new(vec![date("2015-09-01"), date("2015-08-01")], 30, p_end).is_err());
        assert!(ChurnConfig::new(vec![], 30, p_end).is_err());
    }

    #[test]
    fn series_csv_round_trip() {
        let store = store_with(&[
            ("a", "2015-01-01", "2015-08-01", &[1.5; 7], 0.0),
            ("b", "2015-01-01", "2015-08-01", &[2.25; 7], 0.0),
        ]);
        let cfg = CohortConfig::new(date("2015-06-11"), 1, VariableKind::Time);
        let set = build_cohort(&store, &cfg).unwrap();
        let mut buf = Vec::new();
        write_series(&mut buf, &set).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("subject_id,start_date,variable,d0,d1,"));
        assert_eq!(read_series(&buf[..]).unwrap(), set);
    }
}
