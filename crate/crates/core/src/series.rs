//! Daily time series and aligned collections of them.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Opaque subject (player) identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubjectId(pub Arc<str>);

impl SubjectId {
    pub fn new(id: impl AsRef<str>) -> Self {
        SubjectId(Arc::from(id.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SubjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SubjectId {
    fn from(s: &str) -> Self {
        SubjectId::new(s)
    }
}

/// Which daily telemetry variable a series measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariableKind {
    Time,
    Sessions,
    Actions,
    Purchase,
}

impl VariableKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VariableKind::Time => "time",
            VariableKind::Sessions => "sessions",
            VariableKind::Actions => "actions",
            VariableKind::Purchase => "purchase",
        }
    }
}

impl fmt::Display for VariableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "time" => Ok(VariableKind::Time),
            "sessions" => Ok(VariableKind::Sessions),
            "actions" => Ok(VariableKind::Actions),
            "purchase" | "purchases" => Ok(VariableKind::Purchase),
            other => Err(Error::InvalidConfig(format!("unknown variable kind `{other}`"))),
        }
    }
}

/// Checks the value invariants shared by every series constructor.
pub(crate) fn check_values(values: &[f64], min_len: usize) -> Result<()> {
    if values.len() < min_len {
        return Err(Error::TooShort {
            len: values.len(),
            min: min_len,
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

/// One subject's equally spaced daily observations.
///
/// Observed series are non-negative. Series produced by a transform
/// (z-normalization, trend extraction) are marked `derived` and may take any
/// finite value.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    subject_id: SubjectId,
    start_date: NaiveDate,
    kind: VariableKind,
    values: Vec<f64>,
    derived: bool,
}

impl TimeSeries {
    /// Builds an observed series: at least two points, all finite and non-negative.
    pub fn new(
        subject_id: SubjectId,
        start_date: NaiveDate,
        kind: VariableKind,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_values(&values, 2)?;
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeValue { index, value });
        }
        Ok(TimeSeries {
            subject_id,
            start_date,
            kind,
            values,
            derived: false,
        })
    }

    /// Builds a series holding transformed values, which may be negative.
    pub fn derived(
        subject_id: SubjectId,
        start_date: NaiveDate,
        kind: VariableKind,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_values(&values, 2)?;
        Ok(TimeSeries {
            subject_id,
            start_date,
            kind,
            values,
            derived: true,
        })
    }

    /// Same metadata, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        TimeSeries::derived(self.subject_id.clone(), self.start_date, self.kind, values)
    }

    pub fn subject_id(&self) -> &SubjectId {
        &self.subject_id
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn kind(&self) -> VariableKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_derived(&self) -> bool {
        self.derived
    }
}

/// Sample mean and sample (n - 1) standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Z-normalizes raw values: mean 0, sample standard deviation 1.
pub fn znormalize_values(values: &[f64]) -> Result<Vec<f64>> {
    check_values(values, 2)?;
    let (mean, sd) = mean_sd(values);
    if sd == 0.0 {
        return Err(Error::ConstantSeries);
    }
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}

/// Z-normalizes a series, keeping its metadata.
pub fn znormalize(x: &TimeSeries) -> Result<TimeSeries> {
    x.with_values(znormalize_values(x.values())?)
}

/// An aligned collection of series sharing start date, length and variable.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSet {
    series: Vec<TimeSeries>,
    start_date: NaiveDate,
    length: usize,
    kind: VariableKind,
    event_boundaries: Vec<usize>,
}

impl SeriesSet {
    pub fn new(series: Vec<TimeSeries>, event_boundaries: Vec<usize>) -> Result<Self> {
        let first = series
            .first()
            .ok_or_else(|| Error::InvalidSeriesSet("no series".into()))?;
        let (start_date, length, kind) = (first.start_date, first.len(), first.kind);
        for s in &series {
            if s.start_date != start_date {
                return Err(Error::InvalidSeriesSet(format!(
                    "subject {} starts on {} instead of {}",
                    s.subject_id, s.start_date, start_date
                )));
            }
            if s.len() != length {
                return Err(Error::LengthMismatch {
                    left: length,
                    right: s.len(),
                });
            }
            if s.kind != kind {
                return Err(Error::InvalidSeriesSet(format!(
                    "subject {} measures {} instead of {}",
                    s.subject_id, s.kind, kind
                )));
            }
        }
        if event_boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSeriesSet(
                "event boundaries must be strictly increasing".into(),
            ));
        }
        if event_boundaries.iter().any(|&b| b > length) {
            return Err(Error::InvalidSeriesSet(format!(
                "event boundary beyond series length {length}"
            )));
        }
        Ok(SeriesSet {
            series,
            start_date,
            length,
            kind,
            event_boundaries,
        })
    }

    /// Week starts strictly inside the series: 7, 14, ...
    pub fn weekly_boundaries(length: usize) -> Vec<usize> {
        (7..length).step_by(7).collect()
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn kind(&self) -> VariableKind {
        self.kind
    }

    pub fn event_boundaries(&self) -> &[usize] {
        &self.event_boundaries
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn ids(&self) -> Vec<SubjectId> {
        self.series.iter().map(|s| s.subject_id.clone()).collect()
    }

    pub fn values(&self) -> Vec<&[f64]> {
        self.series.iter().map(|s| s.values()).collect()
    }

    /// Applies a value transform to every member, keeping the set metadata.
    pub fn map_values<F>(&self, f: F) -> Result<SeriesSet>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        let series = self
            .series
            .iter()
            .map(|s| s.with_values(f(s.values())?))
            .collect::<Result<Vec<_>>>()?;
        // Transforms may change the length (PAA, truncated wavelets).
        let length = series.first().map_or(0, TimeSeries::len);
        let events = self
            .event_boundaries
            .iter()
            .copied()
            .filter(|&b| b <= length)
            .collect();
        SeriesSet::new(series, events)
    }
}
