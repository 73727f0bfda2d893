//! Seeded synthetic benchmarks with a known cluster structure.
//!
//! Shape benchmarks draw each series as `amplitude * template + noise`, where
//! the template is a piecewise-linear archetype, optionally shifted right by a
//! random number of days. Sparse benchmarks model purchase-like series: each
//! archetype is a purchase-frequency regime, and every day is then zeroed with
//! probability `sparsity`.
//!
//! `noise_sd` is relative to each series' amplitude. All values are clamped at
//! zero so the output is valid observed telemetry.

use chrono::{Duration, NaiveDate};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cohort::{ActivityRecord, SubjectAttributes};
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::series::{SeriesSet, SubjectId, TimeSeries, VariableKind};

/// Start date given to every generated series.
pub fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 6, 11).expect("valid date")
}

/// Purchase-frequency regime of a sparse archetype.
#[derive(Debug, Clone, PartialEq)]
pub enum SparseRegime {
    /// A purchase of `magnitude` every day.
    DailySmall { magnitude: f64 },
    /// `count` purchases of `magnitude` on random days.
    RareSpike { count: usize, magnitude: f64 },
    /// No activity apart from one purchase of `magnitude` on a random day.
    FlatPlusOne { magnitude: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Archetype {
    /// Piecewise-linear template through `(day, value)` knots, held constant
    /// outside the first and last knot.
    Shape(Vec<(f64, f64)>),
    Sparse(SparseRegime),
}

impl Archetype {
    pub fn shape(knots: &[(f64, f64)]) -> Self {
        Archetype::Shape(knots.to_vec())
    }

    /// Template values for days `0..length`, or `None` for sparse archetypes.
    pub fn template(&self, length: usize) -> Option<Vec<f64>> {
        let Archetype::Shape(knots) = self else {
            return None;
        };
        Some((0..length).map(|t| interpolate(knots, t as f64)).collect())
    }
}

fn interpolate(knots: &[(f64, f64)], t: f64) -> f64 {
    let (first, last) = (knots[0], knots[knots.len() - 1]);
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let i = knots.partition_point(|k| k.0 <= t);
    let ((t0, v0), (t1, v1)) = (knots[i - 1], knots[i]);
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    pub n_per_cluster: usize,
    pub length: usize,
    pub archetypes: Vec<Archetype>,
    pub noise_sd: f64,
    pub phase_shift_days: usize,
    pub amplitude_range: (f64, f64),
    pub sparsity: f64,
    pub rng_seed: u64,
}

impl BenchmarkSpec {
    pub fn new(archetypes: Vec<Archetype>) -> Self {
        BenchmarkSpec {
            n_per_cluster: 25,
            length: 21,
            archetypes,
            noise_sd: 0.0,
            phase_shift_days: 0,
            amplitude_range: (1.0, 1.0),
            sparsity: 0.0,
            rng_seed: 0,
        }
    }

    /// Four event-reaction shapes over three weeks: steady growth, a plunge in
    /// week two, a spike in week three and a slow decline.
    pub fn shape_preset(seed: u64) -> Self {
        BenchmarkSpec {
            noise_sd: 0.1,
            amplitude_range: (0.5, 2.0),
            rng_seed: seed,
            ..BenchmarkSpec::new(vec![
                Archetype::shape(&[(0.0, 1.0), (6.0, 1.0), (13.0, 3.0), (20.0, 3.0)]),
                Archetype::shape(&[(0.0, 2.0), (6.0, 2.0), (9.0, 0.6), (13.0, 0.6), (16.0, 2.0), (20.0, 2.0)]),
                Archetype::shape(&[(0.0, 1.5), (13.0, 1.5), (16.0, 4.0), (20.0, 4.0)]),
                Archetype::shape(&[(0.0, 3.0), (20.0, 1.0)]),
            ])
        }
    }

    /// Narrow activity bursts that differ in count and form, each series
    /// shifted by up to two days.
    pub fn shift_preset(seed: u64) -> Self {
        BenchmarkSpec {
            noise_sd: 0.1,
            phase_shift_days: 2,
            rng_seed: seed,
            ..BenchmarkSpec::new(vec![
                Archetype::shape(&[(0.0, 1.0), (4.0, 1.0), (5.0, 6.0), (6.0, 1.0)]),
                Archetype::shape(&[
                    (0.0, 1.0),
                    (4.0, 1.0),
                    (5.0, 6.0),
                    (6.0, 1.0),
                    (11.0, 1.0),
                    (12.0, 6.0),
                    (13.0, 1.0),
                ]),
                Archetype::shape(&[(0.0, 4.0), (4.0, 4.0), (5.0, 0.0), (6.0, 4.0)]),
            ])
        }
    }

    /// Daily small spenders, rare large spenders and one-off buyers.
    pub fn sparse_preset(seed: u64) -> Self {
        BenchmarkSpec {
            noise_sd: 0.1,
            sparsity: 0.3,
            rng_seed: seed,
            ..BenchmarkSpec::new(vec![
                Archetype::Sparse(SparseRegime::DailySmall { magnitude: 2.0 }),
                Archetype::Sparse(SparseRegime::RareSpike {
                    count: 4,
                    magnitude: 12.0,
                }),
                Archetype::Sparse(SparseRegime::FlatPlusOne { magnitude: 1.0 }),
            ])
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadSpec(m));
        if self.archetypes.len() < 2 {
            return bad(format!("need at least 2 archetypes, got {}", self.archetypes.len()));
        }
        if self.length < 7 {
            return bad(format!("length must be at least 7, got {}", self.length));
        }
        if self.n_per_cluster == 0 {
            return bad("n_per_cluster must be positive".into());
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return bad(format!("noise_sd must be finite and >= 0, got {}", self.noise_sd));
        }
        let (lo, hi) = self.amplitude_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return bad(format!("amplitude range [{lo}, {hi}] must be positive and ordered"));
        }
        if !(0.0..=1.0).contains(&self.sparsity) {
            return bad(format!("sparsity must be in [0, 1], got {}", self.sparsity));
        }
        if self.phase_shift_days >= self.length {
            return bad(format!(
                "phase shift {} must be shorter than the series",
                self.phase_shift_days
            ));
        }
        for (i, a) in self.archetypes.iter().enumerate() {
            match a {
                Archetype::Shape(knots) => {
                    if knots.is_empty() {
                        return bad(format!("archetype {i} has no knots"));
                    }
                    if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
                        return bad(format!("archetype {i}: knot days must increase"));
                    }
                    if knots.iter().any(|&(t, v)| !t.is_finite() || !v.is_finite() || v < 0.0) {
                        return bad(format!("archetype {i}: knots must be finite with values >= 0"));
                    }
                }
                Archetype::Sparse(regime) => {
                    let (m, count) = match *regime {
                        SparseRegime::DailySmall { magnitude } => (magnitude, 1),
                        SparseRegime::RareSpike { count, magnitude } => (magnitude, count),
                        SparseRegime::FlatPlusOne { magnitude } => (magnitude, 1),
                    };
                    if !(m.is_finite() && m > 0.0) {
                        return bad(format!("archetype {i}: magnitude must be positive"));
                    }
                    if count == 0 || count > self.length {
                        return bad(format!("archetype {i}: spike count must be in 1..={}", self.length));
                    }
                }
            }
        }
        Ok(())
    }

    fn series_count(&self) -> usize {
        self.archetypes.len() * self.n_per_cluster
    }
}

/// Subject id of the `i`-th generated series; ids sort in generation order.
pub fn subject_id(i: usize, total: usize) -> SubjectId {
    let width = total.saturating_sub(1).to_string().len().max(3);
    SubjectId::new(format!("syn{i:0width$}"))
}

fn amplitude(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn shape_series(spec: &BenchmarkSpec, template: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let amp = amplitude(rng, spec.amplitude_range);
    let shift = if spec.phase_shift_days > 0 {
        rng.gen_range(0..=spec.phase_shift_days)
    } else {
        0
    };
    (0..spec.length)
        .map(|t| {
            let base = template[t.saturating_sub(shift)];
            let noise = if spec.noise_sd > 0.0 {
                spec.noise_sd * amp * normal(rng)
            } else {
                0.0
            };
            (amp * base + noise).max(0.0)
        })
        .collect()
}

fn sparse_series(spec: &BenchmarkSpec, regime: &SparseRegime, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = spec.length;
    let amp = amplitude(rng, spec.amplitude_range);
    let (days, magnitude): (Vec<usize>, f64) = match *regime {
        SparseRegime::DailySmall { magnitude } => ((0..n).collect(), magnitude),
        SparseRegime::RareSpike { count, magnitude } => {
            let mut d = sample(rng, n, count).into_vec();
            d.sort_unstable();
            (d, magnitude)
        }
        SparseRegime::FlatPlusOne { magnitude } => (vec![rng.gen_range(0..n)], magnitude),
    };
    let mut values = vec![0.0; n];
    for d in days {
        let noise = if spec.noise_sd > 0.0 {
            spec.noise_sd * amp * magnitude * normal(rng)
        } else {
            0.0
        };
        values[d] = (amp * magnitude + noise).max(0.0);
    }
    if spec.sparsity > 0.0 {
        let before = values.clone();
        for v in values.iter_mut() {
            if rng.gen_bool(spec.sparsity) {
                *v = 0.0;
            }
        }
        // Keep at least one purchase unless every day is zeroed by definition.
        if spec.sparsity < 1.0 && values.iter().all(|&v| v == 0.0) {
            if let Some((i, &v)) = before
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            {
                values[i] = v;
            }
        }
    }
    values
}

fn assemble(
    spec: &BenchmarkSpec,
    kind: VariableKind,
    rows: Vec<Vec<f64>>,
) -> Result<(SeriesSet, Partition)> {
    let total = rows.len();
    let series = rows
        .into_iter()
        .enumerate()
        .map(|(i, v)| TimeSeries::new(subject_id(i, total), default_start(), kind, v))
        .collect::<Result<Vec<_>>>()?;
    let labels = (0..total).map(|i| i / spec.n_per_cluster + 1).collect();
    Ok((
        SeriesSet::new(series, SeriesSet::weekly_boundaries(spec.length))?,
        Partition::new(labels)?,
    ))
}

/// Generates the shape benchmark: `n_per_cluster` series per archetype, grouped
/// by archetype, with the ground-truth partition.
pub fn generate_shape_benchmark(spec: &BenchmarkSpec) -> Result<(SeriesSet, Partition)> {
    spec.validate()?;
    let templates = spec
        .archetypes
        .iter()
        .map(|a| a.template(spec.length))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::BadSpec("shape benchmark needs shape archetypes".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut rows = Vec::with_capacity(spec.series_count());
    for t in &templates {
        for _ in 0..spec.n_per_cluster {
            rows.push(shape_series(spec, t, &mut rng));
        }
    }
    assemble(spec, VariableKind::Time, rows)
}

/// Generates the purchase-like sparse benchmark.
pub fn generate_sparse_benchmark(spec: &BenchmarkSpec) -> Result<(SeriesSet, Partition)> {
    spec.validate()?;
    let regimes = spec
        .archetypes
        .iter()
        .map(|a| match a {
            Archetype::Sparse(r) => Some(r),
            Archetype::Shape(_) => None,
        })
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::BadSpec("sparse benchmark needs sparse archetypes".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut rows = Vec::with_capacity(spec.series_count());
    for r in regimes {
        for _ in 0..spec.n_per_cluster {
            rows.push(sparse_series(spec, r, &mut rng));
        }
    }
    assemble(spec, VariableKind::Purchase, rows)
}

/// Dispatches on the archetype kind.
pub fn generate(spec: &BenchmarkSpec) -> Result<(SeriesSet, Partition)> {
    match spec.archetypes.first() {
        Some(Archetype::Sparse(_)) => generate_sparse_benchmark(spec),
        _ => generate_shape_benchmark(spec),
    }
}

/// Expresses a benchmark as telemetry that passes the default cohort filters
/// for a period starting at the series start date: subjects installed 30 days
/// earlier and stayed active 30 days after the period. Non-measured activity
/// columns are filled so every day counts as active.
pub fn to_telemetry(set: &SeriesSet, seed: u64) -> (Vec<ActivityRecord>, Vec<SubjectAttributes>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e1e_3e7a);
    let start = set.start_date();
    let kind = set.kind();
    let mut activity = Vec::new();
    let mut attributes = Vec::new();
    for s in set.series() {
        for (d, &v) in s.values().iter().enumerate() {
            let mut rec = ActivityRecord {
                subject_id: s.subject_id().clone(),
                date: start + Duration::days(d as i64),
                time_played: 600.0,
                sessions: 1.0,
                actions: 20.0,
                purchase: 0.0,
            };
            match kind {
                VariableKind::Time => rec.time_played = v,
                VariableKind::Sessions => rec.sessions = v,
                VariableKind::Actions => rec.actions = v,
                VariableKind::Purchase => rec.purchase = v,
            }
            activity.push(rec);
        }
        attributes.push(SubjectAttributes {
            subject_id: s.subject_id().clone(),
            install_date: start - Duration::days(30),
            level_at_start: rng.gen_range(1..=50),
            is_paying_user_at_start: rng.gen_bool(0.3),
            last_activity_date: start + Duration::days(set.length() as i64 + 30),
        });
    }
    (activity, attributes)
}
