//! Dissimilarity measures between time series and the pairwise matrix builder.
//!
//! All measures work on raw value slices. Correlation-based indices live in
//! `[-1, 1]` and are converted to dissimilarities by [`cor_dissim`] and
//! [`cort_dissim`].

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{DissimilarityMatrix, MeasureTag};
use crate::series::SeriesSet;

/// Default CORT tuning constant.
pub const DEFAULT_CORT_K: f64 = 2.0;
/// Default complexity floor used by CID when exactly one series is flat.
pub const DEFAULT_CE_EPSILON: f64 = 1e-12;

fn same_len(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(())
}

pub fn euclidean(x: &[f64], y: &[f64]) -> Result<f64> {
    same_len(x, y)?;
    Ok(x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Sum of pointwise absolute differences.
pub fn manhattan(x: &[f64], y: &[f64]) -> Result<f64> {
    same_len(x, y)?;
    Ok(x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum())
}

/// Normalized inner product of two sequences; `None` if either has zero norm.
fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (u, v) in a.iter().zip(b) {
        ab += u * v;
        aa += u * u;
        bb += v * v;
    }
    if aa == 0.0 || bb == 0.0 {
        return None;
    }
    Some((ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0))
}

fn centered(x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - mean).collect()
}

fn differences(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Pearson correlation of two equal-length series.
pub fn cor_index(x: &[f64], y: &[f64]) -> Result<f64> {
    same_len(x, y)?;
    if x.is_empty() {
        return Err(Error::EmptySeries);
    }
    cosine(&centered(x), &centered(y)).ok_or(Error::ConstantSeries)
}

/// `sqrt(2 (1 - COR))`, in `[0, 2]`.
pub fn cor_dissim(x: &[f64], y: &[f64]) -> Result<f64> {
    let cor = cor_index(x, y)?;
    Ok((2.0 * (1.0 - cor)).max(0.0).sqrt())
}

/// Correlation of first differences (temporal correlation index).
pub fn cort_index(x: &[f64], y: &[f64]) -> Result<f64> {
    same_len(x, y)?;
    if x.len() < 2 {
        return Err(Error::TooShort { len: x.len(), min: 2 });
    }
    cosine(&differences(x), &differences(y)).ok_or(Error::FlatDifferences)
}

/// Adaptive weight `2 / (1 + exp(k u))`.
pub fn cort_weight(u: f64, k: f64) -> f64 {
    2.0 / (1.0 + (k * u).exp())
}

/// Euclidean distance modulated by the temporal correlation of the pair.
pub fn cort_dissim(x: &[f64], y: &[f64], k: f64) -> Result<f64> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::InvalidConfig(format!("cort_k must be >= 0, got {k}")));
    }
    let u = cort_index(x, y)?;
    Ok(cort_weight(u, k) * euclidean(x, y)?)
}

/// Dynamic time warping with absolute-difference cell costs and unit steps.
pub fn dtw(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySeries);
    }
    // Rolling rows of the cumulative cost table.
    let m = y.len();
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![0.0; m];
    for (i, &xi) in x.iter().enumerate() {
        for j in 0..m {
            let cost = (xi - y[j]).abs();
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => cur[j - 1],
                (_, 0) => prev[0],
                _ => prev[j].min(cur[j - 1]).min(prev[j - 1]),
            };
            cur[j] = cost + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

/// Root sum of squared first differences.
pub fn complexity_estimate(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::TooShort { len: x.len(), min: 2 });
    }
    Ok(x.windows(2)
        .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
        .sum::<f64>()
        .sqrt())
}

/// Complexity correction factor `max(CE) / min(CE)`.
///
/// Two flat series give 1; a single flat series has its complexity floored at `eps`.
pub fn complexity_factor(ce_x: f64, ce_y: f64, eps: f64) -> f64 {
    let (lo, hi) = if ce_x <= ce_y { (ce_x, ce_y) } else { (ce_y, ce_x) };
    if hi == 0.0 {
        return 1.0;
    }
    hi / lo.max(eps)
}

/// Complexity-invariant distance.
pub fn cid(x: &[f64], y: &[f64], eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!("ce_epsilon must be > 0, got {eps}")));
    }
    let d = euclidean(x, y)?;
    let cf = complexity_factor(complexity_estimate(x)?, complexity_estimate(y)?, eps);
    Ok(d * cf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    Euclidean,
    Cor,
    Cort,
    Dtw,
    Cid,
}

impl Measure {
    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Euclidean => "euclidean",
            Measure::Cor => "cor",
            Measure::Cort => "cort",
            Measure::Dtw => "dtw",
            Measure::Cid => "cid",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Measure::Euclidean),
            "cor" => Ok(Measure::Cor),
            "cort" => Ok(Measure::Cort),
            "dtw" => Ok(Measure::Dtw),
            "cid" => Ok(Measure::Cid),
            other => Err(Error::InvalidConfig(format!("unknown measure `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureConfig {
    pub measure: Measure,
    pub cort_k: f64,
    pub ce_epsilon: f64,
}

impl MeasureConfig {
    pub fn new(measure: Measure) -> Self {
        MeasureConfig {
            measure,
            cort_k: DEFAULT_CORT_K,
            ce_epsilon: DEFAULT_CE_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cort_k >= 0.0 && self.cort_k.is_finite()) {
            return Err(Error::InvalidConfig(format!("cort_k must be >= 0, got {}", self.cort_k)));
        }
        if !(self.ce_epsilon > 0.0 && self.ce_epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "ce_epsilon must be > 0, got {}",
                self.ce_epsilon
            )));
        }
        Ok(())
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self.measure {
            Measure::Euclidean => euclidean(x, y),
            Measure::Cor => cor_dissim(x, y),
            Measure::Cort => cort_dissim(x, y, self.cort_k),
            Measure::Dtw => dtw(x, y),
            Measure::Cid => cid(x, y, self.ce_epsilon),
        }
    }

    /// Provenance record. Only parameters the measure uses are recorded.
    pub fn tag(&self) -> MeasureTag {
        let tag = MeasureTag::new().with("measure", self.measure);
        match self.measure {
            Measure::Cort => tag.with("cort_k", self.cort_k),
            Measure::Cid => tag.with("ce_epsilon", self.ce_epsilon),
            _ => tag,
        }
    }

    pub fn from_tag(tag: &MeasureTag) -> Result<Self> {
        let measure: Measure = tag
            .get("measure")
            .ok_or_else(|| Error::InvalidConfig("provenance lacks measure".into()))?
            .parse()?;
        let mut cfg = MeasureConfig::new(measure);
        let num = |key: &str, v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad {key} `{v}`")))
        };
        if let Some(v) = tag.get("cort_k") {
            cfg.cort_k = num("cort_k", v)?;
        }
        if let Some(v) = tag.get("ce_epsilon") {
            cfg.ce_epsilon = num("ce_epsilon", v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Computes all pairwise dissimilarities of a series set on the current rayon pool.
pub fn pairwise_matrix(s: &SeriesSet, cfg: &MeasureConfig) -> Result<DissimilarityMatrix> {
    cfg.validate()?;
    if s.len() < 2 {
        return Err(Error::InvalidSeriesSet(format!(
            "need at least 2 series, got {}",
            s.len()
        )));
    }
    let values = s.values();
    // Each row is owned by one task; errors are reported in row order.
    let rows: Vec<Result<Vec<f64>>> = (0..values.len())
        .into_par_iter()
        .map(|i| {
            (0..i)
                .map(|j| {
                    cfg.distance(values[i], values[j]).map_err(|e| Error::Pair {
                        i,
                        j,
                        source: Box::new(e),
                    })
                })
                .collect()
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    DissimilarityMatrix::from_lower(s.ids(), cfg.tag(), |i, j| rows[i][j])
}

/// Like [`pairwise_matrix`], on a dedicated pool of `jobs` worker threads.
pub fn pairwise_matrix_jobs(
    s: &SeriesSet,
    cfg: &MeasureConfig,
    jobs: usize,
) -> Result<DissimilarityMatrix> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| pairwise_matrix(s, cfg))
}
