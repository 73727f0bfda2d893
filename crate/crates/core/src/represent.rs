//! Representation transforms applied before distance computation: piecewise
//! aggregate approximation, SAX symbols with their MINDIST lower bound, the
//! orthonormal Haar wavelet transform, and moving-average trend extraction.

use std::fmt;
use std::str::FromStr;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::dissim::euclidean;
use crate::error::{Error, Result};
use crate::matrix::MeasureTag;
use crate::series::{check_values, mean_sd};

/// Tolerance on mean 0 / sd 1 when checking SAX input.
const NORMALIZED_TOL: f64 = 1e-6;

pub fn paa(x: &[f64], w: usize) -> Result<Vec<f64>> {
    if w == 0 || x.is_empty() || x.len() % w != 0 {
        return Err(Error::NonDivisibleLength {
            len: x.len(),
            segments: w,
        });
    }
    let block = x.len() / w;
    Ok(x.chunks(block)
        .map(|c| c.iter().sum::<f64>() / block as f64)
        .collect())
}

/// Expands segment means back to `n` points (each repeated `n / w` times).
pub fn paa_expand(segments: &[f64], n: usize) -> Vec<f64> {
    let block = n / segments.len();
    segments
        .iter()
        .flat_map(|&v| std::iter::repeat(v).take(block))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaxConfig {
    w: usize,
    alpha: usize,
    breakpoints: Vec<f64>,
}

impl SaxConfig {
    pub fn new(w: usize, alpha: usize) -> Result<Self> {
        if w == 0 {
            return Err(Error::InvalidConfig("SAX needs at least one segment".into()));
        }
        if !(2..=20).contains(&alpha) {
            return Err(Error::InvalidConfig(format!(
                "SAX alphabet size must be in 2..=20, got {alpha}"
            )));
        }
        Ok(SaxConfig {
            w,
            alpha,
            breakpoints: gaussian_breakpoints(alpha),
        })
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// The `alpha - 1` ascending standard-normal breakpoints.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// MINDIST cell between symbols `r` and `c` (0-based).
    pub fn cell(&self, r: u8, c: u8) -> f64 {
        let (lo, hi) = if r <= c { (r, c) } else { (c, r) };
        if hi - lo <= 1 {
            0.0
        } else {
            self.breakpoints[hi as usize - 1] - self.breakpoints[lo as usize]
        }
    }
}

/// Standard-normal quantiles at `i / alpha` for `i = 1..alpha`.
pub fn gaussian_breakpoints(alpha: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (1..alpha)
        .map(|i| normal.inverse_cdf(i as f64 / alpha as f64))
        .collect()
}

/// A SAX word: symbol indices `0..alpha`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SaxWord(pub Vec<u8>);

impl fmt::Display for SaxWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            write!(f, "{}", (b'a' + s) as char)?;
        }
        Ok(())
    }
}

/// Discretizes a z-normalized series into `w` symbols.
pub fn sax_symbols(x: &[f64], cfg: &SaxConfig) -> Result<SaxWord> {
    check_values(x, 2)?;
    let (mean, sd) = mean_sd(x);
    if mean.abs() > NORMALIZED_TOL || (sd - 1.0).abs() > NORMALIZED_TOL {
        return Err(Error::NotNormalized { mean, sd });
    }
    let segments = paa(x, cfg.w)?;
    let symbols = segments
        .iter()
        .map(|&v| {
            cfg.breakpoints
                .iter()
                .position(|&b| v < b)
                .unwrap_or(cfg.alpha - 1) as u8
        })
        .collect();
    Ok(SaxWord(symbols))
}

/// Lower-bounding distance between two SAX words of series of length `n_original`.
pub fn sax_mindist(a: &SaxWord, b: &SaxWord, n_original: usize, cfg: &SaxConfig) -> Result<f64> {
    if a.0.len() != b.0.len() {
        return Err(Error::LengthMismatch {
            left: a.0.len(),
            right: b.0.len(),
        });
    }
    if a.0.len() != cfg.w {
        return Err(Error::ConfigMismatch(format!(
            "word length {} but w = {}",
            a.0.len(),
            cfg.w
        )));
    }
    let alpha = cfg.alpha as u8;
    if let Some(&s) = a.0.iter().chain(&b.0).find(|&&s| s >= alpha) {
        return Err(Error::ConfigMismatch(format!(
            "symbol {s} outside an alphabet of {alpha}"
        )));
    }
    let sum: f64 = a
        .0
        .iter()
        .zip(&b.0)
        .map(|(&r, &c)| cfg.cell(r, c).powi(2))
        .sum();
    Ok((n_original as f64 / cfg.w as f64).sqrt() * sum.sqrt())
}

fn check_haar_length(n: usize, level: usize) -> Result<()> {
    if level == 0 || level >= usize::BITS as usize || n == 0 || n % (1usize << level) != 0 {
        return Err(Error::BadLength { len: n, level });
    }
    Ok(())
}

/// Orthonormal Haar transform, `level` times on the approximation band.
///
/// Output layout: final approximation, then detail bands from coarsest to finest.
pub fn dwt_haar(x: &[f64], level: usize) -> Result<Vec<f64>> {
    check_haar_length(x.len(), level)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut approx = x.to_vec();
    let mut details: Vec<Vec<f64>> = Vec::with_capacity(level);
    for _ in 0..level {
        let (a, d): (Vec<f64>, Vec<f64>) = approx
            .chunks_exact(2)
            .map(|p| ((p[0] + p[1]) * s, (p[0] - p[1]) * s))
            .unzip();
        approx = a;
        details.push(d);
    }
    let mut out = approx;
    for d in details.iter().rev() {
        out.extend_from_slice(d);
    }
    Ok(out)
}

pub fn idwt_haar(coeffs: &[f64], level: usize) -> Result<Vec<f64>> {
    check_haar_length(coeffs.len(), level)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut len = coeffs.len() >> level;
    let mut approx = coeffs[..len].to_vec();
    while len < coeffs.len() {
        let detail = &coeffs[len..2 * len];
        approx = approx
            .iter()
            .zip(detail)
            .flat_map(|(&a, &d)| [(a + d) * s, (a - d) * s])
            .collect();
        len *= 2;
    }
    Ok(approx)
}

/// Euclidean distance between the first `keep` Haar coefficients.
pub fn dwt_dissim(x: &[f64], y: &[f64], level: usize, keep: usize) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if keep > x.len() {
        return Err(Error::BadLength {
            len: x.len(),
            level,
        });
    }
    let cx = dwt_haar(x, level)?;
    let cy = dwt_haar(y, level)?;
    euclidean(&cx[..keep], &cy[..keep])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrendConfig {
    window: usize,
}

impl TrendConfig {
    pub fn new(window: usize) -> Result<Self> {
        if window < 3 || window % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "trend window must be odd and >= 3, got {window}"
            )));
        }
        Ok(TrendConfig { window })
    }

    pub fn window(&self) -> usize {
        self.window
    }
}

impl Default for TrendConfig {
    fn default() -> Self {
        TrendConfig { window: 7 }
    }
}

/// Centered moving average; near the ends the window shrinks to the points
/// available on each side.
pub fn extract_trend(x: &[f64], cfg: &TrendConfig) -> Result<Vec<f64>> {
    let n = x.len();
    if n < cfg.window {
        return Err(Error::TooShort {
            len: n,
            min: cfg.window,
        });
    }
    let half = cfg.window / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in x {
        acc += v;
        prefix.push(acc);
    }
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            // Direct sum in the interior keeps affine inputs exact to rounding.
            if hi - lo == cfg.window {
                x[lo..hi].iter().sum::<f64>() / cfg.window as f64
            } else {
                (prefix[hi] - prefix[lo]) / (hi - lo) as f64
            }
        })
        .collect())
}

/// Series transform applied before the dissimilarity measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Representation {
    #[default]
    Raw,
    Trend { window: usize },
    Znorm,
    Paa { w: usize },
    /// First `keep` orthonormal Haar coefficients.
    Dwt { level: usize, keep: usize },
}

impl Representation {
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match *self {
            Representation::Raw => Ok(x.to_vec()),
            Representation::Trend { window } => extract_trend(x, &TrendConfig::new(window)?),
            Representation::Znorm => crate::series::znormalize_values(x),
            Representation::Paa { w } => paa(x, w),
            Representation::Dwt { level, keep } => {
                let c = dwt_haar(x, level)?;
                if keep == 0 || keep > c.len() {
                    return Err(Error::BadLength { len: c.len(), level });
                }
                Ok(c[..keep].to_vec())
            }
        }
    }

    pub fn record(&self, tag: &mut MeasureTag) {
        tag.set("representation", self);
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Representation::Raw => f.write_str("raw"),
            Representation::Trend { window } => write!(f, "trend:{window}"),
            Representation::Znorm => f.write_str("znorm"),
            Representation::Paa { w } => write!(f, "paa:{w}"),
            Representation::Dwt { level, keep } => write!(f, "dwt:{level}:{keep}"),
        }
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown representation `{s}`"));
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or_default().to_ascii_lowercase();
        let mut num = |default: Option<usize>| -> Result<usize> {
            match parts.next() {
                Some(p) => p.parse().map_err(|_| bad()),
                None => default.ok_or_else(bad),
            }
        };
        let rep = match name.as_str() {
            "raw" => Representation::Raw,
            "trend" => Representation::Trend {
                window: num(Some(7))?,
            },
            "znorm" => Representation::Znorm,
            "paa" => Representation::Paa { w: num(None)? },
            "dwt" => {
                let level = num(None)?;
                let keep = num(None)?;
                Representation::Dwt { level, keep }
            }
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(rep)
    }
}
