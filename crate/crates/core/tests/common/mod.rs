//! Independent reference implementations and fixtures shared by the
//! integration tests. Each oracle follows the textbook definition directly and
//! shares no code with the library.

#![allow(dead_code)]

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tsclust::{DissimilarityMatrix, SeriesSet, SubjectId, TimeSeries, VariableKind};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_series(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

pub fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 6, 11).unwrap()
}

pub fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

pub fn series_set(rows: &[Vec<f64>], kind: VariableKind) -> SeriesSet {
    let series = rows
        .iter()
        .enumerate()
        .map(|(i, v)| TimeSeries::new(SubjectId::new(format!("s{i:03}")), start(), kind, v.clone()).unwrap())
        .collect();
    SeriesSet::new(series, SeriesSet::weekly_boundaries(rows[0].len())).unwrap()
}

// ---- dissimilarity oracles ----

pub fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        s += (x[i] - y[i]).powi(2);
    }
    s.sqrt()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Pearson correlation via centred cross-products.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx).powi(2);
        syy += (y[i] - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Uncentred correlation of first differences.
pub fn cort(x: &[f64], y: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for t in 0..x.len() - 1 {
        let a = x[t + 1] - x[t];
        let b = y[t + 1] - y[t];
        num += a * b;
        dx += a * a;
        dy += b * b;
    }
    num / (dx.sqrt() * dy.sqrt())
}

pub fn complexity(x: &[f64]) -> f64 {
    x.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>().sqrt()
}

pub fn cid(x: &[f64], y: &[f64]) -> f64 {
    let (a, b) = (complexity(x), complexity(y));
    let cf = if a == 0.0 && b == 0.0 {
        1.0
    } else {
        a.max(b) / a.min(b).max(1e-12)
    };
    euclidean(x, y) * cf
}

/// Dynamic time warping by plain exponential recursion over all monotone
/// paths.
pub fn dtw_naive(x: &[f64], y: &[f64]) -> f64 {
    fn go(x: &[f64], y: &[f64], i: usize, j: usize) -> f64 {
        let cost = (x[i] - y[j]).abs();
        if i == 0 && j == 0 {
            return cost;
        }
        let mut best = f64::INFINITY;
        if i > 0 {
            best = best.min(go(x, y, i - 1, j));
        }
        if j > 0 {
            best = best.min(go(x, y, i, j - 1));
        }
        if i > 0 && j > 0 {
            best = best.min(go(x, y, i - 1, j - 1));
        }
        cost + best
    }
    go(x, y, x.len() - 1, y.len() - 1)
}

// ---- Ward oracle ----

/// One merge as `(left, right, height, size)` with signed node ids: leaves
/// `-1..=-K`, merges `1..`.
pub type OracleMerge = (i64, i64, f64, usize);

/// Ward criterion between two clusters recomputed from all member
/// dissimilarities.
pub fn ward_criterion(d: &[Vec<f64>], a: &[usize], b: &[usize]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let sum = |p: &[usize], q: &[usize]| {
        let mut s = 0.0;
        for &i in p {
            for &j in q {
                s += d[i][j] * d[i][j];
            }
        }
        s
    };
    let between = 2.0 / (na * nb) * sum(a, b);
    let within_a = sum(a, a) / (na * na);
    let within_b = sum(b, b) / (nb * nb);
    na * nb / (na + nb) * (between - within_a - within_b)
}

/// Agglomerates by evaluating the criterion for every pair of current
/// clusters at every step. Clusters live in slots `0..K`; a merge keeps the
/// lower slot, and ties go to the lexicographically smallest slot pair.
pub fn ward_brute_force(d: &[Vec<f64>]) -> Vec<OracleMerge> {
    let k = d.len();
    let mut slots: Vec<Option<(Vec<usize>, i64)>> = (0..k).map(|i| Some((vec![i], -(i as i64) - 1))).collect();
    let mut out = Vec::new();
    for step in 0..k - 1 {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..k {
            for j in i + 1..k {
                if let (Some((a, _)), Some((b, _))) = (&slots[i], &slots[j]) {
                    let c = ward_criterion(d, a, b);
                    if best.map_or(true, |(_, _, bc)| c < bc) {
                        best = Some((i, j, c));
                    }
                }
            }
        }
        let (i, j, c) = best.unwrap();
        let (b, right) = slots[j].take().unwrap();
        let (a, left) = slots[i].take().unwrap();
        let members: Vec<usize> = a.into_iter().chain(b).collect();
        out.push((left, right, c.max(0.0).sqrt(), members.len()));
        slots[i] = Some((members, step as i64 + 1));
    }
    out
}

pub fn random_matrix(rng: &mut ChaCha8Rng, k: usize, integer: bool) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..i {
            let v = if integer {
                rng.gen_range(1..=4) as f64
            } else {
                rng.gen_range(0.01..10.0)
            };
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

pub fn to_matrix(d: &[Vec<f64>]) -> DissimilarityMatrix {
    let k = d.len();
    DissimilarityMatrix::from_dense(k, d.iter().flatten().copied().collect()).unwrap()
}

// ---- validation oracles ----

/// Adjusted Rand index by enumerating every unordered pair of items.
pub fn ari_pairs(p: &[usize], q: &[usize]) -> f64 {
    let n = p.len();
    let (mut both, mut only_p, mut only_q, mut neither) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            match (p[i] == p[j], q[i] == q[j]) {
                (true, true) => both += 1.0,
                (true, false) => only_p += 1.0,
                (false, true) => only_q += 1.0,
                (false, false) => neither += 1.0,
            }
        }
    }
    let total = both + only_p + only_q + neither;
    let expected = (both + only_p) * (both + only_q) / total;
    let max = ((both + only_p) + (both + only_q)) / 2.0;
    (both - expected) / (max - expected)
}

/// Type-7 quantile from 1-based order statistics.
pub fn quantile_order_stats(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = 1.0 + (v.len() as f64 - 1.0) * q;
    let lower = pos.floor() as usize;
    let frac = pos - lower as f64;
    if lower >= v.len() {
        return v[v.len() - 1];
    }
    v[lower - 1] * (1.0 - frac) + v[lower] * frac
}

pub fn svg_attr_values<'a>(doc: &'a roxmltree::Document, class: &str, attr: &str) -> Vec<&'a str> {
    doc.descendants()
        .filter(|n| n.attribute("class") == Some(class))
        .filter_map(|n| n.attribute(attr))
        .collect()
}
