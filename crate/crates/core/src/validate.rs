//! Internal validity indices (silhouette, Dunn, Hubert's Γ) and partition
//! comparison scores (variation of information, adjusted Rand index).

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::DissimilarityMatrix;
use crate::partition::Partition;

fn check_sizes(d: &DissimilarityMatrix, p: &Partition) -> Result<()> {
    if d.size() != p.len() {
        return Err(Error::LengthMismatch {
            left: d.size(),
            right: p.len(),
        });
    }
    if p.k() < 2 {
        return Err(Error::SingleCluster);
    }
    Ok(())
}

/// Per-item silhouette widths; singleton members score 0.
pub fn silhouette_widths(d: &DissimilarityMatrix, p: &Partition) -> Result<Vec<f64>> {
    check_sizes(d, p)?;
    let sizes = p.sizes();
    let labels = p.labels();
    let mut sums = vec![0.0; p.k()];
    let widths = (0..d.size())
        .map(|i| {
            let own = labels[i] - 1;
            if sizes[own] == 1 {
                return 0.0;
            }
            sums.iter_mut().for_each(|s| *s = 0.0);
            for j in 0..d.size() {
                sums[labels[j] - 1] += d.get(i, j);
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..p.k())
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom == 0.0 {
                0.0
            } else {
                (b - a) / denom
            }
        })
        .collect();
    Ok(widths)
}

pub fn silhouette_avg(d: &DissimilarityMatrix, p: &Partition) -> Result<f64> {
    let w = silhouette_widths(d, p)?;
    Ok(w.iter().sum::<f64>() / w.len() as f64)
}

/// Dunn index, or a marker when every cluster has zero diameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DunnIndex {
    Value(f64),
    DegenerateDiameter,
}

impl DunnIndex {
    pub fn value(self) -> Option<f64> {
        match self {
            DunnIndex::Value(v) => Some(v),
            DunnIndex::DegenerateDiameter => None,
        }
    }
}

impl fmt::Display for DunnIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DunnIndex::Value(v) => write!(f, "{v}"),
            DunnIndex::DegenerateDiameter => f.write_str("degenerate-diameter"),
        }
    }
}

/// Minimum between-cluster distance over maximum cluster diameter.
pub fn dunn(d: &DissimilarityMatrix, p: &Partition) -> Result<DunnIndex> {
    check_sizes(d, p)?;
    let labels = p.labels();
    let mut min_between = f64::INFINITY;
    let mut max_diameter = 0.0f64;
    for i in 0..d.size() {
        for j in i + 1..d.size() {
            let v = d.get(i, j);
            if labels[i] == labels[j] {
                max_diameter = max_diameter.max(v);
            } else {
                min_between = min_between.min(v);
            }
        }
    }
    if max_diameter == 0.0 {
        return Ok(DunnIndex::DegenerateDiameter);
    }
    Ok(DunnIndex::Value(min_between / max_diameter))
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += (x - ma) * (y - mb);
        aa += (x - ma) * (x - ma);
        bb += (y - mb) * (y - mb);
    }
    if aa == 0.0 || bb == 0.0 {
        return None;
    }
    Some(ab / (aa.sqrt() * bb.sqrt()))
}

/// Normalized Hubert statistic between distances and 0/1 cross-cluster indicators.
pub fn hubert_gamma(d: &DissimilarityMatrix, p: &Partition) -> Result<f64> {
    check_sizes(d, p)?;
    let labels = p.labels();
    let dist = d.upper_triangle();
    let mut membership = Vec::with_capacity(dist.len());
    for i in 0..d.size() {
        for j in i + 1..d.size() {
            membership.push(if labels[i] == labels[j] { 0.0 } else { 1.0 });
        }
    }
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if dist.is_empty() || constant(&dist) {
        return Err(Error::DegenerateMatrix("distances are constant"));
    }
    if constant(&membership) {
        return Err(Error::DegenerateMatrix("membership matrix is constant"));
    }
    pearson(&dist, &membership).ok_or(Error::DegenerateMatrix("zero variance"))
}

/// Contingency counts between two partitions over the same items.
fn contingency(p: &Partition, q: &Partition) -> Result<BTreeMap<(usize, usize), usize>> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut table = BTreeMap::new();
    for (&a, &b) in p.labels().iter().zip(q.labels()) {
        *table.entry((a, b)).or_insert(0) += 1;
    }
    Ok(table)
}

/// Variation of information `H(p) + H(q) - 2 I(p, q)`, natural logarithms.
///
/// Evaluated cell by cell as `-sum p_ab (ln(p_ab / p_a) + ln(p_ab / p_b))`,
/// which is exactly zero for identical partitions.
pub fn variation_of_information(p: &Partition, q: &Partition) -> Result<f64> {
    let table = contingency(p, q)?;
    let n = p.len() as f64;
    let (sp, sq) = (p.sizes(), q.sizes());
    let vi: f64 = table
        .iter()
        .map(|(&(a, b), &c)| {
            let c = c as f64;
            let (na, nb) = (sp[a - 1] as f64, sq[b - 1] as f64);
            -(c / n) * ((c / na).ln() + (c / nb).ln())
        })
        .sum();
    Ok(vi.max(0.0))
}

fn pairs(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index from the pair-counting contingency table.
pub fn adjusted_rand(p: &Partition, q: &Partition) -> Result<f64> {
    let table = contingency(p, q)?;
    let index: f64 = table.values().map(|&c| pairs(c)).sum();
    let sum_p: f64 = p.sizes().into_iter().map(pairs).sum();
    let sum_q: f64 = q.sizes().into_iter().map(pairs).sum();
    let total = pairs(p.len());
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_p * sum_q / total;
    let max = 0.5 * (sum_p + sum_q);
    if max == expected {
        // Both partitions are all-singletons or single-cluster alike.
        return Ok(if index == expected { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}
