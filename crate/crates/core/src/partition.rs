use std::collections::HashMap;
use std::hash::Hash;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::series::SubjectId;

/// Assignment of each item to a cluster label in `1..=k`, every cluster non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().copied().max().unwrap_or(0);
        if labels.is_empty() {
            return Err(Error::InvalidPartition("no items".into()));
        }
        if labels.contains(&0) {
            return Err(Error::InvalidPartition("labels start at 1".into()));
        }
        let mut seen = vec![false; k];
        for &l in &labels {
            seen[l - 1] = true;
        }
        if let Some(empty) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("cluster {} is empty", empty + 1)));
        }
        Ok(Partition { labels, k })
    }

    /// Relabels arbitrary cluster keys to `1..=k` in order of first appearance.
    pub fn from_keys<T: Hash + Eq>(keys: &[T]) -> Result<Self> {
        let mut map = HashMap::new();
        let labels = keys
            .iter()
            .map(|key| {
                let next = map.len() + 1;
                *map.entry(key).or_insert(next)
            })
            .collect();
        Partition::new(labels)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Member indices of each cluster; entry `c` holds cluster `c + 1`.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l - 1].push(i);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &l in &self.labels {
            out[l - 1] += 1;
        }
        out
    }

    /// Canonical form: labels renumbered by first appearance.
    pub fn canonical(&self) -> Partition {
        Partition::from_keys(&self.labels).expect("relabeling a valid partition")
    }
}

/// Writes `subject_id,cluster` rows.
pub fn write_labels<W: Write>(w: W, ids: &[SubjectId], p: &Partition) -> Result<()> {
    if ids.len() != p.len() {
        return Err(Error::LengthMismatch {
            left: ids.len(),
            right: p.len(),
        });
    }
    let mut out = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| Error::parse(0, e.to_string());
    out.write_record(["subject_id", "cluster"]).map_err(csv_err)?;
    for (id, label) in ids.iter().zip(p.labels()) {
        out.write_record([id.as_str(), &label.to_string()])
            .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::parse(0, e.to_string()))?;
    Ok(())
}

/// Reads `subject_id,cluster` rows, keeping file order.
pub fn read_labels<R: Read>(r: R) -> Result<(Vec<SubjectId>, Partition)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let line = n as u64 + 2;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        if rec.len() != 2 {
            return Err(Error::parse(line, "expected subject_id,cluster"));
        }
        ids.push(SubjectId::new(&rec[0]));
        let label: usize = rec[1]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad cluster label `{}`", &rec[1])))?;
        labels.push(label);
    }
    Ok((ids, Partition::new(labels)?))
}
