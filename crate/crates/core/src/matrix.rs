//! Dense symmetric dissimilarity matrices and their text persistence.
//!
//! The on-disk format is a provenance header followed by one line per item
//! holding the item id and its lower-triangle row:
//!
//! ```text
//! # dissimilarity size=3 measure=euclidean representation=raw
//! a
//! b 1.5
//! c 2 0.5
//! ```

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::series::SubjectId;

const HEADER_PREFIX: &str = "# dissimilarity";

/// Ordered `key=value` provenance record attached to a matrix.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MeasureTag {
    entries: Vec<(String, String)>,
}

impl MeasureTag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.set(key, value);
        self
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}

impl fmt::Display for MeasureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, (k, v)) in self.entries.iter().enumerate() {
            if n > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl FromStr for MeasureTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut tag = MeasureTag::new();
        for token in s.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("bad provenance token `{token}`")))?;
            tag.set(k, v);
        }
        Ok(tag)
    }
}

/// Symmetric K x K matrix with zero diagonal and finite non-negative entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    size: usize,
    entries: Vec<f64>,
    ids: Vec<SubjectId>,
    tag: MeasureTag,
}

impl DissimilarityMatrix {
    /// Validates a dense row-major matrix.
    pub fn new(ids: Vec<SubjectId>, entries: Vec<f64>, tag: MeasureTag) -> Result<Self> {
        let size = ids.len();
        if entries.len() != size * size {
            return Err(Error::InvalidMatrix(format!(
                "{} entries for {size} items",
                entries.len()
            )));
        }
        for i in 0..size {
            if entries[i * size + i] != 0.0 {
                return Err(Error::InvalidMatrix(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let (a, b) = (entries[i * size + j], entries[j * size + i]);
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i}, {j}) = {a} is not a finite non-negative number"
                    )));
                }
                if a != b {
                    return Err(Error::InvalidMatrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(DissimilarityMatrix {
            size,
            entries,
            ids,
            tag,
        })
    }

    /// Builds a matrix from a lower-triangle generator `f(i, j)` with `j < i`.
    pub fn from_lower<F>(ids: Vec<SubjectId>, tag: MeasureTag, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> f64,
    {
        let size = ids.len();
        let mut entries = vec![0.0; size * size];
        for i in 0..size {
            for j in 0..i {
                let v = f(i, j);
                entries[i * size + j] = v;
                entries[j * size + i] = v;
            }
        }
        DissimilarityMatrix::new(ids, entries, tag)
    }

    /// Matrix with generated ids `0..K`.
    pub fn from_dense(size: usize, entries: Vec<f64>) -> Result<Self> {
        let ids = (0..size).map(|i| SubjectId::new(i.to_string())).collect();
        DissimilarityMatrix::new(ids, entries, MeasureTag::new())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn ids(&self) -> &[SubjectId] {
        &self.ids
    }

    pub fn tag(&self) -> &MeasureTag {
        &self.tag
    }

    pub fn tag_mut(&mut self) -> &mut MeasureTag {
        &mut self.tag
    }

    /// Upper-triangle entries in row order.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.size * self.size.saturating_sub(1) / 2);
        for i in 0..self.size {
            for j in i + 1..self.size {
                out.push(self.get(i, j));
            }
        }
        out
    }

    /// Same entries scaled by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let entries = self.entries.iter().map(|v| v * c).collect();
        DissimilarityMatrix::new(self.ids.clone(), entries, self.tag.clone())
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "{HEADER_PREFIX} size={}", self.size)?;
        if !self.tag.entries().is_empty() {
            write!(w, " {}", self.tag)?;
        }
        writeln!(w)?;
        for i in 0..self.size {
            write!(w, "{}", self.ids[i])?;
            for j in 0..i {
                write!(w, " {}", self.get(i, j))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = match lines.next() {
            Some(line) => line.map_err(|e| Error::parse(1, e.to_string()))?,
            None => return Err(Error::parse(1, "empty matrix file")),
        };
        let rest = header
            .strip_prefix(HEADER_PREFIX)
            .ok_or_else(|| Error::parse(1, "missing `# dissimilarity` header"))?;
        let mut tag: MeasureTag = rest.parse().map_err(|e: Error| Error::parse(1, e.to_string()))?;
        let size: usize = tag
            .get("size")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(1, "header lacks size=K"))?;
        tag.entries.retain(|(k, _)| k != "size");

        let mut ids = Vec::with_capacity(size);
        let mut entries = vec![0.0; size * size];
        for i in 0..size {
            let lineno = i as u64 + 2;
            let line = lines
                .next()
                .ok_or_else(|| Error::parse(lineno, "unexpected end of matrix"))?
                .map_err(|e| Error::parse(lineno, e.to_string()))?;
            let mut fields = line.split_whitespace();
            let id = fields
                .next()
                .ok_or_else(|| Error::parse(lineno, "missing item id"))?;
            ids.push(SubjectId::new(id));
            for j in 0..=i {
                let field = fields.next();
                if j == i {
                    if field.is_some() {
                        return Err(Error::parse(lineno, "too many entries"));
                    }
                    break;
                }
                let v: f64 = field
                    .ok_or_else(|| Error::parse(lineno, format!("expected {i} entries")))?
                    .parse()
                    .map_err(|e| Error::parse(lineno, format!("{e}")))?;
                entries[i * size + j] = v;
                entries[j * size + i] = v;
            }
        }
        DissimilarityMatrix::new(ids, entries, tag)
    }
}
