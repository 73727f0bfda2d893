//! Agglomerative clustering with Ward's minimum-variance linkage.
//!
//! Squared input dissimilarities are updated with the Lance–Williams recurrence
//! and merge heights are the square roots of the merge criterion, so two
//! singletons merge at their original dissimilarity. Ties go to the pair with
//! the smallest (row, column) slot indices; a merged cluster keeps the smaller
//! slot.

use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::matrix::DissimilarityMatrix;
use crate::partition::Partition;

/// Node of a dendrogram: an input item or an earlier merge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    /// 0-based item index.
    Leaf(usize),
    /// 0-based merge index.
    Merge(usize),
}

impl Node {
    /// Signed id used by the merge-list format: leaves `-1..=-K`, merges `1..K`.
    pub fn signed_id(self) -> i64 {
        match self {
            Node::Leaf(i) => -(i as i64) - 1,
            Node::Merge(m) => m as i64 + 1,
        }
    }

    pub fn from_signed_id(id: i64) -> Option<Node> {
        match id {
            0 => None,
            i if i < 0 => Some(Node::Leaf((-i - 1) as usize)),
            m => Some(Node::Merge(m as usize - 1)),
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.signed_id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: Node,
    pub right: Node,
    pub height: f64,
    pub size: usize,
}

/// Full merge tree over `leaf_count` items.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    merges: Vec<Merge>,
    leaf_count: usize,
}

impl Dendrogram {
    pub fn new(leaf_count: usize, merges: Vec<Merge>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidMatrix(format!("dendrogram: {msg}")));
        if leaf_count == 0 {
            return bad("no leaves".into());
        }
        if merges.len() != leaf_count - 1 {
            return bad(format!(
                "{} merges for {leaf_count} leaves",
                merges.len()
            ));
        }
        let mut leaf_used = vec![false; leaf_count];
        let mut merge_used = vec![false; merges.len()];
        let mut prev = 0.0f64;
        for (m, merge) in merges.iter().enumerate() {
            let mut size = 0;
            for node in [merge.left, merge.right] {
                match node {
                    Node::Leaf(i) if i < leaf_count && !leaf_used[i] => {
                        leaf_used[i] = true;
                        size += 1;
                    }
                    Node::Merge(c) if c < m && !merge_used[c] => {
                        merge_used[c] = true;
                        size += merges[c].size;
                    }
                    other => return bad(format!("merge {} reuses or misreferences node {other}", m + 1)),
                }
            }
            if size != merge.size {
                return bad(format!("merge {} has size {} but joins {size} leaves", m + 1, merge.size));
            }
            if !(merge.height.is_finite() && merge.height >= 0.0) {
                return bad(format!("merge {} has invalid height {}", m + 1, merge.height));
            }
            if merge.height < prev {
                return bad(format!("merge {} height decreases", m + 1));
            }
            prev = merge.height;
        }
        Ok(Dendrogram { merges, leaf_count })
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    /// Leaves in depth-first left-to-right order from the root.
    pub fn leaf_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.leaf_count);
        let root = match self.merges.len() {
            0 => Node::Leaf(0),
            n => Node::Merge(n - 1),
        };
        let mut stack = vec![root];
        while let Some(node) = stack.pop() {
            match node {
                Node::Leaf(i) => out.push(i),
                Node::Merge(m) => {
                    stack.push(self.merges[m].right);
                    stack.push(self.merges[m].left);
                }
            }
        }
        out
    }

    /// Writes one `merge_index left right height size` line per merge.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (m, merge) in self.merges.iter().enumerate() {
            writeln!(
                w,
                "{} {} {} {} {}",
                m + 1,
                merge.left,
                merge.right,
                merge.height,
                merge.size
            )?;
        }
        Ok(())
    }

    /// Parses the merge-list format; the leaf count is the merge count plus one.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut merges = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let lineno = n as u64 + 1;
            let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(Error::parse(lineno, "expected `merge_index left right height size`"));
            }
            let index: usize = f[0]
                .parse()
                .map_err(|_| Error::parse(lineno, "bad merge index"))?;
            if index != merges.len() + 1 {
                return Err(Error::parse(lineno, format!("merge index {index} out of sequence")));
            }
            let node = |s: &str| {
                s.parse::<i64>()
                    .ok()
                    .and_then(Node::from_signed_id)
                    .ok_or_else(|| Error::parse(lineno, format!("bad node id `{s}`")))
            };
            merges.push(Merge {
                left: node(f[1])?,
                right: node(f[2])?,
                height: f[3]
                    .parse()
                    .map_err(|_| Error::parse(lineno, "bad height"))?,
                size: f[4].parse().map_err(|_| Error::parse(lineno, "bad size"))?,
            });
        }
        let leaves = merges.len() + 1;
        Dendrogram::new(leaves, merges)
    }
}

/// Relative slack allowed when a merge height comes out below its predecessor
/// through rounding.
const MONOTONE_SLACK: f64 = 1e-9;

/// Ward agglomeration over a dissimilarity matrix.
pub fn agglomerate_ward(d: &DissimilarityMatrix) -> Result<Dendrogram> {
    let k = d.size();
    if k < 2 {
        return Err(Error::InvalidMatrix(format!("need at least 2 items, got {k}")));
    }
    let mut d2: Vec<f64> = d.entries().iter().map(|v| v * v).collect();
    let at = |i: usize, j: usize| i * k + j;
    let mut active = vec![true; k];
    let mut size = vec![1usize; k];
    let mut node: Vec<Node> = (0..k).map(Node::Leaf).collect();

    // nearest[i]: smallest-index active j > i at minimal distance.
    let mut nearest = vec![usize::MAX; k];
    let mut nearest_d = vec![f64::INFINITY; k];
    let refresh = |i: usize, d2: &[f64], active: &[bool], nearest: &mut [usize], nearest_d: &mut [f64]| {
        let (mut best, mut best_d) = (usize::MAX, f64::INFINITY);
        for j in i + 1..k {
            if active[j] && d2[at(i, j)] < best_d {
                best = j;
                best_d = d2[at(i, j)];
            }
        }
        nearest[i] = best;
        nearest_d[i] = best_d;
    };
    for i in 0..k {
        refresh(i, &d2, &active, &mut nearest, &mut nearest_d);
    }

    let mut merges = Vec::with_capacity(k - 1);
    let mut prev_height = 0.0f64;
    for step in 0..k - 1 {
        let mut i = usize::MAX;
        let mut best = f64::INFINITY;
        for r in 0..k {
            if active[r] && nearest[r] != usize::MAX && (i == usize::MAX || nearest_d[r] < best) {
                i = r;
                best = nearest_d[r];
            }
        }
        let j = nearest[i];
        debug_assert!(i < j && active[j]);

        let mut height = best.max(0.0).sqrt();
        if height < prev_height {
            if prev_height - height > MONOTONE_SLACK * prev_height {
                return Err(Error::InvalidMatrix(format!(
                    "merge {} height {height} below previous {prev_height}",
                    step + 1
                )));
            }
            height = prev_height;
        }
        prev_height = height;
        merges.push(Merge {
            left: node[i],
            right: node[j],
            height,
            size: size[i] + size[j],
        });

        let (ni, nj) = (size[i] as f64, size[j] as f64);
        let dij = d2[at(i, j)];
        for r in 0..k {
            if !active[r] || r == i || r == j {
                continue;
            }
            let nr = size[r] as f64;
            let updated = ((ni + nr) * d2[at(r, i)] + (nj + nr) * d2[at(r, j)] - nr * dij)
                / (ni + nj + nr);
            let updated = updated.max(0.0);
            d2[at(r, i)] = updated;
            d2[at(i, r)] = updated;
        }
        active[j] = false;
        size[i] += size[j];
        node[i] = Node::Merge(step);

        refresh(i, &d2, &active, &mut nearest, &mut nearest_d);
        nearest[j] = usize::MAX;
        for r in 0..k {
            if !active[r] || r == i {
                continue;
            }
            if nearest[r] == j || (r < i && nearest[r] == i) {
                refresh(r, &d2, &active, &mut nearest, &mut nearest_d);
            } else if r < i {
                let v = d2[at(r, i)];
                if v < nearest_d[r] || (v == nearest_d[r] && i < nearest[r]) {
                    nearest[r] = i;
                    nearest_d[r] = v;
                }
            }
        }
    }
    Dendrogram::new(k, merges)
}

/// Cuts the tree into `k` clusters by undoing the last `k - 1` merges.
///
/// Clusters are labelled `1..=k` in order of their first leaf.
pub fn cut(dend: &Dendrogram, k: usize) -> Result<Partition> {
    let n = dend.leaf_count();
    if k == 0 || k > n {
        return Err(Error::BadK { k, n });
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    // A representative leaf for every merge node.
    let mut rep = Vec::with_capacity(dend.merges().len());
    let leaf_of = |node: Node, rep: &[usize]| match node {
        Node::Leaf(i) => i,
        Node::Merge(m) => rep[m],
    };
    for (m, merge) in dend.merges().iter().enumerate() {
        let a = leaf_of(merge.left, &rep);
        let b = leaf_of(merge.right, &rep);
        rep.push(a);
        if m < n - k {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[rb] = ra;
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Partition::from_keys(&roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(xs: &[f64]) -> DissimilarityMatrix {
        let n = xs.len();
        let mut e = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                e[i * n + j] = (xs[i] - xs[j]).abs();
            }
        }
        DissimilarityMatrix::from_dense(n, e).unwrap()
    }

    #[test]
    fn two_items_merge_at_their_distance() {
        let d = agglomerate_ward(&points(&[1.0, 3.5])).unwrap();
        assert_eq!(d.merges().len(), 1);
        assert_eq!(d.merges()[0].height, 2.5);
        assert_eq!(d.merges()[0].left, Node::Leaf(0));
        assert_eq!(d.merges()[0].right, Node::Leaf(1));
    }

    #[test]
    fn separated_pairs() {
        let d = agglomerate_ward(&points(&[0.0, 0.1, 10.0, 10.1])).unwrap();
        let m = d.merges();
        // 10.1 - 10 rounds slightly below 0.1, so that pair goes first
        assert_eq!((m[0].left, m[0].right), (Node::Leaf(2), Node::Leaf(3)));
        assert_eq!((m[1].left, m[1].right), (Node::Leaf(0), Node::Leaf(1)));
        assert_eq!((m[2].left, m[2].right), (Node::Merge(1), Node::Merge(0)));
        // centroid form: 2 n_a n_b / (n_a + n_b) |c_a - c_b|^2 = 200
        assert!((m[2].height - (2.0f64 * 100.0).sqrt()).abs() < 1e-9);
        assert!(m[2].height > m[1].height);
        assert_eq!(cut(&d, 2).unwrap().labels(), &[1, 1, 2, 2]);
    }

    #[test]
    fn duplicates_merge_first_at_zero() {
        let d = agglomerate_ward(&points(&[4.0, 1.0, 7.0, 1.0])).unwrap();
        let first = d.merges()[0];
        assert_eq!(first.height, 0.0);
        assert_eq!((first.left, first.right), (Node::Leaf(1), Node::Leaf(3)));
    }

    #[test]
    fn equal_distances_break_ties_by_index() {
        let n = 5;
        let mut e = vec![1.0; n * n];
        for i in 0..n {
            e[i * n + i] = 0.0;
        }
        let d = agglomerate_ward(&DissimilarityMatrix::from_dense(n, e).unwrap()).unwrap();
        assert_eq!((d.merges()[0].left, d.merges()[0].right), (Node::Leaf(0), Node::Leaf(1)));
    }

    #[test]
    fn cut_extremes_and_errors() {
        let d = agglomerate_ward(&points(&[0.0, 5.0, 1.0, 9.0, 2.0])).unwrap();
        assert_eq!(cut(&d, 1).unwrap().labels(), &[1; 5]);
        assert_eq!(cut(&d, 5).unwrap().labels(), &[1, 2, 3, 4, 5]);
        assert!(matches!(cut(&d, 0), Err(Error::BadK { .. })));
        assert!(matches!(cut(&d, 6), Err(Error::BadK { .. })));
        for k in 1..=5 {
            let p = cut(&d, k).unwrap();
            assert_eq!(p.k(), k);
            assert!(p.sizes().iter().all(|&s| s > 0));
        }
    }

    #[test]
    fn rejects_tiny_matrix() {
        assert!(agglomerate_ward(&points(&[1.0])).is_err());
    }

    #[test]
    fn leaf_order_visits_every_leaf() {
        let d = agglomerate_ward(&points(&[0.0, 10.0, 0.2, 10.3, 5.0])).unwrap();
        let mut order = d.leaf_order();
        assert_eq!(order.len(), 5);
        // close points are adjacent
        let pos = |x: usize| order.iter().position(|&l| l == x).unwrap();
        assert_eq!((pos(0) as i64 - pos(2) as i64).abs(), 1);
        order.sort();
        assert_eq!(order, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn merge_list_round_trip() {
        let d = agglomerate_ward(&points(&[0.0, 0.1, 10.0, 10.1, 3.3])).unwrap();
        let mut buf = Vec::new();
        d.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("1 -3 -4 "));
        assert_eq!(text.lines().count(), 4);
        assert_eq!(Dendrogram::read_text(&buf[..]).unwrap(), d);
    }

    #[test]
    fn validates_structure() {
        let m = |l, r, h, s| Merge { left: l, right: r, height: h, size: s };
        assert!(Dendrogram::new(2, vec![m(Node::Leaf(0), Node::Leaf(1), 1.0, 2)]).is_ok());
        assert!(Dendrogram::new(2, vec![m(Node::Leaf(0), Node::Leaf(0), 1.0, 2)]).is_err());
        assert!(Dendrogram::new(2, vec![m(Node::Leaf(0), Node::Leaf(1), 1.0, 3)]).is_err());
        assert!(Dendrogram::new(3, vec![
            m(Node::Leaf(0), Node::Leaf(1), 2.0, 2),
            m(Node::Merge(0), Node::Leaf(2), 1.0, 3),
        ])
        .is_err());
        assert!(Dendrogram::new(3, vec![m(Node::Leaf(0), Node::Leaf(1), 2.0, 2)]).is_err());
        assert!(Dendrogram::read_text("1 -1 -2 0.5 2\n2 1 -3 x 3\n".as_bytes()).is_err());
        assert!(Dendrogram::read_text("2 -1 -2 0.5 2\n".as_bytes()).is_err());
    }
}
