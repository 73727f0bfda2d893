//! Static SVG reports: dendrogram, per-cluster mean series, per-cluster
//! heatmaps and weekly box plots.
//!
//! Every drawn element that encodes a number also carries it verbatim in a
//! `data-*` attribute, so values can be read back from the file exactly.
//! Output is deterministic and self-contained.

use std::path::Path;

use crate::error::{Error, Result};
use crate::hcluster::{Dendrogram, Node};
use crate::partition::Partition;
use crate::series::{SeriesSet, VariableKind};

const LOW: [f64; 3] = [247.0, 251.0, 255.0];
const HIGH: [f64; 3] = [8.0, 48.0, 107.0];
const MARGIN: f64 = 40.0;

/// File name for a report: `<report>_<variable>_<k>.svg`.
pub fn file_name(report: &str, variable: VariableKind, k: usize) -> String {
    format!("{report}_{variable}_{k}.svg")
}

pub fn write_svg(path: &Path, svg: &str) -> Result<()> {
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Fill color for `t` in `[0, 1]` on the light-to-dark blue ramp.
pub fn ramp_color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let c: Vec<u8> = (0..3)
        .map(|i| (LOW[i] + (HIGH[i] - LOW[i]) * t).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn c(v: f64) -> String {
    format!("{v:.2}")
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64, title: &str) -> Self {
        let mut s = Svg {
            body: String::new(),
            width,
            height,
        };
        s.text(width / 2.0, 20.0, "middle", title, "title");
        s
    }

    fn push(&mut self, element: impl AsRef<str>) {
        self.body.push_str("  ");
        self.body.push_str(element.as_ref());
        self.body.push('\n');
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, text: &str, class: &str) {
        self.push(format!(
            r#"<text class="{class}" x="{}" y="{}" text-anchor="{anchor}" font-family="sans-serif" font-size="12">{}</text>"#,
            c(x),
            c(y),
            escape(text)
        ));
    }

    fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n  <rect width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n{}</svg>\n",
            self.body,
            w = c(self.width),
            h = c(self.height),
        )
    }
}

fn check_sizes(s: &SeriesSet, p: &Partition) -> Result<()> {
    if s.len() != p.len() {
        return Err(Error::LengthMismatch {
            left: s.len(),
            right: p.len(),
        });
    }
    Ok(())
}

/// Height at which a cut leaves `k` clusters: midway between the last merge
/// kept and the first merge undone.
pub fn cut_height(dend: &Dendrogram, k: usize) -> Result<f64> {
    let n = dend.leaf_count();
    if k == 0 || k > n {
        return Err(Error::BadK { k, n });
    }
    let h = dend.heights();
    let top = h.last().copied().unwrap_or(0.0);
    let kept = if k == n { 0.0 } else { h[n - k - 1] };
    let undone = if k == 1 { top * 1.05 } else { h[n - k] };
    Ok((kept + undone) / 2.0)
}

/// Leaves along the x-axis in tree order, merge heights on the y-axis.
pub fn render_dendrogram(dend: &Dendrogram, cut_k: Option<usize>, title: &str) -> Result<String> {
    let n = dend.leaf_count();
    let plot_w = (n as f64 * 14.0).max(200.0);
    let plot_h = 300.0;
    let mut svg = Svg::new(plot_w + 2.0 * MARGIN, plot_h + 2.0 * MARGIN + 20.0, title);
    let top = dend.heights().last().copied().unwrap_or(0.0);
    let scale = if top > 0.0 { plot_h / (top * 1.05) } else { 0.0 };
    let base = MARGIN + 20.0 + plot_h;
    let y = |h: f64| base - h * scale;
    let step = plot_w / n as f64;

    let mut leaf_x = vec![0.0; n];
    for (pos, &leaf) in dend.leaf_order().iter().enumerate() {
        leaf_x[leaf] = MARGIN + step * (pos as f64 + 0.5);
    }
    let mut merge_x = Vec::with_capacity(dend.merges().len());
    let pos = |node: Node, merge_x: &[f64]| match node {
        Node::Leaf(i) => (leaf_x[i], 0.0),
        Node::Merge(m) => (merge_x[m], dend.merges()[m].height),
    };
    svg.push(format!(
        r##"<line class="axis" x1="{x}" y1="{y0}" x2="{x}" y2="{y1}" stroke="#000000"/>"##,
        x = c(MARGIN - 5.0),
        y0 = c(base),
        y1 = c(y(top))
    ));
    for (m, merge) in dend.merges().iter().enumerate() {
        let (xl, hl) = pos(merge.left, &merge_x);
        let (xr, hr) = pos(merge.right, &merge_x);
        let ym = y(merge.height);
        svg.push(format!(
            r##"<path class="merge" data-merge="{}" data-height="{}" data-size="{}" d="M{} {} V{} H{} V{}" fill="none" stroke="#08306b"/>"##,
            m + 1,
            merge.height,
            merge.size,
            c(xl),
            c(y(hl)),
            c(ym),
            c(xr),
            c(y(hr))
        ));
        merge_x.push((xl + xr) / 2.0);
    }
    for (pos, leaf) in dend.leaf_order().into_iter().enumerate() {
        svg.push(format!(
            r#"<text class="leaf" data-leaf="{leaf}" x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="8">{leaf}</text>"#,
            c(MARGIN + step * (pos as f64 + 0.5)),
            c(base + 12.0)
        ));
    }
    if let Some(k) = cut_k {
        let h = cut_height(dend, k)?;
        svg.push(format!(
            r##"<line class="cut" data-k="{k}" data-height="{h}" x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#cb181d" stroke-dasharray="4 3"/>"##,
            c(MARGIN),
            c(MARGIN + plot_w),
            y = c(y(h))
        ));
    }
    Ok(svg.finish())
}

/// Pointwise mean series of each cluster, in label order.
pub fn cluster_means(s: &SeriesSet, p: &Partition) -> Result<Vec<Vec<f64>>> {
    check_sizes(s, p)?;
    Ok(p.clusters()
        .iter()
        .map(|members| {
            let mut mean = vec![0.0; s.length()];
            for &i in members {
                for (m, v) in mean.iter_mut().zip(s.series()[i].values()) {
                    *m += v;
                }
            }
            mean.iter().map(|m| m / members.len() as f64).collect()
        })
        .collect())
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 140.0;

/// One panel per cluster with its mean series and a vertical line at every
/// event boundary (the first day of each new event).
pub fn render_cluster_means(s: &SeriesSet, p: &Partition, events: &[usize], title: &str) -> Result<String> {
    let means = cluster_means(s, p)?;
    if let Some(&b) = events.iter().find(|&&b| b > s.length()) {
        return Err(Error::InvalidSeriesSet(format!("event boundary {b} beyond length {}", s.length())));
    }
    let n = s.length();
    let row_h = PANEL_H + 30.0;
    let mut svg = Svg::new(PANEL_W + 2.0 * MARGIN, MARGIN + row_h * means.len() as f64 + 10.0, title);
    let x = |day: f64| MARGIN + PANEL_W * (day + 0.5) / n as f64;
    let sizes = p.sizes();
    for (ci, mean) in means.iter().enumerate() {
        let top = MARGIN + row_h * ci as f64 + 20.0;
        let max = mean.iter().copied().fold(0.0, f64::max);
        let min = mean.iter().copied().fold(0.0, f64::min);
        let span = if max > min { max - min } else { 1.0 };
        let y = |v: f64| top + PANEL_H - (v - min) / span * PANEL_H;
        svg.text(MARGIN, top - 4.0, "start", &format!("cluster {} (n = {})", ci + 1, sizes[ci]), "label");
        svg.push(format!(
            r##"<rect class="panel" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#969696"/>"##,
            c(MARGIN),
            c(top),
            c(PANEL_W),
            c(PANEL_H)
        ));
        for &b in events {
            let xb = x(b as f64 - 0.5);
            svg.push(format!(
                r##"<line class="event" data-cluster="{}" data-day="{b}" x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#737373" stroke-dasharray="3 3"/>"##,
                ci + 1,
                c(top),
                c(top + PANEL_H),
                x = c(xb)
            ));
        }
        let points: Vec<String> = mean
            .iter()
            .enumerate()
            .map(|(d, &v)| format!("{},{}", c(x(d as f64)), c(y(v))))
            .collect();
        svg.push(format!(
            r##"<polyline class="mean" data-cluster="{}" data-values="{}" points="{}" fill="none" stroke="#08306b" stroke-width="1.5"/>"##,
            ci + 1,
            join(mean),
            points.join(" ")
        ));
    }
    Ok(svg.finish())
}

/// Row order of each cluster's heatmap: dendrogram leaf order when given,
/// otherwise series order.
pub fn heatmap_rows(p: &Partition, order: Option<&Dendrogram>) -> Result<Vec<Vec<usize>>> {
    let Some(dend) = order else {
        return Ok(p.clusters());
    };
    if dend.leaf_count() != p.len() {
        return Err(Error::LengthMismatch {
            left: dend.leaf_count(),
            right: p.len(),
        });
    }
    let mut rows = vec![Vec::new(); p.k()];
    for leaf in dend.leaf_order() {
        rows[p.labels()[leaf] - 1].push(leaf);
    }
    Ok(rows)
}

fn min_max<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// One heatmap per cluster: rows are series, columns are days. Colors are
/// min-max scaled within each cluster when `normalize_per_cluster` is set,
/// over the whole set otherwise.
pub fn render_cluster_heatmaps(
    s: &SeriesSet,
    p: &Partition,
    normalize_per_cluster: bool,
    order: Option<&Dendrogram>,
    title: &str,
) -> Result<String> {
    check_sizes(s, p)?;
    let rows = heatmap_rows(p, order)?;
    let n = s.length();
    let cell_w = (PANEL_W / n as f64).max(4.0);
    let cell_h = 4.0;
    let global = min_max(s.series().iter().flat_map(|t| t.values()));
    let total_h: f64 = rows.iter().map(|r| r.len() as f64 * cell_h + 30.0).sum();
    let mut svg = Svg::new(cell_w * n as f64 + 2.0 * MARGIN, MARGIN + total_h + 10.0, title);
    let mut top = MARGIN + 20.0;
    for (ci, members) in rows.iter().enumerate() {
        let (lo, hi) = if normalize_per_cluster {
            min_max(members.iter().flat_map(|&i| s.series()[i].values()))
        } else {
            global
        };
        let span = hi - lo;
        svg.text(MARGIN, top - 4.0, "start", &format!("cluster {} (n = {})", ci + 1, members.len()), "label");
        svg.push(format!(
            r#"<g class="heatmap" data-cluster="{}" data-min="{lo}" data-max="{hi}">"#,
            ci + 1
        ));
        for (r, &i) in members.iter().enumerate() {
            for (d, &v) in s.series()[i].values().iter().enumerate() {
                let t = if span > 0.0 { (v - lo) / span } else { 0.0 };
                svg.push(format!(
                    r#"  <rect data-row="{i}" data-col="{d}" data-value="{v}" x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                    c(MARGIN + d as f64 * cell_w),
                    c(top + r as f64 * cell_h),
                    c(cell_w),
                    c(cell_h),
                    ramp_color(t)
                ));
            }
        }
        svg.push("</g>");
        top += members.len() as f64 * cell_h + 30.0;
    }
    Ok(svg.finish())
}

/// Quantile by linear interpolation between order statistics of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Most extreme observations within 1.5 IQR of the box.
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

impl BoxStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
        let iqr = q3 - q1;
        let (fence_lo, fence_hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let inside = v.iter().copied().filter(|&x| x >= fence_lo && x <= fence_hi);
        let (whisker_lo, whisker_hi) = inside.fold((q1, q3), |(lo, hi), x| (lo.min(x), hi.max(x)));
        let outliers = v.iter().copied().filter(|&x| x < fence_lo || x > fence_hi).collect();
        Ok(BoxStats {
            q1,
            median,
            q3,
            whisker_lo,
            whisker_hi,
            outliers,
        })
    }
}

/// Per-series weekly sums.
pub fn weekly_sums(s: &SeriesSet) -> Result<Vec<Vec<f64>>> {
    if s.length() % 7 != 0 {
        return Err(Error::PartialWeek { len: s.length() });
    }
    Ok(s.series()
        .iter()
        .map(|t| t.values().chunks(7).map(|w| w.iter().sum()).collect())
        .collect())
}

/// Box statistics for `[cluster][week]`.
pub fn weekly_box_stats(s: &SeriesSet, p: &Partition) -> Result<Vec<Vec<BoxStats>>> {
    check_sizes(s, p)?;
    let sums = weekly_sums(s)?;
    let weeks = s.length() / 7;
    p.clusters()
        .iter()
        .map(|members| {
            (0..weeks)
                .map(|w| {
                    let v: Vec<f64> = members.iter().map(|&i| sums[i][w]).collect();
                    BoxStats::from_values(&v)
                })
                .collect()
        })
        .collect()
}

/// Per cluster, one box per week of the per-series weekly sums.
pub fn render_weekly_boxplots(s: &SeriesSet, p: &Partition, title: &str) -> Result<String> {
    let stats = weekly_box_stats(s, p)?;
    let weeks = s.length() / 7;
    let row_h = PANEL_H + 30.0;
    let mut svg = Svg::new(PANEL_W + 2.0 * MARGIN, MARGIN + row_h * stats.len() as f64 + 10.0, title);
    let slot = PANEL_W / weeks as f64;
    let sizes = p.sizes();
    for (ci, boxes) in stats.iter().enumerate() {
        let top = MARGIN + row_h * ci as f64 + 20.0;
        let hi = boxes
            .iter()
            .flat_map(|b| b.outliers.iter().copied().chain([b.whisker_hi]))
            .fold(0.0, f64::max);
        let lo = boxes
            .iter()
            .flat_map(|b| b.outliers.iter().copied().chain([b.whisker_lo]))
            .fold(0.0, f64::min);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let y = |v: f64| top + PANEL_H - (v - lo) / span * PANEL_H;
        svg.text(MARGIN, top - 4.0, "start", &format!("cluster {} (n = {})", ci + 1, sizes[ci]), "label");
        for (w, b) in boxes.iter().enumerate() {
            let xc = MARGIN + slot * (w as f64 + 0.5);
            let half = slot * 0.3;
            svg.push(format!(
                r#"<g class="box" data-cluster="{}" data-week="{}" data-q1="{}" data-median="{}" data-q3="{}" data-whisker-lo="{}" data-whisker-hi="{}">"#,
                ci + 1,
                w + 1,
                b.q1,
                b.median,
                b.q3,
                b.whisker_lo,
                b.whisker_hi
            ));
            svg.push(format!(
                r##"  <line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#000000"/>"##,
                c(y(b.whisker_lo)),
                c(y(b.whisker_hi)),
                x = c(xc)
            ));
            svg.push(format!(
                r##"  <rect x="{}" y="{}" width="{}" height="{}" fill="#c6dbef" stroke="#08306b"/>"##,
                c(xc - half),
                c(y(b.q3)),
                c(2.0 * half),
                c(y(b.q1) - y(b.q3))
            ));
            svg.push(format!(
                r##"  <line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#08306b" stroke-width="2"/>"##,
                c(xc - half),
                c(xc + half),
                y = c(y(b.median))
            ));
            for &o in &b.outliers {
                svg.push(format!(
                    r##"  <circle class="outlier" data-value="{o}" cx="{}" cy="{}" r="2" fill="none" stroke="#000000"/>"##,
                    c(xc),
                    c(y(o))
                ));
            }
            svg.push("</g>");
        }
    }
    Ok(svg.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hcluster::{agglomerate_ward, Merge};
    use crate::matrix::DissimilarityMatrix;
    use crate::series::{SubjectId, TimeSeries};
    use chrono::NaiveDate;

    fn set(rows: &[Vec<f64>]) -> SeriesSet {
        let d = NaiveDate::from_ymd_opt(2015, 6, 11).unwrap();
        let series = rows
            .iter()
            .enumerate()
            .map(|(i, v)| TimeSeries::new(SubjectId::new(i.to_string()), d, VariableKind::Purchase, v.clone()).unwrap())
            .collect();
        SeriesSet::new(series, SeriesSet::weekly_boundaries(rows[0].len())).unwrap()
    }

    fn parse(svg: &str) -> roxmltree::Document<'_> {
        roxmltree::Document::parse(svg).expect("well-formed svg")
    }

    #[test]
    fn two_leaf_dendrogram() {
        let d = Dendrogram::new(
            2,
            vec![Merge {
                left: Node::Leaf(0),
                right: Node::Leaf(1),
                height: 2.5,
                size: 2,
            }],
        )
        .unwrap();
        let svg = render_dendrogram(&d, Some(2), "a & b").unwrap();
        let doc = parse(&svg);
        let merges: Vec<_> = doc.descendants().filter(|n| n.attribute("class") == Some("merge")).collect();
        assert_eq!(merges.len(), 1);
        assert_eq!(merges[0].attribute("data-height"), Some("2.5"));
        assert!(svg.contains("a &amp; b"));
        assert!(!svg.contains("href"));
    }

    #[test]
    fn separated_pairs_heights_round_trip() {
        let xs = [0.0, 0.1, 10.0, 10.1];
        let m = DissimilarityMatrix::from_dense(4, (0..16).map(|k| f64::abs(xs[k / 4] - xs[k % 4])).collect()).unwrap();
        let d = agglomerate_ward(&m).unwrap();
        let svg = render_dendrogram(&d, Some(2), "ward").unwrap();
        let doc = parse(&svg);
        let heights: Vec<f64> = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("merge"))
            .map(|n| n.attribute("data-height").unwrap().parse().unwrap())
            .collect();
        assert_eq!(heights, d.heights());
        let cut: f64 = doc
            .descendants()
            .find(|n| n.attribute("class") == Some("cut"))
            .and_then(|n| n.attribute("data-height"))
            .unwrap()
            .parse()
            .unwrap();
        assert!(cut > heights[1] && cut < heights[2]);
    }

    #[test]
    fn means_and_event_lines() {
        let s = set(&[vec![1.0; 14], vec![1.0; 14]]);
        let p = Partition::new(vec![1, 1]).unwrap();
        assert_eq!(cluster_means(&s, &p).unwrap(), vec![vec![1.0; 14]]);
        let svg = render_cluster_means(&s, &p, &[7], "means").unwrap();
        let doc = parse(&svg);
        let days: Vec<_> = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("event"))
            .map(|n| n.attribute("data-day").unwrap())
            .collect();
        assert_eq!(days, vec!["7"]);
    }

    #[test]
    fn heatmap_normalization() {
        let s = set(&[vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0], vec![3.0; 7], vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 60.0]]);
        let p = Partition::new(vec![1, 1, 2]).unwrap();
        let svg = render_cluster_heatmaps(&s, &p, true, None, "h").unwrap();
        let doc = parse(&svg);
        let fill = |row: &str, col: &str| {
            doc.descendants()
                .find(|n| n.attribute("data-row") == Some(row) && n.attribute("data-col") == Some(col))
                .and_then(|n| n.attribute("fill"))
                .unwrap()
                .to_string()
        };
        let top = ramp_color(1.0);
        assert_eq!(fill("0", "6"), top);
        assert_eq!(fill("2", "6"), top);
        let constant: Vec<String> = (0..7).map(|d| fill("1", &d.to_string())).collect();
        assert!(constant.iter().all(|f| *f == constant[0]));

        let svg = render_cluster_heatmaps(&s, &p, false, None, "h").unwrap();
        let doc = parse(&svg);
        let f = doc
            .descendants()
            .find(|n| n.attribute("data-row") == Some("0") && n.attribute("data-col") == Some("6"))
            .and_then(|n| n.attribute("fill"))
            .unwrap();
        assert_ne!(f, top);
    }

    #[test]
    fn boxplot_degenerate_and_zero() {
        let s = set(&[vec![1.0; 14], vec![1.0; 14], vec![0.0; 14]]);
        let p = Partition::new(vec![1, 1, 2]).unwrap();
        let stats = weekly_box_stats(&s, &p).unwrap();
        assert_eq!(stats[0][0].median, 7.0);
        assert_eq!(stats[0][0].q1, 7.0);
        assert_eq!(stats[1][1].q3, 0.0);
        parse(&render_weekly_boxplots(&s, &p, "b").unwrap());
        let short = set(&[vec![1.0; 10], vec![1.0; 10]]);
        assert!(matches!(
            render_weekly_boxplots(&short, &Partition::new(vec![1, 1]).unwrap(), "b"),
            Err(Error::PartialWeek { len: 10 })
        ));
    }

    #[test]
    fn quantiles_and_outliers() {
        let b = BoxStats::from_values(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (2.0, 3.0, 4.0));
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!((b.whisker_lo, b.whisker_hi), (1.0, 4.0));
        assert_eq!(quantile(&[0.0, 10.0], 0.25), 2.5);
    }

    #[test]
    fn color_ramp_ends() {
        assert_eq!(ramp_color(0.0), "#f7fbff");
        assert_eq!(ramp_color(1.0), "#08306b");
    }
}
