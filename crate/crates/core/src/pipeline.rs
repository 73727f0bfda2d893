//! End-to-end wiring: representation, dissimilarity, Ward clustering and cut,
//! plus the file-level pipeline behind the command-line tool.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{Duration, NaiveDate};

use crate::cohort::{
    build_cohort, characteristics_csv, characteristics_table, characteristics_text, churn_table, ingest,
    write_series, ChurnConfig, CohortConfig, SubjectAttributes,
};
use crate::dissim::{pairwise_matrix, pairwise_matrix_jobs, Measure, MeasureConfig};
use crate::error::{Error, Result};
use crate::hcluster::{agglomerate_ward, cut, Dendrogram};
use crate::matrix::DissimilarityMatrix;
use crate::partition::{read_labels, write_labels, Partition};
use crate::represent::Representation;
use crate::series::{SeriesSet, SubjectId, VariableKind};
use crate::validate::{adjusted_rand, dunn, hubert_gamma, silhouette_avg, variation_of_information, DunnIndex};
use crate::viz::{
    file_name, render_cluster_heatmaps, render_cluster_means, render_dendrogram, render_weekly_boxplots, write_svg,
};

/// Named technique combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Moving-average trend (window 7), then correlation dissimilarity; k = 8.
    CorTrend,
    /// Complexity-invariant distance on raw series; k = 5.
    CidRaw,
}

impl Preset {
    pub fn representation(self) -> Representation {
        match self {
            Preset::CorTrend => Representation::Trend { window: 7 },
            Preset::CidRaw => Representation::Raw,
        }
    }

    pub fn measure(self) -> Measure {
        match self {
            Preset::CorTrend => Measure::Cor,
            Preset::CidRaw => Measure::Cid,
        }
    }

    pub fn default_k(self) -> usize {
        match self {
            Preset::CorTrend => 8,
            Preset::CidRaw => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::CorTrend => "cor-trend",
            Preset::CidRaw => "cid-raw",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cor-trend" => Ok(Preset::CorTrend),
            "cid-raw" => Ok(Preset::CidRaw),
            other => Err(Error::InvalidConfig(format!(
                "unknown preset `{other}` (expected cor-trend or cid-raw)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSettings {
    pub representation: Representation,
    pub measure: MeasureConfig,
    pub k: usize,
    /// Worker threads for the pairwise matrix; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl ClusterSettings {
    pub fn new(representation: Representation, measure: Measure, k: usize) -> Self {
        ClusterSettings {
            representation,
            measure: MeasureConfig::new(measure),
            k,
            jobs: None,
        }
    }

    pub fn preset(p: Preset) -> Self {
        ClusterSettings::new(p.representation(), p.measure(), p.default_k())
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRun {
    pub matrix: DissimilarityMatrix,
    pub dendrogram: Dendrogram,
    pub partition: Partition,
}

/// Applies the representation to every series.
pub fn represent(set: &SeriesSet, rep: Representation) -> Result<SeriesSet> {
    match rep {
        Representation::Raw => Ok(set.clone()),
        _ => set.map_values(|v| rep.apply(v)),
    }
}

/// Dissimilarity matrix of the represented series, tagged with its provenance.
pub fn compute_matrix(set: &SeriesSet, s: &ClusterSettings) -> Result<DissimilarityMatrix> {
    let rep = represent(set, s.representation)?;
    let mut m = match s.jobs {
        Some(j) => pairwise_matrix_jobs(&rep, &s.measure, j)?,
        None => pairwise_matrix(&rep, &s.measure)?,
    };
    s.representation.record(m.tag_mut());
    Ok(m)
}

/// Matrix, Ward dendrogram and `k`-cluster cut.
pub fn cluster(set: &SeriesSet, s: &ClusterSettings) -> Result<ClusterRun> {
    if s.k == 0 || s.k > set.len() {
        return Err(Error::BadK { k: s.k, n: set.len() });
    }
    let matrix = compute_matrix(set, s)?;
    let dendrogram = agglomerate_ward(&matrix)?;
    let partition = cut(&dendrogram, s.k)?;
    Ok(ClusterRun {
        matrix,
        dendrogram,
        partition,
    })
}

/// Parses a flat `key = value` file. Blank lines and `#` comments are
/// ignored; keys are normalized to lowercase with `-` separators.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(n as u64 + 1, format!("expected `key = value`, got `{line}`")))?;
        let key = normalize_key(key);
        if !PipelineConfig::KEYS.contains(&key.as_str()) {
            return Err(Error::parse(n as u64 + 1, format!("unknown key `{key}`")));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

pub fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapScale {
    PerCluster,
    Global,
}

impl FromStr for HeatmapScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cluster" => Ok(HeatmapScale::PerCluster),
            "global" => Ok(HeatmapScale::Global),
            other => Err(Error::InvalidConfig(format!(
                "heatmap-normalize must be `cluster` or `global`, got `{other}`"
            ))),
        }
    }
}

/// Everything a full pipeline run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub activity: PathBuf,
    pub attributes: PathBuf,
    pub out: PathBuf,
    pub truth: Option<PathBuf>,
    pub cohort: CohortConfig,
    pub cluster: ClusterSettings,
    pub churn_window: u32,
    pub churn_checkpoints: Vec<NaiveDate>,
    pub heatmap: HeatmapScale,
}

impl PipelineConfig {
    pub const KEYS: [&'static str; 21] = [
        "activity",
        "attributes",
        "out",
        "truth",
        "start",
        "weeks",
        "variable",
        "min-active-days",
        "require-purchase",
        "sample-size",
        "seed",
        "preset",
        "representation",
        "measure",
        "k",
        "cort-k",
        "ce-epsilon",
        "jobs",
        "churn-window",
        "churn-checkpoints",
        "heatmap-normalize",
    ];

    /// Builds a configuration from key-value pairs, filling defaults.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !Self::KEYS.contains(&k.as_str())) {
            return Err(Error::InvalidConfig(format!("unknown key `{k}`")));
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let req = |k: &str| get(k).ok_or_else(|| Error::InvalidConfig(format!("missing `{k}`")));
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::InvalidConfig(format!("bad value `{v}` for `{key}`")))
        }

        let start = parse_date(req("start")?)?;
        let weeks: usize = get("weeks").map_or(Ok(3), |v| num("weeks", v))?;
        let variable: VariableKind = get("variable").map_or(Ok(VariableKind::Time), str::parse)?;
        let mut cohort = CohortConfig::new(start, weeks, variable);
        if let Some(v) = get("min-active-days") {
            cohort.min_active_days_per_week = num("min-active-days", v)?;
        }
        if let Some(v) = get("require-purchase") {
            cohort.require_purchase_in_period = parse_bool("require-purchase", v)?;
        }
        if let Some(v) = get("sample-size") {
            cohort.sample_size = num("sample-size", v)?;
        }
        if let Some(v) = get("seed") {
            cohort.rng_seed = num("seed", v)?;
        }
        cohort.validate()?;

        let preset: Preset = get("preset").map_or(Ok(Preset::CorTrend), str::parse)?;
        let mut cluster = ClusterSettings::preset(preset);
        if let Some(v) = get("representation") {
            cluster.representation = v.parse()?;
        }
        if let Some(v) = get("measure") {
            cluster.measure.measure = v.parse()?;
        }
        if let Some(v) = get("k") {
            cluster.k = num("k", v)?;
        }
        if let Some(v) = get("cort-k") {
            cluster.measure.cort_k = num("cort-k", v)?;
        }
        if let Some(v) = get("ce-epsilon") {
            cluster.measure.ce_epsilon = num("ce-epsilon", v)?;
        }
        if let Some(v) = get("jobs") {
            cluster.jobs = Some(num("jobs", v)?);
        }
        cluster.measure.validate()?;

        let churn_window = get("churn-window").map_or(Ok(30), |v| num("churn-window", v))?;
        let churn_checkpoints = match get("churn-checkpoints") {
            Some(v) => parse_dates(v)?,
            None => default_checkpoints(cohort.p_end()),
        };
        Ok(PipelineConfig {
            activity: req("activity")?.into(),
            attributes: req("attributes")?.into(),
            out: req("out")?.into(),
            truth: get("truth").map(PathBuf::from),
            cohort,
            cluster,
            churn_window,
            churn_checkpoints,
            heatmap: get("heatmap-normalize").map_or(Ok(HeatmapScale::PerCluster), str::parse)?,
        })
    }
}

/// Churn checkpoints 30, 60 and 90 days after the period end.
pub fn default_checkpoints(p_end: NaiveDate) -> Vec<NaiveDate> {
    [30, 60, 90].iter().map(|&d| p_end + Duration::days(d)).collect()
}

pub fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|_| Error::InvalidConfig(format!("bad date `{s}` (expected YYYY-MM-DD)")))
}

pub fn parse_dates(s: &str) -> Result<Vec<NaiveDate>> {
    s.split(',').filter(|d| !d.trim().is_empty()).map(parse_date).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::InvalidConfig(format!("bad boolean `{other}` for `{key}`"))),
    }
}

/// Internal indices of a partition, plus agreement with a reference partition
/// when one is supplied. Undefined indices are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub k: usize,
    pub silhouette: Option<f64>,
    pub dunn: Option<DunnIndex>,
    pub hubert_gamma: Option<f64>,
    pub ari: Option<f64>,
    pub vi: Option<f64>,
}

pub fn validation_report(
    d: &DissimilarityMatrix,
    p: &Partition,
    truth: Option<&Partition>,
) -> Result<ValidationReport> {
    if d.size() != p.len() {
        return Err(Error::LengthMismatch {
            left: d.size(),
            right: p.len(),
        });
    }
    let (ari, vi) = match truth {
        Some(t) => (Some(adjusted_rand(p, t)?), Some(variation_of_information(p, t)?)),
        None => (None, None),
    };
    Ok(ValidationReport {
        k: p.k(),
        silhouette: silhouette_avg(d, p).ok(),
        dunn: dunn(d, p).ok(),
        hubert_gamma: hubert_gamma(d, p).ok(),
        ari,
        vi,
    })
}

impl ValidationReport {
    pub fn to_text(&self) -> String {
        fn show<T: fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map_or_else(|| "undefined".to_string(), ToString::to_string)
        }
        let mut out = format!(
            "k = {}\nsilhouette = {}\ndunn = {}\nhubert_gamma = {}\n",
            self.k,
            show(&self.silhouette),
            show(&self.dunn),
            show(&self.hubert_gamma)
        );
        if self.ari.is_some() {
            out.push_str(&format!("ari = {}\nvi = {}\n", show(&self.ari), show(&self.vi)));
        }
        out
    }
}

/// Reads a labels file and aligns it to `ids`.
pub fn read_labels_for(path: &Path, ids: &[SubjectId]) -> Result<Partition> {
    let (file_ids, p) = read_labels(open(path)?)?;
    if file_ids != ids {
        return Err(Error::InvalidPartition(format!(
            "{} does not list the same subjects in the same order",
            path.display()
        )));
    }
    Ok(p)
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_string(path: &Path, s: &str) -> Result<()> {
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `matrix.txt`, `dendrogram.txt` and `labels.csv` into `dir`.
pub fn write_cluster_run(dir: &Path, run: &ClusterRun) -> Result<()> {
    let matrix = dir.join("matrix.txt");
    write_with(&matrix, |w| run.matrix.write_text(w).map_err(|e| Error::io(&matrix, e)))?;
    let dend = dir.join("dendrogram.txt");
    write_with(&dend, |w| run.dendrogram.write_text(w).map_err(|e| Error::io(&dend, e)))?;
    write_with(&dir.join("labels.csv"), |w| write_labels(w, run.matrix.ids(), &run.partition))
}

/// Writes the characteristics and churn tables as CSV and aligned text.
pub fn write_reports(
    dir: &Path,
    set: &SeriesSet,
    p: &Partition,
    attrs: &BTreeMap<SubjectId, SubjectAttributes>,
    churn: &ChurnConfig,
) -> Result<()> {
    let ids = set.ids();
    let chars = characteristics_table(p, &ids, attrs)?;
    write_string(&dir.join("characteristics.csv"), &characteristics_csv(&chars)?)?;
    write_string(&dir.join("characteristics.txt"), &characteristics_text(&chars))?;
    let table = churn_table(p, &ids, attrs, churn)?;
    write_string(&dir.join("churn.csv"), &table.to_csv()?)?;
    write_string(&dir.join("churn.txt"), &table.to_text())
}

/// Renders every figure that applies and returns the written file names.
pub fn write_figures(
    dir: &Path,
    set: &SeriesSet,
    p: &Partition,
    dend: Option<&Dendrogram>,
    scale: HeatmapScale,
) -> Result<Vec<String>> {
    let kind = set.kind();
    let k = p.k();
    let mut written = Vec::new();
    let mut emit = |report: &str, svg: String| -> Result<()> {
        let name = file_name(report, kind, k);
        write_svg(&dir.join(&name), &svg)?;
        written.push(name);
        Ok(())
    };
    if let Some(d) = dend {
        emit("dendrogram", render_dendrogram(d, Some(k), &format!("Ward dendrogram ({kind})"))?)?;
    }
    emit(
        "means",
        render_cluster_means(set, p, set.event_boundaries(), &format!("Cluster means ({kind})"))?,
    )?;
    emit(
        "heatmap",
        render_cluster_heatmaps(
            set,
            p,
            scale == HeatmapScale::PerCluster,
            dend,
            &format!("Cluster heatmaps ({kind})"),
        )?,
    )?;
    if set.length() % 7 == 0 {
        emit(
            "boxplot",
            render_weekly_boxplots(set, p, &format!("Weekly totals per subject ({kind})"))?,
        )?;
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSummary {
    pub subjects: usize,
    pub validation: ValidationReport,
    pub figures: Vec<String>,
}

/// Ingestion, cohort, clustering, validation, reports and figures, with every
/// artifact written under `cfg.out`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineSummary> {
    let store = ingest(open(&cfg.activity)?, open(&cfg.attributes)?)?;
    let set = build_cohort(&store, &cfg.cohort)?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    write_with(&cfg.out.join("series.csv"), |w| write_series(w, &set))?;

    let run = cluster(&set, &cfg.cluster)?;
    write_cluster_run(&cfg.out, &run)?;

    let truth = cfg
        .truth
        .as_deref()
        .map(|p| read_truth_for(p, &set.ids()))
        .transpose()?;
    let validation = validation_report(&run.matrix, &run.partition, truth.as_ref())?;
    write_string(&cfg.out.join("validation.txt"), &validation.to_text())?;

    let churn = ChurnConfig::new(cfg.churn_checkpoints.clone(), cfg.churn_window, cfg.cohort.p_end())?;
    write_reports(&cfg.out, &set, &run.partition, store.attributes(), &churn)?;
    let figures = write_figures(&cfg.out, &set, &run.partition, Some(&run.dendrogram), cfg.heatmap)?;
    Ok(PipelineSummary {
        subjects: set.len(),
        validation,
        figures,
    })
}

/// Reads a reference labels file, keeping only the subjects in `ids`.
pub fn read_truth_for(path: &Path, ids: &[SubjectId]) -> Result<Partition> {
    let (file_ids, p) = read_labels(open(path)?)?;
    let index: BTreeMap<&SubjectId, usize> = file_ids.iter().zip(p.labels().iter().copied()).collect();
    let labels = ids
        .iter()
        .map(|id| {
            index.get(id).copied().ok_or_else(|| {
                Error::InvalidPartition(format!("{} has no label for subject {id}", path.display()))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Partition::from_keys(&labels)
}
