use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tsclust::cohort::{build_cohort, ingest, read_attributes, read_series, write_activity, write_attributes, write_series, ChurnConfig, CohortConfig};
use tsclust::dissim::Measure;
use tsclust::hcluster::Dendrogram;
use tsclust::matrix::DissimilarityMatrix;
use tsclust::partition::write_labels;
use tsclust::pipeline::{
    cluster, create, default_checkpoints, normalize_key, open, parse_config, parse_dates, read_labels_for,
    read_truth_for, run_pipeline, validation_report, write_cluster_run, write_figures, write_reports, ClusterSettings,
    HeatmapScale, PipelineConfig, Preset,
};
use tsclust::represent::Representation;
use tsclust::series::VariableKind;
use tsclust::synthgen::{generate, to_telemetry, BenchmarkSpec};

#[derive(Parser)]
#[command(name = "tsclust", version, about = "Cluster daily behavioral time series by shape and complexity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic benchmark as telemetry CSVs plus its ground truth.
    Synth(SynthArgs),
    /// Filter and sample a cohort; write its series CSV.
    Cohort(CohortArgs),
    /// Compute the dissimilarity matrix, Ward dendrogram and labels.
    Cluster(ClusterArgs),
    /// Print validity indices for a labels file.
    Validate(ValidateArgs),
    /// Write the per-cluster characteristics and churn tables.
    Report(ReportArgs),
    /// Write the SVG figures.
    Render(RenderArgs),
    /// Run every stage from one configuration file.
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Benchmark {
    Shape,
    Shift,
    Sparse,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    benchmark: Benchmark,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    n_per_cluster: Option<usize>,
    #[arg(long)]
    noise_sd: Option<f64>,
    #[arg(long)]
    sparsity: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CohortArgs {
    #[arg(long)]
    activity: PathBuf,
    #[arg(long)]
    attributes: PathBuf,
    /// First day of the studied period (YYYY-MM-DD).
    #[arg(long)]
    start: String,
    #[arg(long, default_value_t = 3)]
    weeks: usize,
    #[arg(long, default_value = "time")]
    variable: VariableKind,
    #[arg(long)]
    min_active_days: Option<u32>,
    #[arg(long)]
    require_purchase: Option<bool>,
    #[arg(long, default_value_t = 1000)]
    sample_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output series CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MethodArgs {
    #[arg(long, value_parser = parse_preset, default_value = "cor-trend")]
    preset: Preset,
    /// Overrides the preset: raw, trend:W, znorm, paa:W or dwt:LEVEL:KEEP.
    #[arg(long)]
    representation: Option<Representation>,
    /// Overrides the preset: euclidean, cor, cort, dtw or cid.
    #[arg(long)]
    measure: Option<Measure>,
    /// Cluster count; defaults to the preset's.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    cort_k: Option<f64>,
    #[arg(long)]
    ce_epsilon: Option<f64>,
    /// Worker threads for the pairwise matrix; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: tsclust::Error| e.to_string())
}

impl MethodArgs {
    fn settings(&self) -> Result<ClusterSettings> {
        let mut s = ClusterSettings::preset(self.preset);
        if let Some(r) = self.representation {
            s.representation = r;
        }
        if let Some(m) = self.measure {
            s.measure.measure = m;
        }
        if let Some(k) = self.k {
            s.k = k;
        }
        if let Some(v) = self.cort_k {
            s.measure.cort_k = v;
        }
        if let Some(v) = self.ce_epsilon {
            s.measure.ce_epsilon = v;
        }
        s.jobs = self.jobs;
        s.measure.validate()?;
        Ok(s)
    }
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    series: PathBuf,
    #[command(flatten)]
    method: MethodArgs,
    /// Output directory for matrix.txt, dendrogram.txt and labels.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Reference labels for ARI and VI.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    series: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    attributes: PathBuf,
    #[arg(long, default_value_t = 30)]
    churn_window: u32,
    /// Comma-separated dates; defaults to 30, 60 and 90 days after the period.
    #[arg(long)]
    churn_checkpoints: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    series: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Merge list; enables the dendrogram figure and heatmap row ordering.
    #[arg(long)]
    dendrogram: Option<PathBuf>,
    #[arg(long, default_value = "cluster")]
    heatmap_normalize: HeatmapScale,
    #[arg(long)]
    out: PathBuf,
}

/// Flags mirror the configuration keys and override the file's values.
#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    activity: Option<String>,
    #[arg(long)]
    attributes: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    truth: Option<String>,
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    weeks: Option<String>,
    #[arg(long)]
    variable: Option<String>,
    #[arg(long)]
    min_active_days: Option<String>,
    #[arg(long)]
    require_purchase: Option<String>,
    #[arg(long)]
    sample_size: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    representation: Option<String>,
    #[arg(long)]
    measure: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    cort_k: Option<String>,
    #[arg(long)]
    ce_epsilon: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
    #[arg(long)]
    churn_window: Option<String>,
    #[arg(long)]
    churn_checkpoints: Option<String>,
    #[arg(long)]
    heatmap_normalize: Option<String>,
}

impl PipelineArgs {
    fn overrides(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("activity", &self.activity),
            ("attributes", &self.attributes),
            ("out", &self.out),
            ("truth", &self.truth),
            ("start", &self.start),
            ("weeks", &self.weeks),
            ("variable", &self.variable),
            ("min-active-days", &self.min_active_days),
            ("require-purchase", &self.require_purchase),
            ("sample-size", &self.sample_size),
            ("seed", &self.seed),
            ("preset", &self.preset),
            ("representation", &self.representation),
            ("measure", &self.measure),
            ("k", &self.k),
            ("cort-k", &self.cort_k),
            ("ce-epsilon", &self.ce_epsilon),
            ("jobs", &self.jobs),
            ("churn-window", &self.churn_window),
            ("churn-checkpoints", &self.churn_checkpoints),
            ("heatmap-normalize", &self.heatmap_normalize),
        ]
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut spec = match a.benchmark {
        Benchmark::Shape => BenchmarkSpec::shape_preset(a.seed),
        Benchmark::Shift => BenchmarkSpec::shift_preset(a.seed),
        Benchmark::Sparse => BenchmarkSpec::sparse_preset(a.seed),
    };
    if let Some(n) = a.n_per_cluster {
        spec.n_per_cluster = n;
    }
    if let Some(v) = a.noise_sd {
        spec.noise_sd = v;
    }
    if let Some(v) = a.sparsity {
        spec.sparsity = v;
    }
    let (set, truth) = generate(&spec)?;
    let (acts, attrs) = to_telemetry(&set, a.seed);
    create_dir(&a.out)?;
    write_activity(create(&a.out.join("activity.csv"))?, &acts)?;
    write_attributes(create(&a.out.join("attributes.csv"))?, &attrs)?;
    write_series(create(&a.out.join("series.csv"))?, &set)?;
    write_labels(create(&a.out.join("truth.csv"))?, &set.ids(), &truth)?;
    println!(
        "wrote {} series ({}, {} days from {}) to {}",
        set.len(),
        set.kind(),
        set.length(),
        set.start_date(),
        a.out.display()
    );
    Ok(())
}

fn cohort(a: CohortArgs) -> Result<()> {
    let store = ingest(open(&a.activity)?, open(&a.attributes)?)
        .with_context(|| format!("reading {} and {}", a.activity.display(), a.attributes.display()))?;
    let start = tsclust::pipeline::parse_date(&a.start)?;
    let mut cfg = CohortConfig::new(start, a.weeks, a.variable);
    if let Some(v) = a.min_active_days {
        cfg.min_active_days_per_week = v;
    }
    if let Some(v) = a.require_purchase {
        cfg.require_purchase_in_period = v;
    }
    cfg.sample_size = a.sample_size;
    cfg.rng_seed = a.seed;
    let set = build_cohort(&store, &cfg)?;
    write_series(create(&a.out)?, &set)?;
    println!("{} subjects in cohort", set.len());
    Ok(())
}

fn load_series(path: &Path) -> Result<tsclust::SeriesSet> {
    Ok(read_series(open(path)?).with_context(|| format!("reading {}", path.display()))?)
}

fn run_cluster(a: ClusterArgs) -> Result<()> {
    let set = load_series(&a.series)?;
    let run = cluster(&set, &a.method.settings()?)?;
    create_dir(&a.out)?;
    write_cluster_run(&a.out, &run)?;
    println!("{} subjects in {} clusters; sizes {:?}", set.len(), run.partition.k(), run.partition.sizes());
    Ok(())
}

fn validate(a: ValidateArgs) -> Result<()> {
    let matrix = DissimilarityMatrix::read_text(open(&a.matrix)?)
        .with_context(|| format!("reading {}", a.matrix.display()))?;
    let p = read_labels_for(&a.labels, matrix.ids())?;
    let truth = a.truth.as_deref().map(|t| read_truth_for(t, matrix.ids())).transpose()?;
    print!("{}", validation_report(&matrix, &p, truth.as_ref())?.to_text());
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let set = load_series(&a.series)?;
    let p = read_labels_for(&a.labels, &set.ids())?;
    let attrs: BTreeMap<_, _> = read_attributes(open(&a.attributes)?)
        .with_context(|| format!("reading {}", a.attributes.display()))?
        .into_iter()
        .map(|r| (r.subject_id.clone(), r))
        .collect();
    let p_end = set.start_date() + chrono::Duration::days(set.length() as i64 - 1);
    let checkpoints = match &a.churn_checkpoints {
        Some(s) => parse_dates(s)?,
        None => default_checkpoints(p_end),
    };
    let churn = ChurnConfig::new(checkpoints, a.churn_window, p_end)?;
    create_dir(&a.out)?;
    write_reports(&a.out, &set, &p, &attrs, &churn)?;
    print!("{}", std::fs::read_to_string(a.out.join("characteristics.txt"))?);
    Ok(())
}

fn render(a: RenderArgs) -> Result<()> {
    let set = load_series(&a.series)?;
    let p = read_labels_for(&a.labels, &set.ids())?;
    let dend = match &a.dendrogram {
        Some(path) => Some(Dendrogram::read_text(open(path)?).with_context(|| format!("reading {}", path.display()))?),
        None => None,
    };
    create_dir(&a.out)?;
    for name in write_figures(&a.out, &set, &p, dend.as_ref(), a.heatmap_normalize)? {
        println!("{}", a.out.join(name).display());
    }
    Ok(())
}

fn pipeline(a: PipelineArgs) -> Result<()> {
    let mut map = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => BTreeMap::new(),
    };
    for (key, value) in a.overrides() {
        if let Some(v) = value {
            map.insert(normalize_key(key), v.clone());
        }
    }
    if map.is_empty() {
        bail!("no configuration given (use --config or flags)");
    }
    let cfg = PipelineConfig::from_map(&map)?;
    let summary = run_pipeline(&cfg)?;
    println!("{} subjects, k = {}", summary.subjects, summary.validation.k);
    print!("{}", summary.validation.to_text());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Cohort(a) => cohort(a),
        Command::Cluster(a) => run_cluster(a),
        Command::Validate(a) => validate(a),
        Command::Report(a) => report(a),
        Command::Render(a) => render(a),
        Command::Pipeline(a) => pipeline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
