//! Command line front end for the step-count clustering pipeline.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stepclust::clustering::{cluster, gap_statistic, Method};
use stepclust::ingest::{read_curve_matrix, read_day_matrix, validate_grid, CurveMatrix};
use stepclust::pipeline::{self, BenchmarkConfig, PipelineConfig};
use stepclust::plots::emit_plots;
use stepclust::simulation::{self, Family, SimData, SimSpec};
use stepclust::{Error, Result};

#[derive(Parser)]
#[command(name = "stepclust", version, about = "Cluster daily step-count curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a wide CSV without running the pipeline
    IngestCheck {
        #[command(flatten)]
        input: InputArgs,
        /// Also check that the grid length is divisible by this block size
        #[arg(long)]
        q2: Option<usize>,
    },
    /// Write amount, intensity and pattern curves for every day
    Features {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output CSV
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Fit the MFPCA model and write model, scores and explained variance
    Fit {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Score the input with an existing model instead of fitting one
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(short, long)]
        out_dir: PathBuf,
    },
    /// Run the full pipeline, or cluster an existing score file
    Cluster {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Known groups (`day_id,group`) to score the clustering against
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(short, long)]
        out_dir: PathBuf,
    },
    /// Compute the gap statistic curve and the selected number of clusters
    Gap {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output CSV
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Generate a labeled dataset from one of the simulation families
    Simulate {
        #[arg(long)]
        family: Family,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Curves per group (defaults to the family's benchmark size)
        #[arg(long)]
        n_per_group: Option<usize>,
        /// Wide CSV of the generated curves
        #[arg(short, long)]
        out: PathBuf,
        /// Where to write `day_id,group`
        #[arg(long)]
        truth: PathBuf,
    },
    /// Reproduce the simulation benchmark table
    Benchmark {
        /// Benchmark configuration JSON
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        families: Option<Vec<Family>>,
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_per_group: Option<usize>,
        #[arg(short, long)]
        out_dir: PathBuf,
    },
    /// Compare clusterings across quantile counts at a fixed K
    SweepQ1 {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [4, 6, 8, 12])]
        q1_values: Vec<usize>,
        /// Output CSV of pairwise adjusted Rand indices
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run the pipeline and write plot tables and SVG charts
    Plots {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(short, long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Wide CSV: day_id, optional subject_id, then one column per epoch
    #[arg(short, long)]
    input: PathBuf,
    /// Accept real-valued cells instead of non-negative integer counts
    #[arg(long)]
    real: bool,
}

#[derive(Args)]
struct SourceArgs {
    #[arg(short, long, conflicts_with = "scores", required_unless_present = "scores")]
    input: Option<PathBuf>,
    #[arg(long)]
    real: bool,
    /// Score CSV written by `fit`
    #[arg(long)]
    scores: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// Pipeline configuration JSON; flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    q1: Option<usize>,
    #[arg(long)]
    q2: Option<usize>,
    #[arg(long)]
    variance_threshold: Option<f64>,
    /// Fixed number of clusters; omitted means gap selection
    #[arg(short, long)]
    k: Option<usize>,
    #[arg(long)]
    method: Option<Method>,
    /// Basis size for all three variables
    #[arg(long)]
    n_basis: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    b_gap: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.q1 {
            cfg.q1 = v;
        }
        if let Some(v) = self.q2 {
            cfg.q2 = v;
        }
        if let Some(v) = self.variance_threshold {
            cfg.variance_threshold = v;
        }
        if self.k.is_some() {
            cfg.k = self.k;
        }
        if let Some(v) = self.method {
            cfg.method = v;
        }
        if let Some(v) = self.n_basis {
            cfg.n_basis = [v; 3];
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.b_gap {
            cfg.b_gap = v;
        }
        if let Some(v) = self.k_max {
            cfg.k_max = v;
        }
        Ok(cfg)
    }
}

fn load_curves(path: &Path, real: bool) -> Result<CurveMatrix> {
    let loaded = if real {
        read_curve_matrix(path)
    } else {
        read_day_matrix(path).map(|dm| dm.to_curves())
    };
    loaded.map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    })
}

impl InputArgs {
    fn load(&self) -> Result<CurveMatrix> {
        load_curves(&self.input, self.real)
    }
}

/// Truth groups in the row order of `ids`, 0-based.
fn align_truth(ids: &[String], path: &Path) -> Result<Vec<usize>> {
    let pairs = simulation::read_truth(path)?;
    let groups: HashMap<String, usize> = pairs.into_iter().collect();
    ids.iter()
        .map(|id| match groups.get(id) {
            Some(&g) if g >= 1 => Ok(g - 1),
            Some(_) => Err(Error::Dataset(format!("group of {id} must be 1 or larger"))),
            None => Err(Error::Dataset(format!("no truth group for {id}"))),
        })
        .collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn ingest_check(input: &InputArgs, q2: Option<usize>) -> Result<()> {
    let data = input.load()?;
    if let Some(q2) = q2 {
        validate_grid(data.grid_len(), q2)?;
    }
    let subjects = data.subjects().iter().flatten().collect::<std::collections::BTreeSet<_>>();
    let total: f64 = data.values().iter().flatten().sum();
    println!("rows: {}", data.len());
    println!("epochs per row: {}", data.grid_len());
    println!("subjects: {}", subjects.len());
    println!("total: {total}");
    Ok(())
}

fn features(input: &InputArgs, config: &ConfigArgs, out: &Path) -> Result<()> {
    let cfg = config.resolve()?;
    let data = input.load()?;
    let triples = pipeline::compute_features(&data, cfg.q1, cfg.q2)?;
    pipeline::write_features(data.ids(), &triples, out)?;
    println!("wrote features for {} days to {}", data.len(), out.display());
    Ok(())
}

fn fit(input: &InputArgs, config: &ConfigArgs, model_path: Option<&Path>, out_dir: &Path) -> Result<()> {
    let cfg = config.resolve()?;
    let data = input.load()?;
    create_dir(out_dir)?;
    let (model, scores) = match model_path {
        Some(path) => {
            let model = pipeline::load_model(path)?;
            cfg.validate(data.grid_len())?;
            let scores = pipeline::score_with_model(&data, &model, cfg.q1, cfg.q2)?;
            (model, scores)
        }
        None => {
            let fitted = pipeline::fit_scores(&data, &cfg)?;
            pipeline::write_coefficients(data.ids(), &fitted.smoothed, out_dir.join("coefficients.csv"))?;
            pipeline::save_model(&fitted.model, out_dir.join("model.json"))?;
            (fitted.model, fitted.scores)
        }
    };
    pipeline::write_scores(data.ids(), &scores, out_dir.join("scores.csv"))?;
    pipeline::write_explained(&pipeline::explained_table(&model), out_dir.join("explained.csv"))?;
    println!(
        "{} components explain {:.4} of the variance",
        model.n_components,
        model.explained[model.n_components - 1]
    );
    Ok(())
}

fn cluster_scores(path: &Path, cfg: &PipelineConfig, truth: Option<&Path>, out_dir: &Path) -> Result<()> {
    let Some(k) = cfg.k else {
        return Err(Error::Config("clustering a score file needs a fixed k".into()));
    };
    let (ids, scores) = pipeline::read_scores(path)?;
    let result = cluster(&scores.scores, k, cfg.method, cfg.seed, &cfg.kmeans)?;
    create_dir(out_dir)?;
    pipeline::write_labels(&ids, &result.labels, out_dir.join("labels.csv"))?;
    println!("k = {k}, sizes {:?}", result.sizes());
    if let Some(truth) = truth {
        let truth = align_truth(&ids, truth)?;
        let metrics = pipeline::Metrics {
            ccr: stepclust::evaluation::ccr(&truth, &result.labels)?,
            arand: stepclust::evaluation::adjusted_rand(&truth, &result.labels)?,
        };
        pipeline::write_json(&metrics, out_dir.join("metrics.json"))?;
        println!("CCR {:.4}, aRand {:.4}", metrics.ccr, metrics.arand);
    }
    Ok(())
}

fn cluster_cmd(source: &SourceArgs, config: &ConfigArgs, truth: Option<&Path>, out_dir: &Path) -> Result<()> {
    let cfg = config.resolve()?;
    if let Some(scores) = &source.scores {
        return cluster_scores(scores, &cfg, truth, out_dir);
    }
    let data = load_curves(source.input.as_deref().expect("clap requires input"), source.real)?;
    let truth = truth.map(|t| align_truth(data.ids(), t)).transpose()?;
    let mut run = pipeline::run_pipeline(&data, &cfg)?;
    if let Some(truth) = &truth {
        run.evaluate(truth)?;
    }
    create_dir(out_dir)?;
    pipeline::write_labels(data.ids(), &run.clusters.labels, out_dir.join("labels.csv"))?;
    pipeline::write_scores(data.ids(), &run.scores, out_dir.join("scores.csv"))?;
    pipeline::write_explained(&run.report.explained, out_dir.join("explained.csv"))?;
    pipeline::save_model(&run.model, out_dir.join("model.json"))?;
    pipeline::write_json(&run.report, out_dir.join("report.json"))?;
    if let Some(gap) = &run.gap {
        pipeline::write_gap(gap, out_dir.join("gap.csv"))?;
    }
    let how = if run.report.k_from_gap { "gap statistic" } else { "fixed" };
    println!("k = {} ({how}), sizes {:?}", run.report.k, run.report.cluster_sizes);
    if let Some(m) = run.report.metrics {
        println!("CCR {:.4}, aRand {:.4}", m.ccr, m.arand);
    }
    Ok(())
}

fn gap_cmd(source: &SourceArgs, config: &ConfigArgs, out: &Path) -> Result<()> {
    let cfg = config.resolve()?;
    let scores = match &source.scores {
        Some(path) => pipeline::read_scores(path)?.1,
        None => {
            let data = load_curves(source.input.as_deref().expect("clap requires input"), source.real)?;
            pipeline::fit_scores(&data, &cfg)?.scores
        }
    };
    let gap = gap_statistic(&scores.scores, cfg.k_max, cfg.b_gap, cfg.method, cfg.seed, &cfg.kmeans)?;
    pipeline::write_gap(&gap, out)?;
    println!("chosen k = {}", gap.chosen_k);
    Ok(())
}

fn simulate(family: Family, seed: u64, n_per_group: Option<usize>, out: &Path, truth: &Path) -> Result<()> {
    let mut spec = SimSpec::new(family, seed);
    if let Some(n) = n_per_group {
        spec = spec.with_group_size(n);
    }
    let data = simulation::generate(&spec)?;
    match &data.data {
        SimData::Counts(dm) => stepclust::ingest::write_day_matrix(dm, out)?,
        SimData::Curves(cm) => stepclust::ingest::write_curve_matrix(cm, out)?,
    }
    simulation::write_truth(&data.ids(), &data.truth, truth)?;
    println!("{} curves in {} groups, T = {}", data.truth.len(), data.n_groups(), spec.grid_len);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn benchmark(
    config: Option<&Path>,
    families: Option<Vec<Family>>,
    methods: Option<Vec<Method>>,
    replicates: Option<usize>,
    seed: Option<u64>,
    n_per_group: Option<usize>,
    out_dir: &Path,
) -> Result<()> {
    let mut cfg = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<BenchmarkConfig>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => BenchmarkConfig::default(),
    };
    if let Some(v) = families {
        cfg.families = v;
    }
    if let Some(v) = methods {
        cfg.methods = v;
    }
    if let Some(v) = replicates {
        cfg.replicates = v;
    }
    if let Some(v) = seed {
        cfg.seed = v;
    }
    if n_per_group.is_some() {
        cfg.n_per_group = n_per_group;
    }
    let table = pipeline::run_benchmark(&cfg)?;
    create_dir(out_dir)?;
    pipeline::write_benchmark_rows(&table.rows, out_dir.join("replicates.csv"))?;
    pipeline::write_benchmark_cells(&table.cells, out_dir.join("summary.csv"))?;
    print!("{}", table.render());
    Ok(())
}

fn sweep(input: &InputArgs, config: &ConfigArgs, q1_values: &[usize], out: &Path) -> Result<()> {
    let cfg = config.resolve()?;
    let data = input.load()?;
    let table = pipeline::sensitivity_sweep(&data, q1_values, &cfg)?;
    pipeline::write_sweep(&table, out)?;
    for p in &table.pairs {
        println!("q1 {} vs {}: aRand {:.4}", p.q1_a, p.q1_b, p.arand);
    }
    Ok(())
}

fn plots(input: &InputArgs, config: &ConfigArgs, out_dir: &Path) -> Result<()> {
    let cfg = config.resolve()?;
    let data = input.load()?;
    let run = pipeline::run_pipeline(&data, &cfg)?;
    let files = emit_plots(&run, &data, out_dir)?;
    for notice in &files.notices {
        eprintln!("note: {notice}");
    }
    println!("wrote {} files to {}", files.written.len(), out_dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::IngestCheck { input, q2 } => ingest_check(&input, q2),
        Command::Features { input, config, out } => features(&input, &config, &out),
        Command::Fit { input, config, model, out_dir } => fit(&input, &config, model.as_deref(), &out_dir),
        Command::Cluster { source, config, truth, out_dir } => {
            cluster_cmd(&source, &config, truth.as_deref(), &out_dir)
        }
        Command::Gap { source, config, out } => gap_cmd(&source, &config, &out),
        Command::Simulate { family, seed, n_per_group, out, truth } => {
            simulate(family, seed, n_per_group, &out, &truth)
        }
        Command::Benchmark { config, families, methods, replicates, seed, n_per_group, out_dir } => {
            benchmark(config.as_deref(), families, methods, replicates, seed, n_per_group, &out_dir)
        }
        Command::SweepQ1 { input, config, q1_values, out } => sweep(&input, &config, &q1_values, &out),
        Command::Plots { input, config, out_dir } => plots(&input, &config, &out_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
