//! End-to-end runs: features, smoothing, MFPCA, optional gap selection and
//! clustering, plus the simulation benchmark, the Q1 sensitivity sweep and
//! the CSV/JSON exporters used by the command line tool.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::clustering::{cluster, gap_statistic, ClusterResult, GapCurve, KmeansOptions, Method};
use crate::error::{Error, Result};
use crate::evaluation::{adjusted_rand, ccr};
use crate::features::{feature_triple, FeatureTriple, VARIABLE_NAMES};
use crate::ingest::{epoch_column, validate_grid, CurveMatrix};
use crate::mfpca::{fit_mfpca, project, MfpcaModel, ScoreMatrix, DEFAULT_VARIANCE_THRESHOLD};
use crate::simulation::{generate, Family, SimSpec};
use crate::smoothing::{smooth_features, smooth_with, SmoothedDataset, DEFAULT_N_BASIS};

/// Number of clusters used when gap selection is switched off and no K is
/// given.
pub const DEFAULT_FIXED_K: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub q1: usize,
    pub q2: usize,
    pub variance_threshold: f64,
    /// Fixed number of clusters; `None` selects K with the gap statistic.
    pub k: Option<usize>,
    pub method: Method,
    pub n_basis: [usize; 3],
    pub seed: u64,
    /// Reference sets for the gap statistic.
    pub b_gap: usize,
    /// Largest K the gap statistic considers.
    pub k_max: usize,
    pub kmeans: KmeansOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            q1: 8,
            q2: 4,
            variance_threshold: DEFAULT_VARIANCE_THRESHOLD,
            k: None,
            method: Method::Kmeans,
            n_basis: [DEFAULT_N_BASIS; 3],
            seed: 1,
            b_gap: 20,
            k_max: 10,
            kmeans: KmeansOptions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Checks the configuration against a grid of `grid_len` epochs.
    pub fn validate(&self, grid_len: usize) -> Result<()> {
        if self.q1 == 0 {
            return Err(Error::Config("q1 must be at least 1".into()));
        }
        validate_grid(grid_len, self.q2)?;
        if !(self.variance_threshold > 0.0 && self.variance_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "variance_threshold must lie in (0, 1], got {}",
                self.variance_threshold
            )));
        }
        if self.k == Some(0) {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.k.is_none() && (self.k_max < 2 || self.b_gap == 0) {
            return Err(Error::Config("gap selection needs k_max >= 2 and b_gap >= 1".into()));
        }
        if self.n_basis.iter().any(|&r| r < 4) {
            return Err(Error::Config(format!("n_basis {:?} is below the cubic minimum of 4", self.n_basis)));
        }
        if self.kmeans.restarts == 0 || self.kmeans.max_iter == 0 {
            return Err(Error::Config("kmeans restarts and max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainedRow {
    pub component: usize,
    pub eigenvalue: f64,
    pub proportion: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub ccr: f64,
    pub arand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub n_obs: usize,
    pub grid_len: usize,
    pub k: usize,
    pub k_from_gap: bool,
    pub cluster_sizes: Vec<usize>,
    /// Per-cluster mean of the input curves, in input units.
    pub cluster_means: Vec<Vec<f64>>,
    pub n_components: usize,
    pub explained: Vec<ExplainedRow>,
    pub metrics: Option<Metrics>,
    pub timings: Vec<StageTiming>,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub clusters: ClusterResult,
    pub model: MfpcaModel,
    pub scores: ScoreMatrix,
    pub features: Vec<FeatureTriple>,
    pub gap: Option<GapCurve>,
    pub report: RunReport,
}

impl PipelineRun {
    /// Scores the clustering against known groups and stores the metrics in
    /// the report.
    pub fn evaluate(&mut self, truth: &[usize]) -> Result<Metrics> {
        let m = Metrics {
            ccr: ccr(truth, &self.clusters.labels)?,
            arand: adjusted_rand(truth, &self.clusters.labels)?,
        };
        self.report.metrics = Some(m);
        Ok(m)
    }
}

struct Clock(Vec<StageTiming>);

/// Seconds spent in `f`. Browsers have no monotonic clock reachable from
/// plain `wasm32-unknown-unknown`, so stages report 0 there.
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
    {
        let start = std::time::Instant::now();
        let out = f();
        (out, start.elapsed().as_secs_f64())
    }
    #[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
    {
        (f(), 0.0)
    }
}

impl Clock {
    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let (out, seconds) = timed(f);
        self.0.push(StageTiming {
            stage: stage.to_string(),
            seconds,
        });
        out.map_err(|e| e.in_stage(stage))
    }
}

/// Amount, intensity and pattern curves for every row of `data`.
pub fn compute_features(data: &CurveMatrix, q1: usize, q2: usize) -> Result<Vec<FeatureTriple>> {
    validate_grid(data.grid_len(), q2)?;
    crate::par_map(data.values(), |v| feature_triple(v, q1, q2))
        .into_iter()
        .collect()
}

/// Everything up to the score matrix.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub features: Vec<FeatureTriple>,
    pub smoothed: SmoothedDataset,
    pub model: MfpcaModel,
    pub scores: ScoreMatrix,
}

fn fit_with_clock(data: &CurveMatrix, cfg: &PipelineConfig, clock: &mut Clock) -> Result<Fitted> {
    clock.time("config", || cfg.validate(data.grid_len()))?;
    let features = clock.time("features", || compute_features(data, cfg.q1, cfg.q2))?;
    let smoothed = clock.time("smoothing", || smooth_features(&features, cfg.n_basis))?;
    let model = clock.time("mfpca", || fit_mfpca(&smoothed, cfg.variance_threshold))?;
    let scores = clock.time("project", || project(&model, &smoothed))?;
    Ok(Fitted { features, smoothed, model, scores })
}

/// Features, smoothing, MFPCA and projection.
pub fn fit_scores(data: &CurveMatrix, cfg: &PipelineConfig) -> Result<Fitted> {
    fit_with_clock(data, cfg, &mut Clock(Vec::new()))
}

/// Scores new curves with a fitted model, reusing its bases and divisors.
pub fn score_with_model(data: &CurveMatrix, model: &MfpcaModel, q1: usize, q2: usize) -> Result<ScoreMatrix> {
    let features = compute_features(data, q1, q2).map_err(|e| e.in_stage("features"))?;
    let smoothed = smooth_with(&features, &model.bases, &model.scale).map_err(|e| e.in_stage("smoothing"))?;
    project(model, &smoothed).map_err(|e| e.in_stage("project"))
}

/// Runs the full pipeline. Without a fixed `k` the number of clusters is the
/// gap-statistic choice.
pub fn run_pipeline(data: &CurveMatrix, cfg: &PipelineConfig) -> Result<PipelineRun> {
    let mut clock = Clock(Vec::new());
    let fitted = fit_with_clock(data, cfg, &mut clock)?;
    let Fitted { features, model, scores, .. } = fitted;

    let gap = match cfg.k {
        Some(_) => None,
        None => Some(clock.time("gap", || {
            gap_statistic(&scores.scores, cfg.k_max, cfg.b_gap, cfg.method, cfg.seed, &cfg.kmeans)
        })?),
    };
    let k = cfg.k.unwrap_or_else(|| gap.as_ref().map_or(1, |g| g.chosen_k));
    let clusters = clock.time("cluster", || cluster(&scores.scores, k, cfg.method, cfg.seed, &cfg.kmeans))?;

    let report = RunReport {
        config: cfg.clone(),
        n_obs: data.len(),
        grid_len: data.grid_len(),
        k,
        k_from_gap: gap.is_some(),
        cluster_sizes: clusters.sizes(),
        cluster_means: cluster_means(data, &clusters.labels, k),
        n_components: model.n_components,
        explained: explained_table(&model),
        metrics: None,
        timings: clock.0,
    };
    Ok(PipelineRun { clusters, model, scores, features, gap, report })
}

/// Per-cluster mean of the raw curves; empty clusters give zeros.
pub fn cluster_means(data: &CurveMatrix, labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; data.grid_len()]; k];
    let mut counts = vec![0usize; k];
    for (row, &l) in data.values().iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(row) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    sums
}

pub fn explained_table(model: &MfpcaModel) -> Vec<ExplainedRow> {
    let total: f64 = model.eigenvalues.iter().sum();
    model
        .eigenvalues
        .iter()
        .zip(&model.explained)
        .enumerate()
        .map(|(r, (&ev, &cum))| ExplainedRow {
            component: r + 1,
            eigenvalue: ev,
            proportion: ev / total,
            cumulative: cum,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub families: Vec<Family>,
    pub methods: Vec<Method>,
    pub replicates: usize,
    pub seed: u64,
    /// Overrides the per-group sample size of every family.
    pub n_per_group: Option<usize>,
    /// Feature and clustering settings; `k` is replaced by the true K.
    pub pipeline: PipelineConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            families: Family::ALL.to_vec(),
            methods: vec![Method::Kmeans, Method::Pam],
            replicates: 20,
            seed: 2024,
            n_per_group: None,
            pipeline: PipelineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub generator: Family,
    pub method: Method,
    pub replicate: usize,
    pub ccr: f64,
    pub arand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub generator: Family,
    pub method: Method,
    pub replicates: usize,
    pub ccr_mean: f64,
    pub ccr_sd: f64,
    pub arand_mean: f64,
    pub arand_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchmarkRow>,
    pub cells: Vec<BenchmarkCell>,
}

impl BenchmarkTable {
    pub fn cell(&self, family: Family, method: Method) -> Option<&BenchmarkCell> {
        self.cells.iter().find(|c| c.generator == family && c.method == method)
    }

    /// Methods as rows, generators as columns, `mean (sd)` for CCR and aRand.
    pub fn render(&self) -> String {
        let mut families: Vec<Family> = Vec::new();
        let mut methods: Vec<Method> = Vec::new();
        for c in &self.cells {
            if !families.contains(&c.generator) {
                families.push(c.generator);
            }
            if !methods.contains(&c.method) {
                methods.push(c.method);
            }
        }
        let mut out = String::new();
        for (metric, pick) in [("CCR", 0), ("aRand", 1)] {
            out.push_str(&format!("{metric:<8}"));
            for f in &families {
                out.push_str(&format!(" {:>18}", f.name()));
            }
            out.push('\n');
            for m in &methods {
                out.push_str(&format!("{:<8}", m.to_string()));
                for f in &families {
                    let text = match self.cell(*f, *m) {
                        Some(c) if pick == 0 => format!("{:.4} ({:.3})", c.ccr_mean, c.ccr_sd),
                        Some(c) => format!("{:.4} ({:.3})", c.arand_mean, c.arand_sd),
                        None => "-".into(),
                    };
                    out.push_str(&format!(" {text:>18}"));
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Mean and sample standard deviation; a single value has deviation 0.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Seed of replicate `replicate` of `family` derived from a run seed.
pub fn replicate_seed(seed: u64, family: Family, replicate: usize) -> u64 {
    let code = Family::ALL.iter().position(|f| *f == family).unwrap() as u64;
    // splitmix64 finalizer
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(code * 1_000_003 + replicate as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generates each replicate, fits the scores once and clusters them with
/// every method at the true K.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkTable> {
    if cfg.replicates == 0 {
        return Err(Error::Config("replicates must be at least 1".into()));
    }
    if cfg.families.is_empty() || cfg.methods.is_empty() {
        return Err(Error::Config("benchmark needs at least one family and one method".into()));
    }
    let jobs: Vec<(Family, usize)> = cfg
        .families
        .iter()
        .flat_map(|&f| (0..cfg.replicates).map(move |r| (f, r)))
        .collect();
    let results = crate::par_map(&jobs, |&(family, rep)| -> Result<Vec<BenchmarkRow>> {
        let seed = replicate_seed(cfg.seed, family, rep);
        let mut spec = SimSpec::new(family, seed);
        if let Some(n) = cfg.n_per_group {
            spec = spec.with_group_size(n);
        }
        let ds = generate(&spec).map_err(|e| e.in_stage("simulate"))?;
        let curves = ds.curves();
        let k = ds.n_groups();
        let pcfg = PipelineConfig { k: Some(k), seed, ..cfg.pipeline.clone() };
        let fitted = fit_scores(&curves, &pcfg)?;
        cfg.methods
            .iter()
            .map(|&method| {
                let res = cluster(&fitted.scores.scores, k, method, seed, &pcfg.kmeans)
                    .map_err(|e| e.in_stage("cluster"))?;
                Ok(BenchmarkRow {
                    generator: family,
                    method,
                    replicate: rep,
                    ccr: ccr(&ds.truth, &res.labels)?,
                    arand: adjusted_rand(&ds.truth, &res.labels)?,
                })
            })
            .collect()
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    let mut cells = Vec::new();
    for &family in &cfg.families {
        for &method in &cfg.methods {
            let sel: Vec<&BenchmarkRow> = rows.iter().filter(|r| r.generator == family && r.method == method).collect();
            let (ccr_mean, ccr_sd) = mean_sd(&sel.iter().map(|r| r.ccr).collect::<Vec<_>>());
            let (arand_mean, arand_sd) = mean_sd(&sel.iter().map(|r| r.arand).collect::<Vec<_>>());
            cells.push(BenchmarkCell {
                generator: family,
                method,
                replicates: sel.len(),
                ccr_mean,
                ccr_sd,
                arand_mean,
                arand_sd,
            });
        }
    }
    Ok(BenchmarkTable { rows, cells })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPair {
    pub q1_a: usize,
    pub q1_b: usize,
    pub arand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub q1_values: Vec<usize>,
    pub labels: Vec<Vec<usize>>,
    pub pairs: Vec<SweepPair>,
}

impl SweepTable {
    pub fn min_arand(&self) -> Option<f64> {
        self.pairs.iter().map(|p| p.arand).reduce(f64::min)
    }
}

/// Re-runs the pipeline at a fixed K for each `q1` and compares every pair
/// of label vectors with the adjusted Rand index.
pub fn sensitivity_sweep(data: &CurveMatrix, q1_values: &[usize], cfg: &PipelineConfig) -> Result<SweepTable> {
    if q1_values.is_empty() {
        return Err(Error::Config("sweep needs at least one q1 value".into()));
    }
    if cfg.k.is_none() {
        return Err(Error::Config("sweep runs at a fixed k; set k".into()));
    }
    let mut labels = Vec::with_capacity(q1_values.len());
    for &q1 in q1_values {
        let run = run_pipeline(data, &PipelineConfig { q1, ..cfg.clone() })?;
        labels.push(run.clusters.labels);
    }
    let mut pairs = Vec::new();
    for a in 0..q1_values.len() {
        for b in a + 1..q1_values.len() {
            pairs.push(SweepPair {
                q1_a: q1_values[a],
                q1_b: q1_values[b],
                arand: adjusted_rand(&labels[a], &labels[b])?,
            });
        }
    }
    Ok(SweepTable { q1_values: q1_values.to_vec(), labels, pairs })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    Ok(csv::Writer::from_writer(std::fs::File::create(path)?))
}

pub fn write_labels_to<W: Write>(ids: &[String], labels: &[usize], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["day_id", "cluster"])?;
    for (id, l) in ids.iter().zip(labels) {
        w.write_record([id.clone(), (l + 1).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `day_id,cluster` with 1-based cluster numbers.
pub fn write_labels(ids: &[String], labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    write_labels_to(ids, labels, std::fs::File::create(path)?)
}

pub fn write_scores_to<W: Write>(ids: &[String], scores: &ScoreMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["day_id".to_string()];
    header.extend((1..=scores.width()).map(|r| format!("xi{r}")));
    w.write_record(&header)?;
    for (i, id) in ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(scores.row(i).iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `day_id,xi1,...,xiR`.
pub fn write_scores(ids: &[String], scores: &ScoreMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_scores_to(ids, scores, std::fs::File::create(path)?)
}

pub fn parse_scores<R: Read>(reader: R) -> Result<(Vec<String>, ScoreMatrix)> {
    let mut rdr = csv::Reader::from_reader(reader);
    let width = rdr.headers()?.len().saturating_sub(1);
    if width == 0 {
        return Err(Error::Parse { line: 1, message: "score file needs day_id and at least one score column".into() });
    }
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != width + 1 {
            return Err(Error::Parse { line, message: format!("expected {} columns, found {}", width + 1, rec.len()) });
        }
        ids.push(rec[0].to_string());
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let v: f64 = cell.trim().parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::Validation {
                line,
                column: j + 2,
                message: format!("{cell:?} is not a finite score"),
            })?;
            values.push(v);
        }
    }
    if ids.is_empty() {
        return Err(Error::Dataset("score file has no rows".into()));
    }
    let scores = DMatrix::from_row_slice(ids.len(), width, &values);
    Ok((ids, ScoreMatrix { scores }))
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<(Vec<String>, ScoreMatrix)> {
    parse_scores(std::fs::File::open(path)?)
}

/// One row per day and variable: `day_id,variable,t0001,...`.
pub fn write_features(ids: &[String], features: &[FeatureTriple], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    let grid_len = features.first().map_or(0, |f| f.s_curve.len());
    let mut header = vec!["day_id".to_string(), "variable".to_string()];
    header.extend((1..=grid_len).map(epoch_column));
    w.write_record(&header)?;
    for (id, f) in ids.iter().zip(features) {
        for (k, name) in VARIABLE_NAMES.iter().enumerate() {
            let mut rec = vec![id.clone(), name.to_string()];
            rec.extend(f.variable(k).iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Smoothed coefficients: `day_id,variable,c1,...`.
pub fn write_coefficients(ids: &[String], data: &SmoothedDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(std::fs::File::create(path)?);
    let width = data.bases.iter().map(|b| b.n_basis).max().unwrap_or(0);
    let mut header = vec!["day_id".to_string(), "variable".to_string()];
    header.extend((1..=width).map(|j| format!("c{j}")));
    w.write_record(&header)?;
    for (i, id) in ids.iter().enumerate() {
        for (k, c) in data.coefficients.iter().enumerate() {
            let mut rec = vec![id.clone(), VARIABLE_NAMES[k].to_string()];
            rec.extend(c.row(i).iter().map(f64::to_string));
            rec.resize(width + 2, String::new());
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `k,gap,sk`.
pub fn write_gap(gap: &GapCurve, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(["k", "gap", "sk"])?;
    for ((k, g), s) in gap.ks.iter().zip(&gap.gaps).zip(&gap.sks) {
        w.write_record([k.to_string(), g.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `component,eigenvalue,proportion,cumulative`.
pub fn write_explained(rows: &[ExplainedRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `generator,method,replicate,ccr,arand`.
pub fn write_benchmark_rows(rows: &[BenchmarkRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_benchmark_cells(cells: &[BenchmarkCell], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    for c in cells {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}

/// `q1_a,q1_b,arand`; a header-only file when there are no pairs.
pub fn write_sweep(table: &SweepTable, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(["q1_a", "q1_b", "arand"])?;
    for p in &table.pairs {
        w.write_record([p.q1_a.to_string(), p.q1_b.to_string(), p.arand.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

pub fn save_model(model: &MfpcaModel, path: impl AsRef<Path>) -> Result<()> {
    write_json(model, path)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MfpcaModel> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Contract(format!("invalid model file: {e}")))
}
