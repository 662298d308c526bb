//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string; the page parses it and draws on a
//! canvas.

use serde::Serialize;
use stepclust::clustering::{cluster, Method};
use stepclust::evaluation::{adjusted_rand, ccr};
use stepclust::features::{feature_triple, VARIABLE_NAMES};
use stepclust::pipeline::{explained_table, fit_scores, ExplainedRow, PipelineConfig};
use stepclust::simulation::{generate, Family, SimSpec};
use wasm_bindgen::prelude::*;

/// Longest series shipped to the page; longer curves are thinned.
const MAX_POINTS: usize = 360;

#[derive(Debug, Serialize)]
pub struct DayView {
    pub family: Family,
    pub group: usize,
    pub counts: Vec<f64>,
    pub amount: Vec<f64>,
    pub intensity: Vec<f64>,
    pub pattern: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Eigenfunction {
    pub component: usize,
    pub variable: &'static str,
    pub values: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ClusterView {
    pub family: Family,
    pub method: Method,
    pub k: usize,
    /// First two score columns, one pair per curve.
    pub scores: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
    pub truth: Vec<usize>,
    pub ccr: f64,
    pub arand: f64,
    pub n_components: usize,
    pub explained: Vec<ExplainedRow>,
    pub eigenfunctions: Vec<Eigenfunction>,
}

fn thin(values: &[f64]) -> Vec<f64> {
    let step = values.len().div_ceil(MAX_POINTS).max(1);
    values.iter().step_by(step).copied().collect()
}

fn parse_family(name: &str) -> Result<Family, String> {
    name.parse().map_err(|e: stepclust::Error| e.to_string())
}

/// One simulated curve from `group` of `family` and its three feature
/// curves.
pub fn day_view(family: &str, group: usize, seed: u64, q1: usize, q2: usize) -> Result<DayView, String> {
    let family = parse_family(family)?;
    let spec = SimSpec::new(family, seed).with_group_size(1);
    let data = generate(&spec).map_err(|e| e.to_string())?;
    let curves = data.curves();
    let row = data
        .truth
        .iter()
        .position(|&g| g == group)
        .ok_or_else(|| format!("{family} has {} groups", data.n_groups()))?;
    let values = &curves.values()[row];
    let triple = feature_triple(values, q1, q2).map_err(|e| e.to_string())?;
    Ok(DayView {
        family,
        group,
        counts: thin(values),
        amount: thin(&triple.s_curve),
        intensity: thin(&triple.i_curve),
        pattern: thin(&triple.p_curve),
    })
}

/// Simulates `family`, fits MFPCA and clusters the scores at the true K.
pub fn cluster_view(family: &str, n_per_group: usize, method: &str, seed: u64) -> Result<ClusterView, String> {
    let family = parse_family(family)?;
    let method: Method = method.parse().map_err(|e: stepclust::Error| e.to_string())?;
    let spec = SimSpec::new(family, seed).with_group_size(n_per_group);
    let data = generate(&spec).map_err(|e| e.to_string())?;
    let k = data.n_groups();
    let cfg = PipelineConfig {
        k: Some(k),
        method,
        seed,
        ..PipelineConfig::default()
    };
    let curves = data.curves();
    let fitted = fit_scores(&curves, &cfg).map_err(|e| e.to_string())?;
    let result = cluster(&fitted.scores.scores, k, method, seed, &cfg.kmeans).map_err(|e| e.to_string())?;

    let s = &fitted.scores.scores;
    let scores = (0..s.nrows())
        .map(|i| [s[(i, 0)], if s.ncols() > 1 { s[(i, 1)] } else { 0.0 }])
        .collect();
    let grid: Vec<f64> = (0..curves.grid_len()).map(|j| j as f64 + 0.5).collect();
    let mut eigenfunctions = Vec::new();
    for r in 0..fitted.model.n_components {
        for (v, name) in VARIABLE_NAMES.iter().enumerate() {
            let values = fitted.model.eigenfunction(r, v, &grid).map_err(|e| e.to_string())?;
            eigenfunctions.push(Eigenfunction { component: r + 1, variable: name, values: thin(&values) });
        }
    }
    Ok(ClusterView {
        family,
        method,
        k,
        scores,
        ccr: ccr(&data.truth, &result.labels).map_err(|e| e.to_string())?,
        arand: adjusted_rand(&data.truth, &result.labels).map_err(|e| e.to_string())?,
        labels: result.labels,
        truth: data.truth,
        n_components: fitted.model.n_components,
        explained: explained_table(&fitted.model),
        eigenfunctions,
    })
}

fn to_json<T: Serialize>(value: Result<T, String>) -> Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = dayFeatures)]
pub fn day_features(family: &str, group: usize, seed: u64, q1: usize, q2: usize) -> Result<String, JsError> {
    to_json(day_view(family, group, seed, q1, q2))
}

#[wasm_bindgen(js_name = clusterSimulation)]
pub fn cluster_simulation(family: &str, n_per_group: usize, method: &str, seed: u64) -> Result<String, JsError> {
    to_json(cluster_view(family, n_per_group, method, seed))
}

#[wasm_bindgen(js_name = families)]
pub fn families() -> String {
    serde_json::to_string(&Family::ALL.map(Family::name)).expect("static names serialize")
}
