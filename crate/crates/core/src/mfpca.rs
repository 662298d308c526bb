//! Multivariate functional PCA in basis-coefficient space.
//!
//! With per-variable coefficient blocks stacked into `C` (centered, `N x P`)
//! and the block-diagonal Gram matrix `W`, the covariance operator under the
//! inner product `<f, g> = Σ_j ∫ f_j g_j` has the same spectrum as
//! `W^{1/2} CᵀC W^{1/2} / (N - 1)`. Its eigenvectors `v` map back to
//! eigenfunction coefficients `W^{-1/2} v`, which are orthonormal under `W`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smoothing::{evaluate_basis, BasisSpec, SmoothedDataset};

/// Default share of variance the retained components must explain.
pub const DEFAULT_VARIANCE_THRESHOLD: f64 = 0.90;

const GRAM_FLOOR: f64 = 1e-12;

/// A fitted MFPCA model. All eigenpairs are kept; `n_components` is the
/// number retained for scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfpcaModel {
    pub bases: Vec<BasisSpec>,
    /// Standardization divisors the training data were scaled by.
    pub scale: Vec<f64>,
    pub mean_coeffs: Vec<Vec<f64>>,
    /// `eigen_coeffs[r][k]` holds variable `k` of eigenfunction `r`.
    pub eigen_coeffs: Vec<Vec<Vec<f64>>>,
    pub eigenvalues: Vec<f64>,
    /// Cumulative explained-variance ratios.
    pub explained: Vec<f64>,
    pub n_components: usize,
    pub variance_threshold: f64,
}

/// Per-observation component scores, `N x r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub scores: DMatrix<f64>,
}

impl ScoreMatrix {
    pub fn n_obs(&self) -> usize {
        self.scores.nrows()
    }

    pub fn width(&self) -> usize {
        self.scores.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.scores.row(i).iter().copied().collect()
    }
}

/// Symmetric square root and inverse square root of a PSD matrix, with the
/// spectrum floored at [`GRAM_FLOOR`]. Errors when the matrix is clearly
/// indefinite even after a diagonal jitter.
fn sqrt_pair(g: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = g.nrows();
    let mut m = g.clone();
    for attempt in 0..2 {
        let eig = SymmetricEigen::new(m.clone());
        let top = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
        if eig.eigenvalues.min() < -1e-8 * top {
            if attempt == 0 {
                let jitter = 1e-10 * m.trace().abs().max(1.0) / n as f64;
                for i in 0..n {
                    m[(i, i)] += jitter;
                }
                continue;
            }
            return Err(Error::Fit(format!(
                "Gram matrix is not positive semidefinite (min eigenvalue {:.3e})",
                eig.eigenvalues.min()
            )));
        }
        let root = eig.eigenvalues.map(|l| l.max(GRAM_FLOOR).sqrt());
        let inv_root = root.map(|r| 1.0 / r);
        let q = &eig.eigenvectors;
        let s = q * DMatrix::from_diagonal(&root) * q.transpose();
        let si = q * DMatrix::from_diagonal(&inv_root) * q.transpose();
        return Ok(((&s + s.transpose()) * 0.5, (&si + si.transpose()) * 0.5));
    }
    unreachable!()
}

fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let p: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(p, p);
    let mut off = 0;
    for b in blocks {
        let r = b.nrows();
        out.view_mut((off, off), (r, r)).copy_from(b);
        off += r;
    }
    out
}

fn stacked(data: &SmoothedDataset) -> DMatrix<f64> {
    let n = data.n_obs();
    let p: usize = data.coefficients.iter().map(|c| c.ncols()).sum();
    let mut out = DMatrix::zeros(n, p);
    let mut off = 0;
    for c in &data.coefficients {
        out.view_mut((0, off), (n, c.ncols())).copy_from(c);
        off += c.ncols();
    }
    out
}

fn split(v: &[f64], sizes: &[usize]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut off = 0;
    for &s in sizes {
        out.push(v[off..off + s].to_vec());
        off += s;
    }
    out
}

pub fn fit_mfpca(data: &SmoothedDataset, variance_threshold: f64) -> Result<MfpcaModel> {
    if !(variance_threshold > 0.0 && variance_threshold <= 1.0) {
        return Err(Error::Config(format!(
            "variance threshold {variance_threshold} must lie in (0, 1]"
        )));
    }
    let n = data.n_obs();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "MFPCA needs at least 2 observations, got {n}"
        )));
    }
    let sizes: Vec<usize> = data.bases.iter().map(|b| b.n_basis).collect();

    let mut c = stacked(data);
    let mean = c.row_mean();
    for mut row in c.row_iter_mut() {
        row -= &mean;
    }

    let (w_half, w_inv_half) = sqrt_pair(&block_diag(&data.grams))?;
    let cw = &c * &w_half;
    let mut cov = cw.transpose() * &cw / (n as f64 - 1.0);
    cov = (&cov + cov.transpose()) * 0.5;

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    if !(total > 1e-12) {
        return Err(Error::DegenerateVariance(format!(
            "total variance {total:.3e} of the standardized curves is zero"
        )));
    }
    let mut acc = 0.0;
    let explained: Vec<f64> = eigenvalues
        .iter()
        .map(|l| {
            acc += l;
            (acc / total).min(1.0)
        })
        .collect();
    let n_components = explained
        .iter()
        .position(|&e| e >= variance_threshold - 1e-12)
        .map_or(explained.len(), |i| i + 1);

    let eigen_coeffs = order
        .iter()
        .map(|&i| {
            let v = eig.eigenvectors.column(i);
            let mut b: DVector<f64> = &w_inv_half * v;
            if b.sum() < 0.0 {
                b = -b;
            }
            split(b.as_slice(), &sizes)
        })
        .collect();

    Ok(MfpcaModel {
        bases: data.bases.clone(),
        scale: data.scale.clone(),
        mean_coeffs: split(mean.transpose().as_slice(), &sizes),
        eigen_coeffs,
        eigenvalues,
        explained,
        n_components,
        variance_threshold,
    })
}

impl MfpcaModel {
    pub fn total_components(&self) -> usize {
        self.eigenvalues.len()
    }

    fn flat_eigen(&self, r: usize) -> DVector<f64> {
        DVector::from_iterator(
            self.bases.iter().map(|b| b.n_basis).sum(),
            self.eigen_coeffs[r].iter().flatten().copied(),
        )
    }

    fn flat_mean(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.bases.iter().map(|b| b.n_basis).sum(),
            self.mean_coeffs.iter().flatten().copied(),
        )
    }

    /// Variable `k` of eigenfunction `r` on `grid`.
    pub fn eigenfunction(&self, r: usize, k: usize, grid: &[f64]) -> Result<Vec<f64>> {
        evaluate_basis(&self.eigen_coeffs[r][k], &self.bases[k], grid)
    }

    /// Variable `k` of the mean function on `grid`.
    pub fn mean_function(&self, k: usize, grid: &[f64]) -> Result<Vec<f64>> {
        evaluate_basis(&self.mean_coeffs[k], &self.bases[k], grid)
    }
}

/// Scores on the retained components.
pub fn project(model: &MfpcaModel, data: &SmoothedDataset) -> Result<ScoreMatrix> {
    project_components(model, data, model.n_components)
}

/// Scores `ξ_ir = <Z_i - μ, ψ_r>` for the leading `width` components.
pub fn project_components(
    model: &MfpcaModel,
    data: &SmoothedDataset,
    width: usize,
) -> Result<ScoreMatrix> {
    if data.bases != model.bases {
        return Err(Error::Contract("data and model use different bases".into()));
    }
    if width > model.total_components() {
        return Err(Error::Contract(format!(
            "{width} components requested, model has {}",
            model.total_components()
        )));
    }
    let mut c = stacked(data);
    let mean = model.flat_mean().transpose();
    for mut row in c.row_iter_mut() {
        row -= &mean;
    }
    let w = block_diag(&data.grams);
    let mut basis = DMatrix::zeros(w.nrows(), width);
    for r in 0..width {
        basis.set_column(r, &model.flat_eigen(r));
    }
    Ok(ScoreMatrix {
        scores: c * (w * basis),
    })
}

/// Truncated expansion `μ + Σ_r ξ_ir ψ_r` evaluated on `grid`, returned as
/// `[observation][variable][grid point]` in standardized units.
pub fn reconstruct(
    model: &MfpcaModel,
    scores: &ScoreMatrix,
    grid: &[f64],
) -> Result<Vec<Vec<Vec<f64>>>> {
    let width = scores.width();
    if width > model.total_components() {
        return Err(Error::Contract(format!(
            "scores have {width} columns, model has {} components",
            model.total_components()
        )));
    }
    let designs = model
        .bases
        .iter()
        .map(|b| b.design_matrix(grid))
        .collect::<Result<Vec<_>>>()?;
    let mean = model.flat_mean();
    let eig: Vec<DVector<f64>> = (0..width).map(|r| model.flat_eigen(r)).collect();
    let sizes: Vec<usize> = model.bases.iter().map(|b| b.n_basis).collect();

    let mut out = Vec::with_capacity(scores.n_obs());
    for i in 0..scores.n_obs() {
        let mut coeffs = mean.clone();
        for (r, e) in eig.iter().enumerate() {
            coeffs.axpy(scores.scores[(i, r)], e, 1.0);
        }
        let parts = split(coeffs.as_slice(), &sizes);
        out.push(
            parts
                .iter()
                .zip(&designs)
                .map(|(p, d)| (d * DVector::from_column_slice(p)).iter().copied().collect())
                .collect(),
        );
    }
    Ok(out)
}

/// `<f, g>` for two stacked coefficient vectors under the dataset's Gram
/// blocks.
pub fn inner_product(grams: &[DMatrix<f64>], f: &[Vec<f64>], g: &[Vec<f64>]) -> f64 {
    grams
        .iter()
        .zip(f.iter().zip(g))
        .map(|(w, (a, b))| {
            let a = DVector::from_column_slice(a);
            let b = DVector::from_column_slice(b);
            a.dot(&(w * b))
        })
        .sum()
}
