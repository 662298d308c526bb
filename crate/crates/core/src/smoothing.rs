//! Standardization of the feature variables and their representation on a
//! B-spline basis.
//!
//! A day's curve is observed at the epoch midpoints `t - 0.5`, `t = 1..=T`,
//! and every basis lives on `[0, T]`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTriple;

/// Default number of basis functions per variable.
pub const DEFAULT_N_BASIS: usize = 30;
/// Cubic splines.
pub const CUBIC: usize = 4;

/// A B-spline basis on `[0, T]` with clamped ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub n_basis: usize,
    pub order: usize,
    /// Strictly increasing breakpoints, first `0`, last `T`.
    pub knots: Vec<f64>,
}

impl BasisSpec {
    /// `n_basis` functions of the given order with uniformly spaced interior
    /// breakpoints on `[0, span]`.
    pub fn uniform(n_basis: usize, order: usize, span: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("spline order must be positive".into()));
        }
        if n_basis < order {
            return Err(Error::Config(format!(
                "n_basis={n_basis} is smaller than the spline order {order}"
            )));
        }
        if !(span > 0.0) {
            return Err(Error::Config(format!("basis span {span} must be positive")));
        }
        let pieces = n_basis - order + 1;
        let knots = (0..=pieces)
            .map(|i| if i == pieces { span } else { span * i as f64 / pieces as f64 })
            .collect();
        Self::new(n_basis, order, knots)
    }

    pub fn cubic(n_basis: usize, grid_len: usize) -> Result<Self> {
        Self::uniform(n_basis, CUBIC, grid_len as f64)
    }

    pub fn new(n_basis: usize, order: usize, knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("breakpoints must be strictly increasing".into()));
        }
        if n_basis != knots.len() - 2 + order {
            return Err(Error::Config(format!(
                "n_basis={n_basis} does not equal {} interior breakpoints + order {order}",
                knots.len() - 2
            )));
        }
        Ok(Self { n_basis, order, knots })
    }

    pub fn lo(&self) -> f64 {
        self.knots[0]
    }

    pub fn hi(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Breakpoints with the end knots repeated `order` times.
    pub fn knot_vector(&self) -> Vec<f64> {
        let inner = &self.knots[1..self.knots.len() - 1];
        let mut v = Vec::with_capacity(self.n_basis + self.order);
        v.extend(std::iter::repeat_n(self.lo(), self.order));
        v.extend_from_slice(inner);
        v.extend(std::iter::repeat_n(self.hi(), self.order));
        v
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let (lo, hi) = (self.lo(), self.hi());
        if !(x >= lo && x <= hi) {
            return Err(Error::Domain { value: x, lo, hi });
        }
        Ok(())
    }

    /// Index of the first non-zero basis function at `x` and the `order`
    /// non-zero values, via the Cox-de Boor triangle.
    fn nonzero(&self, knots: &[f64], x: f64, out: &mut [f64]) -> usize {
        let p = self.order - 1;
        let last = self.n_basis - 1;
        let span = if x >= self.hi() {
            last
        } else {
            // largest i in [p, last] with knots[i] <= x
            let upper = knots[p..=last].partition_point(|&k| k <= x);
            p + upper.saturating_sub(1)
        };

        let mut left = vec![0.0; self.order];
        let mut right = vec![0.0; self.order];
        out[0] = 1.0;
        for j in 1..=p {
            left[j] = x - knots[span + 1 - j];
            right[j] = knots[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = out[r] / (right[r + 1] + left[j - r]);
                out[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            out[j] = saved;
        }
        span - p
    }

    /// Dense `grid.len() x n_basis` matrix of basis values.
    pub fn design_matrix(&self, grid: &[f64]) -> Result<DMatrix<f64>> {
        let knots = self.knot_vector();
        let mut m = DMatrix::zeros(grid.len(), self.n_basis);
        let mut vals = vec![0.0; self.order];
        for (row, &x) in grid.iter().enumerate() {
            self.check_domain(x)?;
            let first = self.nonzero(&knots, x, &mut vals);
            for (j, &v) in vals.iter().enumerate() {
                m[(row, first + j)] = v;
            }
        }
        Ok(m)
    }

    /// `∫ φ_r φ_s` over `[lo, hi]`. The integrand is a degree-6 polynomial
    /// between breakpoints, so 4-point Gauss-Legendre per interval is exact.
    pub fn gram(&self) -> DMatrix<f64> {
        let (nodes, weights) = gauss_legendre_4(&self.knots);
        let b = self
            .design_matrix(&nodes)
            .expect("quadrature nodes lie inside the knot range");
        let mut weighted = b.clone();
        for (mut row, w) in weighted.row_iter_mut().zip(&weights) {
            row *= *w;
        }
        let g = b.transpose() * weighted;
        (&g + g.transpose()) * 0.5
    }
}

/// 4-point Gauss-Legendre nodes and weights on every interval between
/// consecutive `breaks`.
fn gauss_legendre_4(breaks: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let wa = (18.0 + 30f64.sqrt()) / 36.0;
    let wb = (18.0 - 30f64.sqrt()) / 36.0;
    let rule = [(-b, wb), (-a, wa), (a, wa), (b, wb)];
    let mut nodes = Vec::with_capacity(4 * breaks.len());
    let mut weights = Vec::with_capacity(4 * breaks.len());
    for w in breaks.windows(2) {
        let (mid, half) = ((w[0] + w[1]) / 2.0, (w[1] - w[0]) / 2.0);
        for &(x, wt) in &rule {
            nodes.push(mid + half * x);
            weights.push(half * wt);
        }
    }
    (nodes, weights)
}

/// Epoch midpoints `0.5, 1.5, ..., T - 0.5`.
pub fn epoch_grid(grid_len: usize) -> Vec<f64> {
    (0..grid_len).map(|j| j as f64 + 0.5).collect()
}

/// Least-squares projector onto one basis at fixed abscissae.
#[derive(Debug, Clone)]
pub struct BasisFitter {
    spec: BasisSpec,
    grid: Vec<f64>,
    /// `(BᵀB)⁻¹ Bᵀ`, `n_basis x grid.len()`.
    projector: DMatrix<f64>,
}

impl BasisFitter {
    pub fn new(spec: &BasisSpec, grid: &[f64]) -> Result<Self> {
        if grid.len() < spec.n_basis {
            return Err(Error::Fit(format!(
                "{} abscissae cannot determine {} coefficients",
                grid.len(),
                spec.n_basis
            )));
        }
        let design = spec.design_matrix(grid)?;
        let svd = design.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-10 * smax) {
            return Err(Error::Fit(format!(
                "rank-deficient design: singular values span [{smin:.3e}, {smax:.3e}]"
            )));
        }
        let projector = svd
            .pseudo_inverse(1e-12 * smax)
            .map_err(|e| Error::Fit(e.to_string()))?;
        Ok(Self {
            spec: spec.clone(),
            grid: grid.to_vec(),
            projector,
        })
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn fit(&self, curve: &[f64]) -> Result<Vec<f64>> {
        if curve.len() != self.grid.len() {
            return Err(Error::Contract(format!(
                "curve has {} samples, fitter expects {}",
                curve.len(),
                self.grid.len()
            )));
        }
        let y = DVector::from_column_slice(curve);
        Ok((&self.projector * y).iter().copied().collect())
    }
}

/// Least-squares coefficients of a curve sampled at the epoch midpoints.
pub fn fit_basis(curve: &[f64], spec: &BasisSpec) -> Result<Vec<f64>> {
    BasisFitter::new(spec, &epoch_grid(curve.len()))?.fit(curve)
}

pub fn evaluate_basis(coeffs: &[f64], spec: &BasisSpec, grid: &[f64]) -> Result<Vec<f64>> {
    if coeffs.len() != spec.n_basis {
        return Err(Error::Contract(format!(
            "{} coefficients for a basis of size {}",
            coeffs.len(),
            spec.n_basis
        )));
    }
    let b = spec.design_matrix(grid)?;
    Ok((b * DVector::from_column_slice(coeffs)).iter().copied().collect())
}

/// Feature curves divided by the per-variable mean of daily maxima.
#[derive(Debug, Clone)]
pub struct Standardized {
    pub curves: Vec<FeatureTriple>,
    pub scale: [f64; 3],
}

/// Divides variable `k` by `(1/N) Σ_i max_t X_ki(t)`. A zero divisor (every
/// curve of that variable identically zero) is replaced by 1.
pub fn standardize(triples: &[FeatureTriple]) -> Result<Standardized> {
    if triples.is_empty() {
        return Err(Error::InsufficientData("no days to standardize".into()));
    }
    let n = triples.len() as f64;
    let mut scale = [1.0; 3];
    for (k, s) in scale.iter_mut().enumerate() {
        let mean_max = triples
            .iter()
            .map(|t| t.variable(k).iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            .sum::<f64>()
            / n;
        let all_zero = triples.iter().all(|t| t.variable(k).iter().all(|&v| v == 0.0));
        *s = if all_zero || mean_max == 0.0 || !mean_max.is_finite() {
            1.0
        } else {
            mean_max
        };
    }
    let curves = triples
        .iter()
        .map(|t| FeatureTriple {
            s_curve: t.s_curve.iter().map(|v| v / scale[0]).collect(),
            i_curve: t.i_curve.iter().map(|v| v / scale[1]).collect(),
            p_curve: t.p_curve.iter().map(|v| v / scale[2]).collect(),
            q1: t.q1,
            q2: t.q2,
        })
        .collect();
    Ok(Standardized { curves, scale })
}

/// Standardized curves in coefficient form, one block per variable.
#[derive(Debug, Clone)]
pub struct SmoothedDataset {
    /// Per variable, an `N x R_k` coefficient matrix.
    pub coefficients: Vec<DMatrix<f64>>,
    pub bases: Vec<BasisSpec>,
    pub scale: Vec<f64>,
    /// Per variable, the `R_k x R_k` matrix of basis inner products.
    pub grams: Vec<DMatrix<f64>>,
}

impl SmoothedDataset {
    /// Assembles a dataset from coefficient blocks, computing the Gram
    /// matrices from the bases.
    pub fn from_coefficients(
        coefficients: Vec<DMatrix<f64>>,
        bases: Vec<BasisSpec>,
        scale: Vec<f64>,
    ) -> Result<Self> {
        if coefficients.is_empty()
            || coefficients.len() != bases.len()
            || scale.len() != bases.len()
        {
            return Err(Error::Contract("one coefficient block, basis and scale per variable".into()));
        }
        let n = coefficients[0].nrows();
        for (c, b) in coefficients.iter().zip(&bases) {
            if c.nrows() != n || c.ncols() != b.n_basis {
                return Err(Error::Contract(format!(
                    "coefficient block {}x{} does not match N={n}, n_basis={}",
                    c.nrows(),
                    c.ncols(),
                    b.n_basis
                )));
            }
        }
        let grams = bases.iter().map(BasisSpec::gram).collect();
        Ok(Self { coefficients, bases, scale, grams })
    }

    pub fn n_obs(&self) -> usize {
        self.coefficients.first().map_or(0, |c| c.nrows())
    }

    pub fn n_vars(&self) -> usize {
        self.coefficients.len()
    }

    /// Evaluates variable `k` of observation `i` on `grid`.
    pub fn evaluate(&self, k: usize, i: usize, grid: &[f64]) -> Result<Vec<f64>> {
        let row: Vec<f64> = self.coefficients[k].row(i).iter().copied().collect();
        evaluate_basis(&row, &self.bases[k], grid)
    }
}

/// Standardizes the triples and projects each variable on its own cubic
/// basis of size `n_basis[k]`.
pub fn smooth_features(triples: &[FeatureTriple], n_basis: [usize; 3]) -> Result<SmoothedDataset> {
    let std = standardize(triples)?;
    let grid_len = triples[0].s_curve.len();
    let bases = n_basis
        .iter()
        .map(|&r| BasisSpec::cubic(r, grid_len))
        .collect::<Result<Vec<_>>>()?;
    fit_on_bases(&std.curves, bases, std.scale.to_vec())
}

/// Smooths new triples for an existing model: each variable is divided by
/// the given `scale` and fitted on the given basis.
pub fn smooth_with(triples: &[FeatureTriple], bases: &[BasisSpec], scale: &[f64]) -> Result<SmoothedDataset> {
    if bases.len() != 3 || scale.len() != 3 {
        return Err(Error::Contract("three bases and three divisors expected".into()));
    }
    let scaled: Vec<FeatureTriple> = triples
        .iter()
        .map(|t| FeatureTriple {
            s_curve: t.s_curve.iter().map(|v| v / scale[0]).collect(),
            i_curve: t.i_curve.iter().map(|v| v / scale[1]).collect(),
            p_curve: t.p_curve.iter().map(|v| v / scale[2]).collect(),
            q1: t.q1,
            q2: t.q2,
        })
        .collect();
    fit_on_bases(&scaled, bases.to_vec(), scale.to_vec())
}

fn fit_on_bases(curves: &[FeatureTriple], bases: Vec<BasisSpec>, scale: Vec<f64>) -> Result<SmoothedDataset> {
    if curves.is_empty() {
        return Err(Error::InsufficientData("no curves to smooth".into()));
    }
    let grid_len = curves[0].s_curve.len();
    let grid = epoch_grid(grid_len);
    let mut coefficients = Vec::with_capacity(bases.len());
    let mut grams = Vec::with_capacity(bases.len());
    for (k, spec) in bases.iter().enumerate() {
        let fitter = BasisFitter::new(spec, &grid)?;
        let rows = crate::par_map(curves, |t| fitter.fit(t.variable(k)))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let mut c = DMatrix::zeros(rows.len(), spec.n_basis);
        for (i, row) in rows.iter().enumerate() {
            c.row_mut(i).copy_from_slice(row);
        }
        coefficients.push(c);
        grams.push(spec.gram());
    }
    Ok(SmoothedDataset {
        coefficients,
        bases,
        scale,
        grams,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook recursive definition, independent of the triangle above.
    fn recursive_basis(knots: &[f64], i: usize, order: usize, x: f64, last: usize) -> f64 {
        if order == 1 {
            let inside = knots[i] <= x && x < knots[i + 1];
            // closed right end for the final non-empty interval
            let at_end = x == knots[knots.len() - 1] && i == last;
            return if inside || at_end { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = knots[i + order - 1] - knots[i];
        if d1 > 0.0 {
            v += (x - knots[i]) / d1 * recursive_basis(knots, i, order - 1, x, last);
        }
        let d2 = knots[i + order] - knots[i + 1];
        if d2 > 0.0 {
            v += (knots[i + order] - x) / d2 * recursive_basis(knots, i + 1, order - 1, x, last);
        }
        v
    }

    fn gauss_legendre_gram(spec: &BasisSpec) -> DMatrix<f64> {
        // 5-point rule is exact for the degree-6 products on each interval
        let nodes = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        let weights = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let mut pts = Vec::new();
        let mut ws = Vec::new();
        for w in spec.knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            for (x, wt) in nodes.iter().zip(&weights) {
                pts.push(0.5 * (a + b) + 0.5 * (b - a) * x);
                ws.push(0.5 * (b - a) * wt);
            }
        }
        let b = spec.design_matrix(&pts).unwrap();
        let mut g = DMatrix::zeros(spec.n_basis, spec.n_basis);
        for (row, w) in b.row_iter().zip(&ws) {
            g += row.transpose() * row * *w;
        }
        g
    }

    #[test]
    fn uniform_spec_shape() {
        let s = BasisSpec::cubic(30, 1440).unwrap();
        assert_eq!(s.knots.len(), 28);
        assert_eq!(s.knots[0], 0.0);
        assert_eq!(*s.knots.last().unwrap(), 1440.0);
        assert_eq!(s.knot_vector().len(), 34);
        assert!(BasisSpec::cubic(3, 100).is_err());
        assert!(BasisSpec::new(5, 4, vec![0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn partition_of_unity() {
        let s = BasisSpec::cubic(17, 200).unwrap();
        let grid: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.1).collect();
        let b = s.design_matrix(&grid).unwrap();
        for row in b.row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn matches_recursive_definition() {
        let s = BasisSpec::new(9, 4, vec![0.0, 1.0, 2.5, 3.0, 5.0, 7.5, 10.0]).unwrap();
        let knots = s.knot_vector();
        let mut pts: Vec<f64> = s.knots.clone();
        pts.extend((0..97).map(|i| i as f64 * 0.1031));
        let b = s.design_matrix(&pts).unwrap();
        for (row, &x) in pts.iter().enumerate() {
            for j in 0..s.n_basis {
                let expect = recursive_basis(&knots, j, 4, x, s.n_basis - 1);
                assert!((b[(row, j)] - expect).abs() < 1e-12, "x={x} j={j}");
            }
        }
    }

    #[test]
    fn evaluate_outside_range_is_domain_error() {
        let s = BasisSpec::cubic(8, 10).unwrap();
        assert!(matches!(
            evaluate_basis(&[0.0; 8], &s, &[10.5]),
            Err(Error::Domain { .. })
        ));
        assert!(evaluate_basis(&[0.0; 8], &s, &[-1e-9]).is_err());
        assert!(evaluate_basis(&[0.0; 7], &s, &[1.0]).is_err());
    }

    #[test]
    fn constants_and_lines_are_reproduced() {
        let s = BasisSpec::cubic(30, 1440).unwrap();
        let grid = epoch_grid(1440);
        let c = fit_basis(&vec![1.0; 1440], &s).unwrap();
        let back = evaluate_basis(&c, &s, &grid).unwrap();
        assert!(back.iter().all(|v| (v - 1.0).abs() < 1e-10));

        let line: Vec<f64> = grid.iter().map(|t| 0.3 + 2.0 * t / 1440.0).collect();
        let c = fit_basis(&line, &s).unwrap();
        let back = evaluate_basis(&c, &s, &grid).unwrap();
        let err = back.iter().zip(&line).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");

        let zero = evaluate_basis(&vec![0.0; 30], &s, &grid).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_is_smoothed() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let noise: Vec<f64> = (0..1440).map(|_| rng.random::<f64>() - 0.5).collect();
        let s = BasisSpec::cubic(20, 1440).unwrap();
        let c = fit_basis(&noise, &s).unwrap();
        let fitted = evaluate_basis(&c, &s, &epoch_grid(1440)).unwrap();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let resid: Vec<f64> = noise.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        assert!(norm(&fitted) < norm(&noise));
        assert!(norm(&resid) > 0.0);
        // roughness: total variation drops
        let tv = |v: &[f64]| v.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>();
        assert!(tv(&fitted) < 0.1 * tv(&noise));
    }

    #[test]
    fn projection_is_idempotent() {
        let s = BasisSpec::cubic(12, 300).unwrap();
        let curve: Vec<f64> = (0..300).map(|t| ((t as f64) / 20.0).sin() + (t % 7) as f64).collect();
        let c1 = fit_basis(&curve, &s).unwrap();
        let again = evaluate_basis(&c1, &s, &epoch_grid(300)).unwrap();
        let c2 = fit_basis(&again, &s).unwrap();
        for (a, b) in c1.iter().zip(&c2) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn rank_deficient_fit_errors() {
        let s = BasisSpec::cubic(10, 100).unwrap();
        assert!(matches!(fit_basis(&[1.0; 6], &s), Err(Error::Fit(_))));
        // enough samples in total, but all inside two knot intervals
        let grid: Vec<f64> = (0..40).map(|i| i as f64 * 0.5).collect();
        assert!(matches!(BasisFitter::new(&s, &grid), Err(Error::Fit(_))));
    }

    #[test]
    fn gram_matches_exact_quadrature() {
        for (r, t) in [(30, 1440), (9, 200), (5, 17)] {
            let s = BasisSpec::cubic(r, t).unwrap();
            let g = s.gram();
            let exact = gauss_legendre_gram(&s);
            for i in 0..r {
                for j in 0..r {
                    let e = exact[(i, j)];
                    if e.abs() > 1e-12 {
                        assert!(((g[(i, j)] - e) / e).abs() < 1e-6, "({i},{j}) {} vs {e}", g[(i, j)]);
                    } else {
                        assert!(g[(i, j)].abs() < 1e-9);
                    }
                }
            }
            assert_eq!(g, g.transpose());
            let eig = g.symmetric_eigenvalues();
            assert!(eig.min() > -1e-12);
        }
    }

    fn triple(s: Vec<f64>, i: Vec<f64>, p: Vec<f64>) -> FeatureTriple {
        FeatureTriple { s_curve: s, i_curve: i, p_curve: p, q1: 8, q2: 4 }
    }

    #[test]
    fn standardize_examples() {
        let a = triple(vec![10.0, 100.0], vec![1.0, 1.0], vec![0.0, 0.0]);
        let b = triple(vec![300.0, 300.0], vec![3.0, 3.0], vec![0.0, 0.0]);
        let st = standardize(&[a, b]).unwrap();
        assert_eq!(st.scale, [200.0, 2.0, 1.0]);
        assert_eq!(st.curves[0].s_curve, vec![0.05, 0.5]);
        assert_eq!(st.curves[1].p_curve, vec![0.0, 0.0]);

        let one = triple(vec![1.0, 4.0], vec![2.0, 8.0], vec![1.0, 3.0]);
        let st = standardize(&[one]).unwrap();
        assert_eq!(st.curves[0].s_curve.iter().cloned().fold(0.0, f64::max), 1.0);
        assert_eq!(st.curves[0].p_curve, vec![1.0 / 3.0, 1.0]);
        assert!(standardize(&[]).is_err());
    }
}
