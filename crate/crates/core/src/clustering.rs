//! K-means and PAM on score vectors, plus gap-statistic selection of K.
//!
//! Distances are unweighted Euclidean. Exact distance ties go to the lowest
//! cluster index.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Kmeans,
    Pam,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kmeans" | "k-means" => Ok(Method::Kmeans),
            "pam" | "kmedoids" | "k-medoids" => Ok(Method::Pam),
            other => Err(Error::Config(format!("unknown clustering method {other:?}"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Kmeans => "kmeans",
            Method::Pam => "pam",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centers {
    Centroids(Vec<Vec<f64>>),
    /// Row indices of the medoid observations.
    Medoids(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub k: usize,
    pub labels: Vec<usize>,
    pub centers: Centers,
    /// Within-cluster sum of squares for K-means; sum of distances to the
    /// medoids for PAM.
    pub inertia: f64,
    pub seed: u64,
}

impl ClusterResult {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KmeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
}

impl Default for KmeansOptions {
    fn default() -> Self {
        Self {
            restarts: 25,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

/// Row-major copy of an `N x d` matrix.
#[derive(Debug, Clone)]
pub(crate) struct Points {
    data: Vec<f64>,
    dim: usize,
}

impl Points {
    pub(crate) fn from_matrix(m: &DMatrix<f64>) -> Self {
        let dim = m.ncols();
        let mut data = Vec::with_capacity(m.len());
        for row in m.row_iter() {
            data.extend(row.iter());
        }
        Self { data, dim }
    }

    fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Contract(format!("k={k} must lie in 1..={n}")));
    }
    Ok(())
}

/// RNG for replicate `stream` of a run seeded with `seed`.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus(points: &Points, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points.row(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points.row(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), &c));
        }
        centers.push(c);
    }
    centers
}

#[derive(Debug, Clone)]
pub(crate) struct LloydRun {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after each assignment step.
    #[cfg_attr(not(test), allow(dead_code))]
    pub history: Vec<f64>,
}

pub(crate) fn lloyd(points: &Points, mut centers: Vec<Vec<f64>>, opts: &KmeansOptions) -> LloydRun {
    let n = points.len();
    let k = centers.len();
    let dim = points.dim;
    let mut labels = vec![0; n];
    let mut dists = vec![0.0; n];
    let mut history = Vec::new();

    for iter in 0..opts.max_iter.max(1) {
        let mut changed = false;
        for i in 0..n {
            let (c, d) = nearest(points.row(i), &centers);
            changed |= c != labels[i];
            labels[i] = c;
            dists[i] = d;
        }
        history.push(dists.iter().sum());

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for (s, x) in sums[labels[i]].iter_mut().zip(points.row(i)) {
                *s += x;
            }
        }
        let mut shift: f64 = 0.0;
        let mut reseeded = false;
        for c in 0..k {
            let new = if counts[c] > 0 {
                sums[c].iter().map(|s| s / counts[c] as f64).collect()
            } else {
                // farthest point from its own centroid takes the empty slot
                let far = (0..n)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .unwrap();
                dists[far] = 0.0;
                reseeded = true;
                points.row(far).to_vec()
            };
            shift = shift.max(sq_dist(&new, &centers[c]).sqrt());
            centers[c] = new;
        }
        if iter > 0 && !reseeded && (shift < opts.tol || !changed) {
            break;
        }
    }

    for i in 0..n {
        let (c, d) = nearest(points.row(i), &centers);
        labels[i] = c;
        dists[i] = d;
    }
    let inertia = dists.iter().sum();
    history.push(inertia);
    LloydRun {
        labels,
        centers,
        inertia,
        history,
    }
}

/// Best of `opts.restarts` k-means++ seeded Lloyd runs, by inertia.
pub fn kmeans(scores: &DMatrix<f64>, k: usize, seed: u64, opts: &KmeansOptions) -> Result<ClusterResult> {
    check_k(scores.nrows(), k)?;
    let points = Points::from_matrix(scores);
    let restarts: Vec<u64> = (0..opts.restarts.max(1) as u64).collect();
    let runs = crate::par_map(&restarts, |&r| {
        let mut rng = stream_rng(seed, r);
        let init = plus_plus(&points, k, &mut rng);
        lloyd(&points, init, opts)
    });
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.inertia.total_cmp(&b.inertia).then(ia.cmp(ib)))
        .map(|(_, r)| r)
        .unwrap();
    Ok(ClusterResult {
        k,
        labels: best.labels,
        centers: Centers::Centroids(best.centers),
        inertia: best.inertia,
        seed,
    })
}

/// Symmetric Euclidean distance matrix, row-major `n x n`.
pub(crate) fn distance_matrix(points: &Points) -> Vec<f64> {
    let n = points.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = sq_dist(points.row(i), points.row(j)).sqrt();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

#[derive(Debug, Clone)]
pub(crate) struct PamRun {
    pub medoids: Vec<usize>,
    pub labels: Vec<usize>,
    pub cost: f64,
    /// Total cost after BUILD and after each applied swap.
    #[cfg_attr(not(test), allow(dead_code))]
    pub history: Vec<f64>,
}

fn assign_medoids(dist: &[f64], n: usize, medoids: &[usize]) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let mut near = vec![0; n];
    let mut d1 = vec![f64::INFINITY; n];
    let mut d2 = vec![f64::INFINITY; n];
    for j in 0..n {
        for (slot, &m) in medoids.iter().enumerate() {
            let d = dist[j * n + m];
            if d < d1[j] {
                d2[j] = d1[j];
                d1[j] = d;
                near[j] = slot;
            } else if d < d2[j] {
                d2[j] = d;
            }
        }
    }
    (near, d1, d2)
}

fn build(dist: &[f64], n: usize, k: usize) -> Vec<usize> {
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let mut best_d = vec![f64::INFINITY; n];
    for _ in 0..k {
        let mut pick = (usize::MAX, f64::INFINITY);
        for cand in 0..n {
            if medoids.contains(&cand) {
                continue;
            }
            let total: f64 = (0..n).map(|j| best_d[j].min(dist[j * n + cand])).sum();
            if total < pick.1 {
                pick = (cand, total);
            }
        }
        medoids.push(pick.0);
        for j in 0..n {
            best_d[j] = best_d[j].min(dist[j * n + pick.0]);
        }
    }
    medoids
}

/// SWAP phase: applies the single best improving exchange per pass until
/// none lowers the cost.
fn swap(dist: &[f64], n: usize, mut medoids: Vec<usize>) -> PamRun {
    let k = medoids.len();
    let (mut near, mut d1, mut d2) = assign_medoids(dist, n, &medoids);
    let mut cost: f64 = d1.iter().sum();
    let mut history = vec![cost];
    loop {
        let mut best = (0.0, usize::MAX, usize::MAX);
        for slot in 0..k {
            for h in 0..n {
                if medoids.contains(&h) {
                    continue;
                }
                let mut delta = 0.0;
                for j in 0..n {
                    let dh = dist[j * n + h];
                    let new = if near[j] == slot { d2[j].min(dh) } else { d1[j].min(dh) };
                    delta += new - d1[j];
                }
                if delta < best.0 {
                    best = (delta, slot, h);
                }
            }
        }
        if best.1 == usize::MAX || best.0 > -1e-12 * cost.max(1e-300) {
            break;
        }
        medoids[best.1] = best.2;
        (near, d1, d2) = assign_medoids(dist, n, &medoids);
        cost = d1.iter().sum();
        history.push(cost);
    }
    PamRun {
        medoids,
        labels: near,
        cost,
        history,
    }
}

/// BUILD followed by SWAP.
pub(crate) fn pam_on_distances(dist: &[f64], n: usize, k: usize) -> PamRun {
    swap(dist, n, build(dist, n, k))
}

/// SWAP started from BUILD and from `extra` random medoid sets; the lowest
/// cost wins, with the BUILD start preferred on ties.
pub(crate) fn pam_restarts(dist: &[f64], n: usize, k: usize, seed: u64, extra: usize) -> PamRun {
    let starts: Vec<u64> = (0..=extra as u64).collect();
    crate::par_map(&starts, |&s| {
        if s == 0 {
            pam_on_distances(dist, n, k)
        } else {
            let mut rng = stream_rng(seed, s);
            let init = rand::seq::index::sample(&mut rng, n, k).into_vec();
            swap(dist, n, init)
        }
    })
    .into_iter()
    .enumerate()
    .min_by(|(ia, a), (ib, b)| a.cost.total_cmp(&b.cost).then(ia.cmp(ib)))
    .map(|(_, r)| r)
    .unwrap()
}

/// Number of random medoid sets SWAP is restarted from besides BUILD.
pub const PAM_EXTRA_STARTS: usize = 10;

/// Partitioning around medoids: greedy BUILD, then best-improvement SWAP
/// until no exchange lowers the total distance. SWAP is also run from
/// [`PAM_EXTRA_STARTS`] seeded random medoid sets and the cheapest result
/// is kept.
pub fn pam(scores: &DMatrix<f64>, k: usize, seed: u64) -> Result<ClusterResult> {
    let n = scores.nrows();
    check_k(n, k)?;
    let points = Points::from_matrix(scores);
    let run = pam_restarts(&distance_matrix(&points), n, k, seed, PAM_EXTRA_STARTS);
    Ok(ClusterResult {
        k,
        labels: run.labels,
        centers: Centers::Medoids(run.medoids),
        inertia: run.cost,
        seed,
    })
}

pub fn cluster(
    scores: &DMatrix<f64>,
    k: usize,
    method: Method,
    seed: u64,
    opts: &KmeansOptions,
) -> Result<ClusterResult> {
    match method {
        Method::Kmeans => kmeans(scores, k, seed, opts),
        Method::Pam => pam(scores, k, seed),
    }
}

/// Pooled within-cluster sum of squares around cluster means.
pub fn within_dispersion(scores: &DMatrix<f64>, labels: &[usize], k: usize) -> f64 {
    let points = Points::from_matrix(scores);
    let dim = points.dim;
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(points.row(i)) {
            *s += x;
        }
    }
    let means: Vec<Vec<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s.iter().map(|v| v / c.max(1) as f64).collect())
        .collect();
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(points.row(i), &means[l]))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCurve {
    pub ks: Vec<usize>,
    pub gaps: Vec<f64>,
    pub sks: Vec<f64>,
    /// `log W_k` of the observed data.
    pub log_w: Vec<f64>,
    pub chosen_k: usize,
}

/// Smallest `k` with `Gap(k) >= Gap(k+1) - s_{k+1}`, else the largest `k`.
pub fn choose_k(ks: &[usize], gaps: &[f64], sks: &[f64]) -> usize {
    for i in 0..ks.len().saturating_sub(1) {
        if gaps[i] >= gaps[i + 1] - sks[i + 1] {
            return ks[i];
        }
    }
    *ks.last().unwrap()
}

fn log_dispersion(data: &DMatrix<f64>, k: usize, method: Method, seed: u64, opts: &KmeansOptions) -> Result<f64> {
    let res = cluster(data, k, method, seed, opts)?;
    Ok(within_dispersion(data, &res.labels, k).max(1e-300).ln())
}

/// Gap statistic for `k = 1..=k_max` against `b` reference sets drawn
/// uniformly over the bounding box of the scores.
pub fn gap_statistic(
    scores: &DMatrix<f64>,
    k_max: usize,
    b: usize,
    method: Method,
    seed: u64,
    opts: &KmeansOptions,
) -> Result<GapCurve> {
    let n = scores.nrows();
    if k_max < 2 || b == 0 {
        return Err(Error::Contract(format!("gap statistic needs k_max >= 2 and b >= 1, got {k_max}, {b}")));
    }
    if n < 2 {
        return Err(Error::InsufficientData("gap statistic needs at least 2 observations".into()));
    }
    let ks: Vec<usize> = (1..=k_max.min(n)).collect();
    let dim = scores.ncols();
    let lo: Vec<f64> = (0..dim).map(|j| scores.column(j).min()).collect();
    let hi: Vec<f64> = (0..dim).map(|j| scores.column(j).max()).collect();

    let log_w = ks
        .iter()
        .map(|&k| log_dispersion(scores, k, method, seed, opts))
        .collect::<Result<Vec<_>>>()?;

    // stream 0 of each replicate draws the data, later streams feed the clustering
    let replicates: Vec<u64> = (0..b as u64).collect();
    let reference = crate::par_map(&replicates, |&r| -> Result<Vec<f64>> {
        let rep_seed = seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(r + 1));
        let mut rng = stream_rng(rep_seed, 0);
        let data = DMatrix::from_fn(n, dim, |_, j| {
            if hi[j] > lo[j] {
                rng.random_range(lo[j]..hi[j])
            } else {
                lo[j]
            }
        });
        ks.iter()
            .map(|&k| log_dispersion(&data, k, method, rep_seed, opts))
            .collect()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let bf = b as f64;
    let mut gaps = Vec::with_capacity(ks.len());
    let mut sks = Vec::with_capacity(ks.len());
    for (idx, lw) in log_w.iter().enumerate() {
        let mean = reference.iter().map(|r| r[idx]).sum::<f64>() / bf;
        let var = reference.iter().map(|r| (r[idx] - mean).powi(2)).sum::<f64>() / bf;
        gaps.push(mean - lw);
        sks.push(var.sqrt() * (1.0 + 1.0 / bf).sqrt());
    }
    let chosen_k = choose_k(&ks, &gaps, &sks);
    Ok(GapCurve {
        ks,
        gaps,
        sks,
        log_w,
        chosen_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn blobs(centers: &[[f64; 2]], per: usize, sd: f64, seed: u64) -> (DMatrix<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = centers.len() * per;
        let mut m = DMatrix::zeros(n, 2);
        let mut truth = Vec::with_capacity(n);
        for (g, c) in centers.iter().enumerate() {
            for i in 0..per {
                let row = g * per + i;
                for j in 0..2 {
                    let z: f64 = rng.sample(StandardNormal);
                    m[(row, j)] = c[j] + sd * z;
                }
                truth.push(g);
            }
        }
        (m, truth)
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        let mut map = std::collections::HashMap::new();
        let mut inv = std::collections::HashMap::new();
        a.iter().zip(b).all(|(x, y)| {
            *map.entry(x).or_insert(y) == y && *inv.entry(y).or_insert(x) == x
        })
    }

    #[test]
    fn kmeans_separates_blobs() {
        let (m, truth) = blobs(&[[-5.0, 0.0], [5.0, 0.0]], 40, 1.0, 1);
        let r = kmeans(&m, 2, 3, &KmeansOptions::default()).unwrap();
        assert!(same_partition(&r.labels, &truth));
        assert_eq!(r.sizes(), vec![40, 40]);
    }

    #[test]
    fn kmeans_extreme_k() {
        let (m, _) = blobs(&[[0.0, 0.0]], 12, 1.0, 2);
        let r = kmeans(&m, 12, 1, &KmeansOptions::default()).unwrap();
        assert!(r.inertia < 1e-20);
        let mut l = r.labels.clone();
        l.sort();
        assert_eq!(l, (0..12).collect::<Vec<_>>());

        let r = kmeans(&m, 1, 1, &KmeansOptions::default()).unwrap();
        assert!(r.labels.iter().all(|&l| l == 0));
        let mean = m.row_mean();
        let ss: f64 = m.row_iter().map(|row| (row - &mean).norm_squared()).sum();
        assert!((r.inertia - ss).abs() < 1e-9 * ss);

        assert!(kmeans(&m, 13, 1, &KmeansOptions::default()).is_err());
        assert!(kmeans(&m, 0, 1, &KmeansOptions::default()).is_err());
    }

    #[test]
    fn lloyd_inertia_never_increases() {
        for seed in 0..20 {
            let (m, _) = blobs(&[[0.0, 0.0], [3.0, 1.0], [1.0, 4.0]], 30, 1.5, seed);
            let points = Points::from_matrix(&m);
            let mut rng = stream_rng(seed, 0);
            // deliberately poor start: all centers on nearby points
            let init: Vec<Vec<f64>> = (0..4).map(|i| points.row(i).to_vec()).collect();
            let run = lloyd(&points, init, &KmeansOptions::default());
            for w in run.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{:?}", run.history);
            }
            let init = plus_plus(&points, 5, &mut rng);
            let run = lloyd(&points, init, &KmeansOptions::default());
            assert!(run.history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        }
    }

    #[test]
    fn empty_clusters_are_reseeded() {
        // duplicated points force an empty cluster from identical seeds
        let m = DMatrix::from_row_slice(6, 1, &[0.0, 0.0, 0.0, 10.0, 10.0, 20.0]);
        let points = Points::from_matrix(&m);
        let init = vec![vec![0.0], vec![0.0], vec![0.0]];
        let run = lloyd(&points, init, &KmeansOptions::default());
        let mut used: Vec<usize> = run.labels.clone();
        used.sort();
        used.dedup();
        assert_eq!(used.len(), 3);
        assert!(run.inertia < 1e-12);
    }

    #[test]
    fn kmeans_is_deterministic() {
        let (m, _) = blobs(&[[0.0, 0.0], [2.0, 2.0], [4.0, 0.0]], 25, 1.2, 9);
        let a = kmeans(&m, 3, 77, &KmeansOptions::default()).unwrap();
        let b = kmeans(&m, 3, 77, &KmeansOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pam_separates_blobs_with_inner_medoids() {
        let (m, truth) = blobs(&[[-10.0, 0.0], [10.0, 0.0]], 30, 1.0, 4);
        let r = pam(&m, 2, 0).unwrap();
        assert!(same_partition(&r.labels, &truth));
        let Centers::Medoids(meds) = &r.centers else { panic!() };
        let mut groups: Vec<usize> = meds.iter().map(|&i| truth[i]).collect();
        groups.sort();
        assert_eq!(groups, vec![0, 1]);
    }

    fn brute_force_cost(dist: &[f64], n: usize, k: usize) -> f64 {
        fn rec(dist: &[f64], n: usize, k: usize, start: usize, chosen: &mut Vec<usize>, best: &mut f64) {
            if chosen.len() == k {
                let cost: f64 = (0..n)
                    .map(|j| chosen.iter().map(|&m| dist[j * n + m]).fold(f64::INFINITY, f64::min))
                    .sum();
                *best = best.min(cost);
                return;
            }
            for c in start..n {
                chosen.push(c);
                rec(dist, n, k, c + 1, chosen, best);
                chosen.pop();
            }
        }
        let mut best = f64::INFINITY;
        rec(dist, n, k, 0, &mut Vec::new(), &mut best);
        best
    }

    #[test]
    fn pam_outlier_is_not_a_medoid() {
        let m = DMatrix::from_row_slice(
            9,
            2,
            &[
                0.0, 0.0, 0.5, 0.2, -0.3, 0.4, 0.1, -0.5, 8.0, 8.0, 8.4, 8.1, 7.7, 8.3, 8.2, 7.6, 14.0, 14.0,
            ],
        );
        let r = pam(&m, 2, 0).unwrap();
        let Centers::Medoids(meds) = &r.centers else { panic!() };
        assert!(!meds.contains(&8));
        let points = Points::from_matrix(&m);
        let dist = distance_matrix(&points);
        assert!((r.inertia - brute_force_cost(&dist, 9, 2)).abs() < 1e-12);
        // the K-means partition with its best in-cluster medoids costs at least as much
        let km = kmeans(&m, 2, 0, &KmeansOptions::default()).unwrap();
        let km_cost: f64 = (0..2)
            .map(|c| {
                let idx: Vec<usize> = (0..9).filter(|&i| km.labels[i] == c).collect();
                idx.iter()
                    .map(|&cand| idx.iter().map(|&i| dist[i * 9 + cand]).sum::<f64>())
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        assert!(r.inertia <= km_cost + 1e-12);
    }

    #[test]
    fn pam_cost_never_increases_and_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let n = rng.random_range(4..=12);
            let k = rng.random_range(1..=3);
            let m = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>() * 10.0);
            let points = Points::from_matrix(&m);
            let dist = distance_matrix(&points);
            let single = pam_on_distances(&dist, n, k);
            assert!(single.history.windows(2).all(|w| w[1] <= w[0]));
            let run = pam_restarts(&dist, n, k, 5, PAM_EXTRA_STARTS);
            assert!(run.history.windows(2).all(|w| w[1] <= w[0]));
            assert!(run.cost <= single.cost);
            let opt = brute_force_cost(&dist, n, k);
            assert!(run.cost <= opt * 1.02 + 1e-12, "n={n} k={k} cost={} opt={opt}", run.cost);
        }
    }

    #[test]
    fn costs_are_label_permutation_invariant() {
        let (m, _) = blobs(&[[0.0, 0.0], [5.0, 5.0], [0.0, 6.0]], 15, 1.0, 5);
        let r = kmeans(&m, 3, 1, &KmeansOptions::default()).unwrap();
        let w = within_dispersion(&m, &r.labels, 3);
        let perm = [2, 0, 1];
        let relabeled: Vec<usize> = r.labels.iter().map(|&l| perm[l]).collect();
        assert_eq!(within_dispersion(&m, &relabeled, 3), w);
        assert!((w - r.inertia).abs() < 1e-9 * w);
    }

    #[test]
    fn choose_k_rule() {
        assert_eq!(choose_k(&[1, 2, 3, 4], &[0.1, 0.5, 0.9, 0.85], &[0.01; 4]), 3);
        assert_eq!(choose_k(&[1, 2, 3], &[0.5, 0.4, 0.3], &[0.01; 3]), 1);
        assert_eq!(choose_k(&[1, 2, 3], &[0.1, 0.2, 0.3], &[0.01; 3]), 3);
    }

    #[test]
    fn gap_finds_three_blobs() {
        let (m, _) = blobs(&[[0.0, 0.0], [10.0, 0.0], [5.0, 9.0]], 30, 1.0, 6);
        let g = gap_statistic(&m, 6, 10, Method::Kmeans, 3, &KmeansOptions { restarts: 5, ..Default::default() }).unwrap();
        assert_eq!(g.chosen_k, 3);
        assert_eq!(g.ks, (1..=6).collect::<Vec<_>>());
        assert!(g.sks.iter().all(|&s| s >= 0.0));
        assert!(gap_statistic(&m, 1, 10, Method::Kmeans, 0, &KmeansOptions::default()).is_err());
    }
}
