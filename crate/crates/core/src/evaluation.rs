//! Agreement between a predicted partition and ground truth.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Contingency table with rows indexed by truth clusters and columns by
/// predicted clusters, both ordered by label value.
fn contingency(truth: &[usize], predicted: &[usize]) -> Result<Vec<Vec<u64>>> {
    if truth.len() != predicted.len() {
        return Err(Error::Contract(format!(
            "partitions have {} and {} labels",
            truth.len(),
            predicted.len()
        )));
    }
    let index = |labels: &[usize]| -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for &l in labels {
            m.entry(l).or_insert(0);
        }
        for (i, v) in m.values_mut().enumerate() {
            *v = i;
        }
        m
    };
    let rows = index(truth);
    let cols = index(predicted);
    let mut table = vec![vec![0u64; cols.len()]; rows.len()];
    for (t, p) in truth.iter().zip(predicted) {
        table[rows[t]][cols[p]] += 1;
    }
    Ok(table)
}

/// Minimum-cost perfect assignment on a square matrix (Hungarian method,
/// shortest augmenting path form). Returns `assignment[row] = column`.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based potentials as in the classical O(n^3) formulation
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut col_of = vec![0usize; n + 1];
    for i in 1..=n {
        col_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_of[j0] = col_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if col_of[j] > 0 {
            assignment[col_of[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Correct classification rate: the largest fraction of observations whose
/// predicted cluster maps to their true cluster, over one-to-one mappings
/// (optimal assignment on the zero-padded square confusion matrix).
pub fn ccr(truth: &[usize], predicted: &[usize]) -> Result<f64> {
    let table = contingency(truth, predicted)?;
    let n = truth.len();
    if n == 0 {
        return Err(Error::Contract("empty partitions".into()));
    }
    let size = table.len().max(table[0].len());
    let cost: Vec<Vec<f64>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| -(table.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0) as f64))
                .collect()
        })
        .collect();
    let assignment = min_cost_assignment(&cost);
    let agree: f64 = assignment.iter().enumerate().map(|(i, &j)| -cost[i][j]).sum();
    Ok(agree / n as f64)
}

fn pairs(n: u64) -> i128 {
    let n = n as i128;
    n * (n - 1) / 2
}

/// Hubert-Arabie adjusted Rand index. Pair counts are exact integers; the
/// only floating-point operation is the final ratio. When both partitions
/// are trivial in the same way (the index is 0/0) the result is 1 if they
/// agree up to relabeling and 0 otherwise.
pub fn adjusted_rand(truth: &[usize], predicted: &[usize]) -> Result<f64> {
    let table = contingency(truth, predicted)?;
    let n = truth.len() as u64;
    if n == 0 {
        return Err(Error::Contract("empty partitions".into()));
    }
    let index: i128 = table.iter().flatten().map(|&c| pairs(c)).sum();
    let a: i128 = table.iter().map(|r| pairs(r.iter().sum())).sum();
    let b: i128 = (0..table[0].len())
        .map(|j| pairs(table.iter().map(|r| r[j]).sum()))
        .sum();
    let total = pairs(n);

    // ARI = (index - a*b/total) / ((a+b)/2 - a*b/total), scaled by 2*total
    let num = 2 * (index * total - a * b);
    let den = (a + b) * total - 2 * a * b;
    if den == 0 {
        let identical = table.iter().all(|r| r.iter().filter(|&&c| c > 0).count() == 1)
            && (0..table[0].len()).all(|j| table.iter().filter(|r| r[j] > 0).count() == 1);
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    Ok(num as f64 / den as f64)
}
