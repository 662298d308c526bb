//! The three functional variables built from one day of activity:
//!
//! * the cumulative sum curve (amount),
//! * the ordered quantile slope curve (intensity with time-of-day removed),
//! * the mean score curve (time-of-day pattern with amount removed).
//!
//! Integrals over the epoch grid are prefix sums with unit epoch width.
//! Epoch indices that appear in quantile times are 1-based, so `times[k] = t`
//! means the threshold is first met at the `t`-th epoch, and `times[0] = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{validate_grid, StepDay};

/// Activity-time quantiles of a cumulative curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileProfile {
    pub q: usize,
    /// `q + 1` epoch indices, `times[0] = 0`.
    pub times: Vec<usize>,
    pub total: f64,
}

/// The three feature curves of one day, before standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTriple {
    pub s_curve: Vec<f64>,
    pub i_curve: Vec<f64>,
    pub p_curve: Vec<f64>,
    pub q1: usize,
    pub q2: usize,
}

impl FeatureTriple {
    pub fn variable(&self, k: usize) -> &[f64] {
        match k {
            0 => &self.s_curve,
            1 => &self.i_curve,
            2 => &self.p_curve,
            _ => panic!("feature variable index {k} out of range"),
        }
    }
}

/// Short names of the three variables, in order.
pub const VARIABLE_NAMES: [&str; 3] = ["cumulative_sum", "ordered_quantile_slope", "mean_score"];

pub fn cumulative_sum(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

fn threshold(total: f64, k: usize, q: usize) -> f64 {
    if k == q {
        total
    } else {
        total * k as f64 / q as f64
    }
}

/// First 1-based index at which `cum` reaches `level`, or `len` if never.
fn first_reaching(cum: &[f64], level: f64) -> usize {
    cum.iter()
        .position(|&s| s >= level)
        .map_or(cum.len(), |i| i + 1)
}

/// Activity-time quantiles `times[k] = inf { t : S(t) >= (k/q) S(T) }`.
///
/// A curve with zero total has no quantiles and yields an [`Error::Dataset`];
/// the feature builders map such days to all-zero curves.
pub fn quantile_times(s_curve: &[f64], q: usize) -> Result<QuantileProfile> {
    if q == 0 {
        return Err(Error::Config("number of quantiles must be positive".into()));
    }
    let total = *s_curve
        .last()
        .ok_or_else(|| Error::Dataset("empty curve".into()))?;
    if total <= 0.0 {
        return Err(Error::Dataset("degenerate day: total activity is zero".into()));
    }
    let mut times = Vec::with_capacity(q + 1);
    times.push(0);
    for k in 1..=q {
        times.push(first_reaching(s_curve, threshold(total, k, q)));
    }
    Ok(QuantileProfile { q, times, total })
}

/// Piecewise-constant rate `(total / q) / segment length` on the 1-based
/// epochs `times[k] <= t < times[k + 1]`; epochs at or past `times[q]` take
/// the last segment's rate. Collapsed segments use a one-epoch denominator.
pub fn quantile_slope(profile: &QuantileProfile, grid_len: usize) -> Vec<f64> {
    let q = profile.q;
    let quota = profile.total / q as f64;
    let rates: Vec<f64> = profile
        .times
        .windows(2)
        .map(|w| quota / (w[1].saturating_sub(w[0])).max(1) as f64)
        .collect();

    let mut out = vec![0.0; grid_len];
    let mut seg = 0;
    for (idx, slot) in out.iter_mut().enumerate() {
        let t = idx + 1;
        while seg + 1 < q && t >= profile.times[seg + 1] {
            seg += 1;
        }
        *slot = rates[seg];
    }
    out
}

/// Sorted quantile slope. Zero days give an all-zero curve.
pub fn ordered_quantile_slope(values: &[f64], q1: usize) -> Result<Vec<f64>> {
    let s = cumulative_sum(values);
    match quantile_times(&s, q1) {
        Ok(profile) => {
            let mut slope = quantile_slope(&profile, values.len());
            slope.sort_by(f64::total_cmp);
            Ok(slope)
        }
        Err(Error::Dataset(_)) => Ok(vec![0.0; values.len()]),
        Err(e) => Err(e),
    }
}

/// Per-epoch score `u(t)`: the band `k` of ordered-activity quantiles that
/// contains the ascending rank of the value observed at epoch `t`. Ties in
/// the ranking go to the earlier epoch. Zero days score 0 everywhere.
pub fn epoch_scores(values: &[f64], q: usize) -> Result<Vec<usize>> {
    if q == 0 {
        return Err(Error::Config("number of quantiles must be positive".into()));
    }
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    // sort_by is stable, so equal values keep epoch order
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let cum = cumulative_sum(&sorted);
    let total = cum.last().copied().unwrap_or(0.0);
    if total <= 0.0 {
        return Ok(vec![0; n]);
    }

    let bounds: Vec<usize> = std::iter::once(0)
        .chain((1..=q).map(|k| first_reaching(&cum, threshold(total, k, q))))
        .collect();

    let mut scores = vec![0; n];
    let mut band = 0;
    for (pos, &epoch) in order.iter().enumerate() {
        let rank = pos + 1;
        while band + 1 < q && rank > bounds[band + 1] {
            band += 1;
        }
        scores[epoch] = band;
    }
    Ok(scores)
}

/// Block averages of [`epoch_scores`] over `q2` equal blocks, repeated at
/// every epoch of each block. The grid length must be divisible by `q2`.
pub fn mean_score(values: &[f64], q2: usize) -> Result<Vec<f64>> {
    validate_grid(values.len(), q2)?;
    let scores = epoch_scores(values, q2)?;
    let block = values.len() / q2;
    let mut out = Vec::with_capacity(values.len());
    for chunk in scores.chunks(block) {
        let mean = chunk.iter().sum::<usize>() as f64 / block as f64;
        out.extend(std::iter::repeat_n(mean, block));
    }
    Ok(out)
}

pub fn feature_triple(values: &[f64], q1: usize, q2: usize) -> Result<FeatureTriple> {
    if q1 == 0 {
        return Err(Error::Config("q1 must be positive".into()));
    }
    Ok(FeatureTriple {
        s_curve: cumulative_sum(values),
        i_curve: ordered_quantile_slope(values, q1)?,
        p_curve: mean_score(values, q2)?,
        q1,
        q2,
    })
}

pub fn day_features(day: &StepDay, q1: usize, q2: usize) -> Result<FeatureTriple> {
    feature_triple(&day.values(), q1, q2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(total: f64, times: Vec<usize>) -> QuantileProfile {
        QuantileProfile {
            q: times.len() - 1,
            times,
            total,
        }
    }

    #[test]
    fn cumulative_sum_examples() {
        assert_eq!(cumulative_sum(&[1.0, 2.0, 3.0]), vec![1.0, 3.0, 6.0]);
        assert_eq!(cumulative_sum(&[0.0; 5]), vec![0.0; 5]);
        assert_eq!(
            cumulative_sum(&[10.0; 4]),
            vec![10.0, 20.0, 30.0, 40.0]
        );
    }

    #[test]
    fn quantile_time_examples() {
        let p = quantile_times(&[10.0, 20.0, 30.0, 40.0], 4).unwrap();
        assert_eq!(p.times, vec![0, 1, 2, 3, 4]);
        let p = quantile_times(&[0.0, 0.0, 10.0, 10.0, 10.0, 20.0], 2).unwrap();
        assert_eq!(p.times, vec![0, 3, 6]);
        let p = quantile_times(&[0.0, 0.0, 0.0, 40.0], 2).unwrap();
        assert_eq!(p.times, vec![0, 4, 4]);
    }

    #[test]
    fn zero_total_is_degenerate() {
        assert!(matches!(
            quantile_times(&[0.0; 4], 2),
            Err(Error::Dataset(_))
        ));
        assert!(quantile_times(&[1.0], 0).is_err());
    }

    #[test]
    fn quantile_slope_examples() {
        assert_eq!(
            quantile_slope(&profile(40.0, vec![0, 1, 2, 3, 4]), 4),
            vec![10.0; 4]
        );
        assert_eq!(
            quantile_slope(&profile(40.0, vec![0, 4, 4]), 4),
            vec![5.0, 5.0, 5.0, 20.0]
        );
        assert_eq!(
            quantile_slope(&profile(20.0, vec![0, 3, 6]), 6),
            vec![10.0 / 3.0; 6]
        );
    }

    #[test]
    fn ordered_slope_of_constant_and_zero_days() {
        assert_eq!(ordered_quantile_slope(&[10.0; 4], 4).unwrap(), vec![10.0; 4]);
        assert_eq!(ordered_quantile_slope(&[0.0; 6], 3).unwrap(), vec![0.0; 6]);
    }

    #[test]
    fn ordered_slope_keeps_the_spike_maximum() {
        // quiet day with one burst, like the single-spike days in the figures
        let mut day = vec![0.0; 240];
        for (i, v) in day.iter_mut().enumerate() {
            *v = if (100..106).contains(&i) { 90.0 } else if i % 17 == 0 { 2.0 } else { 0.0 };
        }
        let s = cumulative_sum(&day);
        let raw = quantile_slope(&quantile_times(&s, 8).unwrap(), day.len());
        let sorted = ordered_quantile_slope(&day, 8).unwrap();
        let raw_max = raw.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(*sorted.last().unwrap(), raw_max);
        assert!(raw_max > 50.0);
    }

    #[test]
    fn mean_score_examples() {
        assert_eq!(epoch_scores(&[4.0, 3.0, 2.0, 1.0], 2).unwrap(), vec![1, 0, 0, 0]);
        assert_eq!(
            mean_score(&[4.0, 3.0, 2.0, 1.0], 2).unwrap(),
            vec![0.5, 0.5, 0.0, 0.0]
        );
        assert_eq!(epoch_scores(&[0.0, 0.0, 8.0, 8.0], 2).unwrap(), vec![0, 0, 0, 1]);
        assert_eq!(
            mean_score(&[0.0, 0.0, 8.0, 8.0], 2).unwrap(),
            vec![0.0, 0.0, 0.5, 0.5]
        );
    }

    #[test]
    fn constant_day_scores_follow_tie_break() {
        // ranks follow epoch order, so the later blocks score higher
        let p = mean_score(&[3.0; 8], 4).unwrap();
        assert_eq!(p, vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn mean_score_requires_divisible_grid() {
        assert!(matches!(mean_score(&[1.0; 10], 4), Err(Error::Config(_))));
    }

    #[test]
    fn feature_triple_zero_and_constant_days() {
        let z = feature_triple(&[0.0; 8], 2, 4).unwrap();
        assert!(z.s_curve.iter().chain(&z.i_curve).chain(&z.p_curve).all(|&v| v == 0.0));

        let c = feature_triple(&[10.0; 8], 4, 4).unwrap();
        assert_eq!(c.s_curve, (1..=8).map(|t| 10.0 * t as f64).collect::<Vec<_>>());
        assert_eq!(c.i_curve, vec![10.0; 8]);
        let block_means: Vec<f64> = c.p_curve.chunks(2).map(|b| b[0]).collect();
        assert_eq!(block_means, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn paper_defaults_accepted_on_full_day() {
        let day = StepDay::new("d", (0..1440).map(|t| (t % 7) as u32).collect());
        let f = day_features(&day, 8, 4).unwrap();
        assert_eq!(f.s_curve.len(), 1440);
        assert_eq!(f.i_curve.len(), 1440);
        assert_eq!(f.p_curve.len(), 1440);
        assert_eq!(*f.s_curve.last().unwrap(), day.total() as f64);
    }
}
