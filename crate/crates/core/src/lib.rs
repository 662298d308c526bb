//! Clustering of daily step-count curves.
//!
//! Each day is turned into three functional variables (cumulative amount,
//! ordered quantile slope, mean score), standardized, smoothed on a cubic
//! B-spline basis and summarized by multivariate functional principal
//! component scores. The scores are clustered with K-means or PAM, with the
//! number of clusters chosen by the gap statistic when not given.
//!
//! ```no_run
//! use stepclust::{ingest, pipeline};
//!
//! let days = ingest::read_day_matrix("days.csv")?;
//! let cfg = pipeline::PipelineConfig::default();
//! let run = pipeline::run_pipeline(&days.to_curves(), &cfg)?;
//! println!("{} clusters, sizes {:?}", run.clusters.k, run.report.cluster_sizes);
//! # Ok::<(), stepclust::Error>(())
//! ```

pub mod clustering;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod ingest;
pub mod mfpca;
pub mod pipeline;
pub mod plots;
pub mod simulation;
pub mod smoothing;

pub use error::{Error, Result};

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
/// Output order always follows input order.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
