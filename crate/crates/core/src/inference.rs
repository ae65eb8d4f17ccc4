//! Nonparametric bootstrap for means and 95% confidence intervals.
//!
//! Replicates resample rows with replacement, re-run the supplied estimation
//! pipeline, and are summarized by the mean and the 2.5/97.5 percentile
//! interval. Each replicate draws from its own seed stream derived from the
//! replicate index, so running replicates in parallel or serially yields the
//! same report. Replicates whose estimator errors (for example a zero-weight
//! kernel query on an unlucky resample) are dropped and counted.

use rand::Rng;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Summary of one bootstrapped quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapOutcome {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Requested replicate count.
    pub requested: usize,
    /// Replicates that produced a value.
    pub effective: usize,
}

/// One reporting row: a measure at a covariate point or stratum, with its
/// point estimate, optional bounds, and bootstrap summary.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    pub measure: String,
    pub w_label: String,
    pub point: f64,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub boot_mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl MeasureReport {
    pub fn csv_header() -> &'static str {
        "measure,w,point,lower_bound,upper_bound,boot_mean,ci_low,ci_high,replicates,seed"
    }

    pub fn to_csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.measure,
            self.w_label,
            self.point,
            opt(self.lower_bound),
            opt(self.upper_bound),
            self.boot_mean,
            self.ci_low,
            self.ci_high,
            self.replicates,
            self.seed,
        )
    }
}

/// Draws a resample of `data` (same size, with replacement).
pub fn resample(data: &Dataset, seed: u64) -> Result<Dataset> {
    let n = data.n();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = rng_from_seed(seed);
    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let d = data.dim();
    Dataset::from_columns(
        idx.iter().map(|&i| data.x()[i]).collect(),
        idx.iter().map(|&i| data.y()[i]).collect(),
        idx.iter()
            .flat_map(|&i| data.w_row(i).iter().copied())
            .collect(),
        d,
        data.treatment_name(),
        data.outcome_name(),
        data.covariate_names().to_vec(),
        data.binary_treatment(),
    )
}

/// Linear-interpolation percentile of pre-sorted values, `q` in `[0, 100]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = (q / 100.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = rank - lo as f64;
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// Runs `replicates` bootstrap replicates of `estimator` over resamples of
/// `data` and reports the mean and 95% percentile interval.
pub fn bootstrap<F>(
    data: &Dataset,
    replicates: usize,
    seed: u64,
    estimator: F,
) -> Result<BootstrapOutcome>
where
    F: Fn(&Dataset) -> Result<f64> + Sync,
{
    if replicates == 0 {
        return Err(Error::Invalid("bootstrap needs at least one replicate".into()));
    }
    let values: Vec<Option<f64>> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let resampled = resample(data, derive_seed(seed, rep as u64)).ok()?;
            estimator(&resampled).ok()
        })
        .collect();
    let mut kept: Vec<f64> = values.into_iter().flatten().collect();
    if kept.is_empty() {
        return Err(Error::BootstrapFailed(replicates));
    }
    let effective = kept.len();
    let mean = kept.iter().sum::<f64>() / effective as f64;
    kept.sort_by(f64::total_cmp);
    Ok(BootstrapOutcome {
        mean,
        ci_low: percentile(&kept, 2.5),
        ci_high: percentile(&kept, 97.5),
        requested: replicates,
        effective,
    })
}
