//! Exponential fit of inter-arrival times.
//!
//! Intervals are binned in units of their sample mean (bin width one tenth
//! of the mean, tail merged into a final open bin), so the fit is
//! equivariant under rescaling of the time axis.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bootstrap::{enclose, interval};
use super::gof::{chi_square_gof, GofResult, MIN_EXPECTED};
use super::minimize::minimize_bounded;
use super::{FitMethod, FitOptions, FitResult};
use crate::error::{invalid, Result};

pub const MIN_INTERVALS: usize = 100;

/// Bins per sample mean.
const BINS_PER_MEAN: f64 = 10.0;

/// Interval histogram on the relative grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialModelBins {
    /// Width of the regular bins in seconds.
    pub bin_width: f64,
    /// Regular bins followed by one open tail bin.
    pub counts: Vec<u64>,
}

impl ExponentialModelBins {
    /// Probability of each bin under an exponential law with time constant
    /// `tau` (seconds).
    pub fn model(&self, tau: f64) -> Vec<f64> {
        scaled_model(self.counts.len() - 1, tau / (BINS_PER_MEAN * self.bin_width))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    /// Least-squares time constant (seconds) with its bootstrap interval.
    pub fit: FitResult,
    /// Sample mean, the maximum-likelihood estimate.
    pub mle: f64,
    pub bins: ExponentialModelBins,
    pub gof: Option<GofResult>,
}

fn regular_bins(n: usize) -> usize {
    // last regular edge where the expected tail still holds MIN_EXPECTED counts
    ((BINS_PER_MEAN * (n as f64 / MIN_EXPECTED).ln()).ceil() as usize).max(10)
}

fn scaled_model(regular: usize, tau_in_means: f64) -> Vec<f64> {
    let edge = |k: usize| (-(k as f64) / (BINS_PER_MEAN * tau_in_means)).exp();
    let mut p: Vec<f64> = (0..regular).map(|k| edge(k) - edge(k + 1)).collect();
    p.push(edge(regular));
    p
}

fn bin_scaled<'a>(intervals: impl Iterator<Item = &'a f64>, mean: f64, regular: usize) -> Vec<u64> {
    let mut counts = vec![0u64; regular + 1];
    for x in intervals {
        let k = ((x / mean) * BINS_PER_MEAN).floor() as usize;
        counts[k.min(regular)] += 1;
    }
    counts
}

/// Histogram of `intervals` on the relative grid.
pub fn exponential_bins(intervals: &[f64]) -> Result<ExponentialModelBins> {
    validate(intervals)?;
    let mean = intervals.iter().sum::<f64>() / intervals.len() as f64;
    let regular = regular_bins(intervals.len());
    Ok(ExponentialModelBins {
        bin_width: mean / BINS_PER_MEAN,
        counts: bin_scaled(intervals.iter(), mean, regular),
    })
}

fn validate(intervals: &[f64]) -> Result<()> {
    if intervals.len() < MIN_INTERVALS {
        return invalid(format!("{} intervals, need at least {MIN_INTERVALS}", intervals.len()));
    }
    if let Some(x) = intervals.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return invalid(format!("interval {x} is not positive"));
    }
    Ok(())
}

/// Least-squares time constant in units of the sample mean.
fn fit_scaled(counts: &[u64], n: usize) -> Result<(f64, f64)> {
    let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let regular = counts.len() - 1;
    let sse = |tau: f64| -> f64 {
        scaled_model(regular, tau)
            .iter()
            .zip(&freqs)
            .map(|(m, f)| (f - m) * (f - m))
            .sum()
    };
    let m = minimize_bounded(sse, 0.01, 10.0, 400, 1e-12, 1e-14, 0.0)?;
    Ok((m.x, m.value))
}

/// Fit `P(τ) ∝ exp(-τ / τ̄)` to the interval histogram.
pub fn fit_exponential(intervals: &[f64], options: &FitOptions) -> Result<ExponentialFit> {
    validate(intervals)?;
    let n = intervals.len();
    let mean = intervals.iter().sum::<f64>() / n as f64;
    let regular = regular_bins(n);
    let counts = bin_scaled(intervals.iter(), mean, regular);
    let (tau_scaled, residual) = fit_scaled(&counts, n)?;
    let estimate = tau_scaled * mean;

    let ci = interval(options.bootstrap_resamples, options.seed, |rng| {
        let sample: Vec<f64> = (0..n).map(|_| intervals[rng.gen_range(0..n)]).collect();
        let m = sample.iter().sum::<f64>() / n as f64;
        let c = bin_scaled(sample.iter(), m, regular);
        fit_scaled(&c, n).ok().map(|(t, _)| t * m)
    });
    let (ci_low, ci_high) = enclose(estimate, ci.unwrap_or((estimate, estimate)));

    let gof = chi_square_gof(&counts, &scaled_model(regular, tau_scaled), 1).ok();
    Ok(ExponentialFit {
        fit: FitResult {
            estimate,
            ci_low,
            ci_high,
            residual,
            method: FitMethod::LeastSquares,
            n_samples: n as u64,
            seed: options.seed,
        },
        mle: mean,
        bins: ExponentialModelBins {
            bin_width: mean / BINS_PER_MEAN,
            counts,
        },
        gof,
    })
}
