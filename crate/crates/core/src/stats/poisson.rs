//! Poisson fit of photon counts per window.

use serde::{Deserialize, Serialize};

use super::bootstrap::{enclose, interval};
use super::gof::{chi_square_gof, GofResult};
use super::minimize::minimize_bounded;
use super::t2::multinomial;
use super::{FitMethod, FitOptions, FitResult};
use crate::error::{invalid, Result};

/// Fewest windows a count histogram may be fitted from.
pub const MIN_WINDOWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonFit {
    /// Least-squares estimate of the mean with its bootstrap interval.
    pub fit: FitResult,
    /// Sample mean, the maximum-likelihood estimate.
    pub mle: f64,
    /// `histogram[n]` = windows holding `n` counts.
    pub histogram: Vec<u64>,
    /// Pearson test of the histogram against the fitted Poisson law.
    pub gof: Option<GofResult>,
    /// All counts were zero.
    pub degenerate: bool,
}

/// `P(n; mean)` for `n = 0..=n_max`.
pub fn poisson_pmf(mean: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    if mean == 0.0 {
        out.push(1.0);
        out.resize(n_max + 1, 0.0);
        return out;
    }
    let ln_mean = mean.ln();
    let mut ln_fact = 0.0;
    for n in 0..=n_max {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        out.push((n as f64 * ln_mean - mean - ln_fact).exp());
    }
    out
}

fn sse(frequencies: &[f64], mean: f64) -> f64 {
    poisson_pmf(mean, frequencies.len() - 1)
        .iter()
        .zip(frequencies)
        .map(|(p, f)| (f - p) * (f - p))
        .sum()
}

/// Least-squares Poisson mean for frequencies over `n = 0..len`.
/// Returns `(estimate, sum of squared residuals)`.
pub fn fit_poisson_frequencies(frequencies: &[f64]) -> Result<(f64, f64)> {
    if frequencies.is_empty() {
        return invalid("no count bins to fit");
    }
    let upper = 2.0 * frequencies.len() as f64 + 10.0;
    let m = minimize_bounded(|x| sse(frequencies, x), 0.0, upper, 400, 1e-12, 1e-14, 0.0)?;
    Ok((m.x, m.value))
}

fn histogram(counts: impl Iterator<Item = u64>) -> Vec<u64> {
    let mut h: Vec<u64> = Vec::new();
    for c in counts {
        let c = c as usize;
        if h.len() <= c {
            h.resize(c + 1, 0);
        }
        h[c] += 1;
    }
    h
}

fn frequencies(hist: &[u64], n: u64) -> Vec<f64> {
    hist.iter().map(|&h| h as f64 / n as f64).collect()
}

/// Fit a Poisson law to per-window counts.
///
/// The estimate is the least-squares fit of the probability mass function
/// to the normalized count histogram; the interval comes from resampling
/// windows with replacement.
pub fn fit_poisson(counts: &[u64], options: &FitOptions) -> Result<PoissonFit> {
    if counts.len() < MIN_WINDOWS {
        return invalid(format!("{} windows, need at least {MIN_WINDOWS}", counts.len()));
    }
    let n = counts.len() as u64;
    let hist = histogram(counts.iter().copied());
    let mle = counts.iter().sum::<u64>() as f64 / n as f64;

    if hist.len() == 1 {
        // rule of three: 95% upper bound on the rate after zero events
        return Ok(PoissonFit {
            fit: FitResult {
                estimate: 0.0,
                ci_low: 0.0,
                ci_high: 3.0 / n as f64,
                residual: 0.0,
                method: FitMethod::LeastSquares,
                n_samples: n,
                seed: options.seed,
            },
            mle: 0.0,
            histogram: hist,
            gof: None,
            degenerate: true,
        });
    }

    let freqs = frequencies(&hist, n);
    let (estimate, residual) = fit_poisson_frequencies(&freqs)?;

    let ci = interval(options.bootstrap_resamples, options.seed, |rng| {
        let resampled = multinomial(n, &freqs, rng);
        fit_poisson_frequencies(&frequencies(&resampled, n)).ok().map(|f| f.0)
    });
    let (ci_low, ci_high) = enclose(estimate, ci.unwrap_or((estimate, estimate)));

    let mut model = poisson_pmf(estimate, hist.len() - 1);
    let tail = (1.0 - model.iter().sum::<f64>()).max(0.0);
    model.push(tail);
    let mut observed = hist.clone();
    observed.push(0);
    let gof = chi_square_gof(&observed, &model, 1).ok();

    Ok(PoissonFit {
        fit: FitResult {
            estimate,
            ci_low,
            ci_high,
            residual,
            method: FitMethod::LeastSquares,
            n_samples: n,
            seed: options.seed,
        },
        mle,
        histogram: hist,
        gof,
        degenerate: false,
    })
}
