//! Estimators for recorded data: t² from a bin histogram, Poisson mean from
//! per-window counts, exponential time constant from inter-arrival times,
//! with bootstrap confidence intervals and Pearson goodness of fit.

mod bootstrap;
mod consistency;
mod exponential;
mod gof;
mod histogram;
mod minimize;
mod poisson;
mod t2;

pub use bootstrap::percentile;
pub use consistency::{mean_consistency, ConsistencyReport};
pub use exponential::{exponential_bins, fit_exponential, ExponentialFit, ExponentialModelBins, MIN_INTERVALS};
pub use gof::{chi_square_gof, GofResult, MIN_EXPECTED};
pub use histogram::BinHistogram;
pub use minimize::{minimize_bounded, Minimum};
pub use poisson::{fit_poisson, fit_poisson_frequencies, poisson_pmf, PoissonFit, MIN_WINDOWS};
pub use t2::{fit_t2, fit_t2_frequencies, T2Fit};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    LeastSquares,
    MaximumLikelihood,
}

/// A point estimate with its 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Sum of squared residuals at the estimate.
    pub residual: f64,
    pub method: FitMethod,
    pub n_samples: u64,
    pub seed: u64,
}

impl FitResult {
    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

/// Settings shared by the bootstrap-backed fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub bootstrap_resamples: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            bootstrap_resamples: 1000,
            seed: 0,
        }
    }
}
