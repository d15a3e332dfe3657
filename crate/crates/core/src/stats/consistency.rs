use serde::{Deserialize, Serialize};

use super::FitResult;

/// Mean photon number from window counting against `ΔT / τ̂` from interval
/// statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub n_count: f64,
    pub n_count_ci: (f64, f64),
    pub n_interval: f64,
    pub n_interval_ci: (f64, f64),
    pub difference: f64,
    pub overlap: bool,
    /// One of the estimates is zero or undefined.
    pub degenerate: bool,
}

/// Compare a Poisson count fit with an exponential interval fit over
/// windows of length `window` (same time unit as the interval fit).
pub fn mean_consistency(poisson: &FitResult, exponential: Option<&FitResult>, window: f64) -> ConsistencyReport {
    let n_count_ci = (poisson.ci_low, poisson.ci_high);
    let usable = exponential.filter(|e| e.estimate.is_finite() && e.estimate > 0.0);
    let Some(exp) = usable.filter(|_| poisson.estimate > 0.0) else {
        return ConsistencyReport {
            n_count: poisson.estimate,
            n_count_ci,
            n_interval: 0.0,
            n_interval_ci: (0.0, 0.0),
            difference: poisson.estimate,
            overlap: false,
            degenerate: true,
        };
    };
    let n_interval = window / exp.estimate;
    let n_interval_ci = (
        window / exp.ci_high,
        if exp.ci_low > 0.0 { window / exp.ci_low } else { f64::INFINITY },
    );
    ConsistencyReport {
        n_count: poisson.estimate,
        n_count_ci,
        n_interval,
        n_interval_ci,
        difference: poisson.estimate - n_interval,
        overlap: n_count_ci.0 <= n_interval_ci.1 && n_interval_ci.0 <= n_count_ci.1,
        degenerate: false,
    }
}
