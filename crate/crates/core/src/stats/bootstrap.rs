use rayon::prelude::*;

use crate::rng::{self, Domain, StreamRng};

/// Linear-interpolated quantile of already sorted data (`q` in `[0, 1]`).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Evaluate `statistic` on `resamples` independent streams and return the
/// 2.5% and 97.5% percentiles of the finite results. Resample `b` always uses
/// stream `b` of `seed`, so the interval does not depend on thread count.
pub(crate) fn interval<F>(resamples: usize, seed: u64, statistic: F) -> Option<(f64, f64)>
where
    F: Fn(&mut StreamRng) -> Option<f64> + Sync,
{
    let mut values: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .filter_map(|b| statistic(&mut rng::stream(seed, Domain::Bootstrap, b)))
        .filter(|v| v.is_finite())
        .collect();
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some((percentile(&values, 0.025), percentile(&values, 0.975)))
}

/// Widen `(lo, hi)` so it contains `estimate`.
pub(crate) fn enclose(estimate: f64, (lo, hi): (f64, f64)) -> (f64, f64) {
    (lo.min(estimate), hi.max(estimate))
}
