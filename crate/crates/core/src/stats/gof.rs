use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};

/// Smallest expected count a merged bin may carry.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Bins left after merging.
    pub bins_used: usize,
}

impl GofResult {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value > significance
    }
}

/// Pearson chi-square test of `observed` counts against `model` probabilities.
///
/// Adjacent bins are merged left to right until each group expects at least
/// [`MIN_EXPECTED`] counts; a short remainder joins the last group. Degrees
/// of freedom are `groups - 1 - fitted_params`. Counts in a bin the model
/// gives zero probability make the statistic infinite. When merging leaves
/// a single group the observed and expected totals coincide and the
/// statistic is exactly zero.
pub fn chi_square_gof(observed: &[u64], model: &[f64], fitted_params: usize) -> Result<GofResult> {
    if observed.len() != model.len() {
        return invalid(format!("{} observed bins vs {} model bins", observed.len(), model.len()));
    }
    if observed.len() < 2 {
        return invalid("chi-square test needs at least 2 bins");
    }
    if model.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return invalid("model probabilities must be finite and non-negative");
    }
    let mass: f64 = model.iter().sum();
    if (mass - 1.0).abs() > 1e-6 {
        return invalid(format!("model probabilities sum to {mass}"));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return invalid("chi-square test on an empty histogram");
    }
    let n = n as f64;

    if observed.iter().zip(model).any(|(&o, &p)| o > 0 && p == 0.0) {
        return Ok(GofResult {
            statistic: f64::INFINITY,
            dof: 0,
            p_value: 0.0,
            bins_used: 0,
        });
    }

    let mut groups: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(model) {
        acc.0 += o as f64;
        acc.1 += n * p;
        if acc.1 >= MIN_EXPECTED {
            groups.push(acc);
            acc = (0.0, 0.0);
        }
    }
    match groups.last_mut() {
        Some(last) => {
            last.0 += acc.0;
            last.1 += acc.1;
        }
        None => groups.push(acc),
    }

    if groups.len() == 1 {
        return Ok(GofResult {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
            bins_used: 1,
        });
    }
    if groups.len() < 2 + fitted_params {
        return invalid(format!(
            "{} merged bins leave no degrees of freedom for {} fitted parameters",
            groups.len(),
            fitted_params
        ));
    }
    let dof = groups.len() - 1 - fitted_params;
    let statistic: f64 = groups.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    Ok(GofResult {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        bins_used: groups.len(),
    })
}
