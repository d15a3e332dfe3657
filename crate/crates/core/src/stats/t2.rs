//! Least-squares estimate of the coupler transmission t² from an output-bin
//! histogram.

use rand::distributions::Distribution;
use rand::Rng;
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::bootstrap::{enclose, interval};
use super::minimize::{minimize_bounded, Minimum};
use super::{BinHistogram, FitMethod, FitOptions, FitResult};
use crate::error::{invalid, Result};
use crate::walk::{probability_gradient, propagate, Coupler, MeshTopology, Side};

const GRID: usize = 200;
const ABS_TOL: f64 = 1e-6;
const FLAT_TOL: f64 = 1e-14;

/// Outcome of a t² fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T2Fit {
    /// Estimate with the parametric-bootstrap interval, or the linearized
    /// interval when no resamples were requested.
    pub fit: FitResult,
    /// `estimate ± t(0.975, bins - 1) · se` from the Jacobian at the
    /// estimate; `None` on the boundary of `[0, 1]`.
    pub linearized_ci: Option<(f64, f64)>,
    /// Model distribution at the estimate.
    pub model: Vec<f64>,
    /// The objective was flat and the estimate is the midpoint of the flat region.
    pub flat: bool,
}

impl T2Fit {
    pub fn estimate(&self) -> f64 {
        self.fit.estimate
    }
}

struct Objective<'a> {
    mesh: &'a MeshTopology,
    port: Side,
    observed: &'a [f64],
}

impl Objective<'_> {
    fn model(&self, t_squared: f64) -> Vec<f64> {
        let coupler = Coupler::from_t_squared(t_squared.clamp(0.0, 1.0)).expect("clamped");
        propagate(self.mesh, &coupler, self.port).probabilities
    }

    fn sse(&self, t_squared: f64) -> f64 {
        self.model(t_squared)
            .iter()
            .zip(self.observed)
            .map(|(m, o)| (o - m) * (o - m))
            .sum()
    }

    /// d(model)/d(t²), defined on the open interval only.
    fn jacobian(&self, t_squared: f64) -> Option<Vec<f64>> {
        if !(t_squared > 0.0 && t_squared < 1.0) {
            return None;
        }
        let coupler = Coupler::from_t_squared(t_squared).ok()?;
        let dt = probability_gradient(self.mesh, &coupler, self.port).ok()?;
        let chain = 1.0 / (2.0 * coupler.t());
        Some(dt.into_iter().map(|g| g * chain).collect())
    }

    fn minimize(&self) -> Result<Minimum> {
        minimize_bounded(|s| self.sse(s), 0.0, 1.0, GRID, 0.0, ABS_TOL, FLAT_TOL)
    }

    /// Gauss-Newton steps from `start`, kept only while they lower the SSE.
    fn polish(&self, start: Minimum) -> Minimum {
        let mut best = start;
        for _ in 0..30 {
            let Some(jac) = self.jacobian(best.x) else { break };
            let model = self.model(best.x);
            let jtj: f64 = jac.iter().map(|j| j * j).sum();
            if jtj == 0.0 {
                break;
            }
            let jtr: f64 = jac.iter().zip(model.iter().zip(self.observed)).map(|(j, (m, o))| j * (o - m)).sum();
            let x = (best.x + jtr / jtj).clamp(0.0, 1.0);
            let value = self.sse(x);
            if value.partial_cmp(&best.value) != Some(std::cmp::Ordering::Less) {
                break;
            }
            best = Minimum { x, value, flat: false };
        }
        best
    }

    fn linearized(&self, estimate: f64, sse: f64) -> Option<(f64, f64)> {
        let jac = self.jacobian(estimate)?;
        let jtj: f64 = jac.iter().map(|j| j * j).sum();
        let dof = self.observed.len().checked_sub(1).filter(|d| *d > 0)? as f64;
        if jtj == 0.0 {
            return None;
        }
        let se = (sse / dof / jtj).sqrt();
        let q = StudentsT::new(0.0, 1.0, dof).ok()?.inverse_cdf(0.975);
        Some(((estimate - q * se).max(0.0), (estimate + q * se).min(1.0)))
    }
}

/// Multinomial draw of `n` items over `probabilities` by sequential binomials.
pub(crate) fn multinomial<R: Rng + ?Sized>(n: u64, probabilities: &[f64], rng: &mut R) -> Vec<u64> {
    let mut remaining = n;
    let mut mass = 1.0f64;
    let mut out = Vec::with_capacity(probabilities.len());
    for (i, &p) in probabilities.iter().enumerate() {
        let k = if i + 1 == probabilities.len() {
            remaining
        } else if remaining == 0 || p <= 0.0 {
            0
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(remaining, q).expect("q in [0, 1]").sample(rng)
        };
        out.push(k);
        remaining -= k;
        mass -= p;
    }
    out
}

/// Fit t² to a histogram of photon counts over the `2 * stages` output bins.
pub fn fit_t2(observed: &BinHistogram, stages: usize, input_port: Side, options: &FitOptions) -> Result<T2Fit> {
    if observed.is_empty() {
        return invalid("cannot fit t² to an empty histogram");
    }
    fit_t2_frequencies(&observed.normalized(), observed.total(), stages, input_port, options)
}

/// Fit t² to bin frequencies. `n_samples` sets the size of each bootstrap
/// resample.
pub fn fit_t2_frequencies(
    frequencies: &[f64],
    n_samples: u64,
    stages: usize,
    input_port: Side,
    options: &FitOptions,
) -> Result<T2Fit> {
    let mesh = MeshTopology::new(stages)?;
    if frequencies.len() != mesh.output_bins() {
        return invalid(format!(
            "{} bins observed, a {stages}-stage mesh has {}",
            frequencies.len(),
            mesh.output_bins()
        ));
    }
    if frequencies.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return invalid("bin frequencies must be finite and non-negative");
    }
    let total: f64 = frequencies.iter().sum();
    if total <= 0.0 {
        return invalid("cannot fit t² to an empty histogram");
    }
    let observed: Vec<f64> = frequencies.iter().map(|f| f / total).collect();
    let objective = Objective {
        mesh: &mesh,
        port: input_port,
        observed: &observed,
    };

    let coarse = objective.minimize()?;
    let best = if coarse.flat { coarse } else { objective.polish(coarse) };
    let estimate = best.x;
    let model = objective.model(estimate);
    let linearized_ci = objective.linearized(estimate, best.value);

    let ci = if options.bootstrap_resamples > 0 && n_samples > 0 {
        interval(options.bootstrap_resamples, options.seed, |rng| {
            let counts = multinomial(n_samples, &model, rng);
            let resampled: Vec<f64> = counts.iter().map(|&c| c as f64 / n_samples as f64).collect();
            Objective {
                mesh: &mesh,
                port: input_port,
                observed: &resampled,
            }
            .minimize()
            .ok()
            .map(|m| m.x)
        })
    } else {
        linearized_ci
    };
    let (ci_low, ci_high) = enclose(estimate, ci.unwrap_or((estimate, estimate)));

    Ok(T2Fit {
        fit: FitResult {
            estimate,
            ci_low,
            ci_high,
            residual: best.value,
            method: FitMethod::LeastSquares,
            n_samples,
            seed: options.seed,
        },
        linearized_ci,
        model,
        flat: best.flat,
    })
}
