//! Weak coherent-state photon source.
//!
//! Photon counts per recording window are Poisson distributed and arrival
//! times are uniform order statistics on `[0, window)`. Each photon leaves
//! the mesh in a bin drawn independently from the walk distribution.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{self, Domain};

/// Linear model of the coupler power transmission versus wavelength,
/// least-squares fitted through calibration points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavelengthModel {
    points: Vec<(f64, f64)>,
    slope: f64,
    intercept: f64,
    rms_residual: f64,
}

/// A t² prediction and whether it lies outside the calibrated range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T2Prediction {
    pub t_squared: f64,
    pub extrapolated: bool,
}

impl WavelengthModel {
    /// Fit `t² = slope·λ + intercept` through `(wavelength_nm, t_squared)` pairs.
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least 2 calibration points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|(l, t)| !l.is_finite() || !t.is_finite()) {
            return Err(Error::InvalidModel("calibration points must be finite".into()));
        }
        let n = points.len() as f64;
        let mean_l = points.iter().map(|p| p.0).sum::<f64>() / n;
        let mean_t = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|p| (p.0 - mean_l).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::InvalidModel("calibration wavelengths are all equal".into()));
        }
        let sxy: f64 = points.iter().map(|p| (p.0 - mean_l) * (p.1 - mean_t)).sum();
        let slope = sxy / sxx;
        let intercept = mean_t - slope * mean_l;
        let rms_residual = (points
            .iter()
            .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        Ok(Self {
            points: points.to_vec(),
            slope,
            intercept,
            rms_residual,
        })
    }

    /// Two-point model through the fitted 1520 nm and 1550 nm transmissions.
    pub fn measured() -> Self {
        Self::from_points(&[(1520.0, 0.816), (1550.0, 0.763)]).expect("two distinct points")
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn rms_residual(&self) -> f64 {
        self.rms_residual
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn calibrated_range(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)))
    }

    /// Predicted t² at `wavelength_nm`, clamped to `[0, 1]`.
    pub fn t2_of_wavelength(&self, wavelength_nm: f64) -> Result<T2Prediction> {
        if !wavelength_nm.is_finite() {
            return invalid(format!("wavelength {wavelength_nm} is not finite"));
        }
        let (lo, hi) = self.calibrated_range();
        let raw = self.slope * wavelength_nm + self.intercept;
        // raw may overflow to ±inf for absurd wavelengths; clamp handles it
        let t_squared = if raw.is_nan() { 0.0 } else { raw.clamp(0.0, 1.0) };
        Ok(T2Prediction {
            t_squared,
            extrapolated: wavelength_nm < lo || wavelength_nm > hi,
        })
    }
}

/// Source parameters for one recording window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    /// Expected photons per window.
    pub mean_photon_number: f64,
    /// Window length in seconds.
    pub window: f64,
    pub seed: u64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            mean_photon_number: 1.0,
            window: 2e-6,
            seed: 0,
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window.is_finite() && self.window > 0.0) {
            return invalid(format!("window must be positive, got {}", self.window));
        }
        if !(self.mean_photon_number.is_finite() && self.mean_photon_number >= 0.0) {
            return invalid(format!(
                "mean photon number must be non-negative, got {}",
                self.mean_photon_number
            ));
        }
        Ok(())
    }

    /// Arrival times for window `index`, drawn from that window's own stream.
    pub fn sample_window(&self, index: u64) -> Result<Vec<f64>> {
        let mut rng = rng::stream(self.seed, Domain::Arrivals, index);
        sample_arrivals(self, &mut rng)
    }
}

/// A photon leaving the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonEvent {
    /// Seconds since the start of the window.
    pub arrival_time: f64,
    pub bin: usize,
}

/// Poisson photon count, then sorted uniform arrival times in `[0, window)`.
pub fn sample_arrivals<R: Rng + ?Sized>(config: &SourceConfig, rng: &mut R) -> Result<Vec<f64>> {
    config.validate()?;
    if config.mean_photon_number == 0.0 {
        return Ok(Vec::new());
    }
    let count = Poisson::new(config.mean_photon_number)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .sample(rng) as usize;
    let mut times: Vec<f64> = (0..count).map(|_| rng.gen::<f64>() * config.window).collect();
    times.sort_by(f64::total_cmp);
    Ok(times)
}

/// Categorical sampler over output bins.
#[derive(Debug, Clone)]
pub struct BinSampler {
    index: WeightedIndex<f64>,
}

impl BinSampler {
    pub fn new(probabilities: &[f64]) -> Result<Self> {
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
        }
        let index = WeightedIndex::new(probabilities).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        Ok(Self { index })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }
}

/// Give each arrival an output bin drawn from `probabilities`.
pub fn assign_bins<R: Rng + ?Sized>(probabilities: &[f64], arrivals: &[f64], rng: &mut R) -> Result<Vec<PhotonEvent>> {
    let sampler = BinSampler::new(probabilities)?;
    Ok(arrivals
        .iter()
        .map(|&arrival_time| PhotonEvent {
            arrival_time,
            bin: sampler.sample(rng),
        })
        .collect())
}
