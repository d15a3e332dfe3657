//! Experiment configuration as read from JSON.
//!
//! Times are in nanoseconds, wavelengths in nanometres, rates in hertz.
//! Everything else is dimensionless.

use std::fmt;
use std::path::{Path, PathBuf};

use galton_core::detector::{DetectorConfig, Efficiency};
use galton_core::readout::{LineConfig, Polarity};
use galton_core::source::WavelengthModel;
use galton_core::walk::Side;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Interference,
    Counting,
    Intervals,
    Persistence,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ExperimentKind::Interference => "interference",
            ExperimentKind::Counting => "counting",
            ExperimentKind::Intervals => "intervals",
            ExperimentKind::Persistence => "persistence",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSettings {
    pub pixel_count: usize,
    pub efficiency: Efficiency,
    pub dead_time_ns: f64,
    pub jitter_sigma_ns: f64,
    pub dark_count_rate_hz: f64,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        Self::from(&DetectorConfig::default())
    }
}

impl From<&DetectorConfig> for DetectorSettings {
    fn from(c: &DetectorConfig) -> Self {
        Self {
            pixel_count: c.pixel_count,
            efficiency: c.efficiency.clone(),
            dead_time_ns: c.dead_time * 1e9,
            jitter_sigma_ns: c.jitter_sigma * 1e9,
            dark_count_rate_hz: c.dark_count_rate,
        }
    }
}

impl DetectorSettings {
    pub fn to_core(&self) -> DetectorConfig {
        DetectorConfig {
            pixel_count: self.pixel_count,
            efficiency: self.efficiency.clone(),
            dead_time: self.dead_time_ns * 1e-9,
            jitter_sigma: self.jitter_sigma_ns * 1e-9,
            dark_count_rate: self.dark_count_rate_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineSettings {
    pub segment_delay_ns: f64,
    pub pixel_count: usize,
    pub attenuation_per_segment: f64,
    pub base_amplitude: f64,
    pub trigger_polarity: Polarity,
    pub pair_tolerance_ns: f64,
    /// Calibration offset of the difference-to-pixel map; default puts
    /// pixel 0 at `-(pixel_count - 1) * segment_delay`.
    pub offset_ns: Option<f64>,
}

impl Default for LineSettings {
    fn default() -> Self {
        Self::from(&LineConfig::default())
    }
}

impl From<&LineConfig> for LineSettings {
    fn from(c: &LineConfig) -> Self {
        Self {
            segment_delay_ns: c.segment_delay * 1e9,
            pixel_count: c.pixel_count,
            attenuation_per_segment: c.attenuation_per_segment,
            base_amplitude: c.base_amplitude,
            trigger_polarity: c.trigger_polarity,
            pair_tolerance_ns: c.pair_tolerance * 1e9,
            offset_ns: c.offset.map(|o| o * 1e9),
        }
    }
}

impl LineSettings {
    pub fn to_core(&self) -> LineConfig {
        LineConfig {
            segment_delay: self.segment_delay_ns * 1e-9,
            pixel_count: self.pixel_count,
            attenuation_per_segment: self.attenuation_per_segment,
            base_amplitude: self.base_amplitude,
            trigger_polarity: self.trigger_polarity,
            pair_tolerance: self.pair_tolerance_ns * 1e-9,
            offset: self.offset_ns.map(|o| o * 1e-9),
        }
    }
}

/// One experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_stages")]
    pub stages: usize,
    /// Source wavelength; t² then comes from the calibration line.
    #[serde(default)]
    pub wavelength_nm: Option<f64>,
    /// Explicit coupler transmission, instead of a wavelength.
    #[serde(default)]
    pub t_squared: Option<f64>,
    #[serde(default = "default_port")]
    pub input_port: Side,
    #[serde(default = "default_mean")]
    pub mean_photon_number: f64,
    #[serde(default = "default_window")]
    pub window_ns: f64,
    /// Recording windows to simulate (counting, intervals, persistence).
    #[serde(default = "default_windows")]
    pub windows: usize,
    /// Decoded photons to collect (interference).
    #[serde(default = "default_sample_size")]
    pub sample_size: usize,
    /// Upper bound on windows the interference run may use to reach
    /// `sample_size`.
    #[serde(default = "default_max_windows")]
    pub max_windows: usize,
    #[serde(default)]
    pub detector: DetectorSettings,
    #[serde(default)]
    pub line: LineSettings,
    /// `(wavelength_nm, t_squared)` points of the linear t²(λ) model.
    #[serde(default = "default_calibration")]
    pub calibration: Vec<(f64, f64)>,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default = "default_bin_width")]
    pub persistence_bin_width_ns: f64,
    /// Smallest persistence peak, as a fraction of trigger count.
    #[serde(default = "default_peak_fraction")]
    pub peak_min_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_stages() -> usize {
    8
}
fn default_port() -> Side {
    Side::Left
}
fn default_mean() -> f64 {
    1.0
}
fn default_window() -> f64 {
    2000.0
}
fn default_windows() -> usize {
    10_000
}
fn default_sample_size() -> usize {
    10_000
}
fn default_max_windows() -> usize {
    1_000_000
}
fn default_calibration() -> Vec<(f64, f64)> {
    WavelengthModel::measured().points().to_vec()
}
fn default_resamples() -> usize {
    1000
}
fn default_bin_width() -> f64 {
    0.1
}
fn default_peak_fraction() -> f64 {
    1e-3
}

impl ExperimentConfig {
    /// Defaults for `kind`: 1550 nm light, n̄ = 1, 2 µs windows.
    /// Persistence runs use a balanced coupler so every pixel is lit.
    pub fn new(kind: ExperimentKind) -> Self {
        let mut cfg = Self {
            experiment: kind,
            stages: default_stages(),
            wavelength_nm: Some(1550.0),
            t_squared: None,
            input_port: default_port(),
            mean_photon_number: default_mean(),
            window_ns: default_window(),
            windows: default_windows(),
            sample_size: default_sample_size(),
            max_windows: default_max_windows(),
            detector: DetectorSettings::default(),
            line: LineSettings::default(),
            calibration: default_calibration(),
            bootstrap_resamples: default_resamples(),
            persistence_bin_width_ns: default_bin_width(),
            peak_min_fraction: default_peak_fraction(),
            seed: 0,
            output_dir: None,
        };
        if kind == ExperimentKind::Persistence {
            cfg.wavelength_nm = None;
            cfg.t_squared = Some(0.5);
        }
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(vec![ConfigIssue::new("document", e.to_string())]))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn wavelength_model(&self) -> Result<WavelengthModel, HarnessError> {
        WavelengthModel::from_points(&self.calibration)
            .map_err(|e| HarnessError::Config(vec![ConfigIssue::new("calibration", e.to_string())]))
    }

    /// Coupler t², and the wavelength prediction it came from if any.
    pub fn coupler_t_squared(&self) -> Result<(f64, Option<bool>), HarnessError> {
        match (self.t_squared, self.wavelength_nm) {
            (Some(t2), None) => Ok((t2, None)),
            (None, Some(lambda)) => {
                let p = self
                    .wavelength_model()?
                    .t2_of_wavelength(lambda)
                    .map_err(|e| HarnessError::Config(vec![ConfigIssue::new("wavelength_nm", e.to_string())]))?;
                Ok((p.t_squared, Some(p.extrapolated)))
            }
            _ => Err(HarnessError::Config(vec![ConfigIssue::new(
                "wavelength_nm/t_squared",
                "exactly one must be given",
            )])),
        }
    }

    /// Check every field and sub-config; all problems are reported at once.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut issues = Vec::new();
        let mut check = |ok: bool, field: &str, msg: String| {
            if !ok {
                issues.push(ConfigIssue::new(field, msg));
            }
        };
        check(self.stages >= 1, "stages", format!("must be at least 1, got {}", self.stages));
        match (self.t_squared, self.wavelength_nm) {
            (Some(t2), None) => check(
                t2.is_finite() && (0.0..=1.0).contains(&t2),
                "t_squared",
                format!("must lie in [0, 1], got {t2}"),
            ),
            (None, Some(l)) => check(l.is_finite() && l > 0.0, "wavelength_nm", format!("must be positive, got {l}")),
            (Some(_), Some(_)) => check(false, "wavelength_nm/t_squared", "give only one of the two".into()),
            (None, None) => check(false, "wavelength_nm/t_squared", "one of the two is required".into()),
        }
        if let Err(e) = WavelengthModel::from_points(&self.calibration) {
            check(false, "calibration", e.to_string());
        }
        check(
            self.mean_photon_number.is_finite() && self.mean_photon_number >= 0.0,
            "mean_photon_number",
            format!("must be non-negative, got {}", self.mean_photon_number),
        );
        check(
            self.window_ns.is_finite() && self.window_ns > 0.0,
            "window_ns",
            format!("must be positive, got {}", self.window_ns),
        );
        let min_windows = if self.experiment == ExperimentKind::Counting { 100 } else { 1 };
        check(
            self.windows >= min_windows,
            "windows",
            format!("must be at least {min_windows}, got {}", self.windows),
        );
        if self.experiment == ExperimentKind::Interference {
            check(
                self.mean_photon_number > 0.0,
                "mean_photon_number",
                "an interference run needs light".into(),
            );
            check(self.sample_size >= 1, "sample_size", "must be at least 1".into());
            check(self.max_windows >= 1, "max_windows", "must be at least 1".into());
        }
        check(
            self.detector.pixel_count == 2 * self.stages,
            "detector.pixel_count",
            format!("{} pixels cannot terminate {} output bins", self.detector.pixel_count, 2 * self.stages),
        );
        check(
            self.line.pixel_count == self.detector.pixel_count,
            "line.pixel_count",
            format!("line has {} taps, detector has {} pixels", self.line.pixel_count, self.detector.pixel_count),
        );
        if let Err(e) = self.detector.to_core().validate() {
            check(false, "detector", e.to_string());
        }
        if let Err(e) = self.line.to_core().validate() {
            check(false, "line", e.to_string());
        }
        check(
            self.persistence_bin_width_ns.is_finite() && self.persistence_bin_width_ns > 0.0,
            "persistence_bin_width_ns",
            format!("must be positive, got {}", self.persistence_bin_width_ns),
        );
        check(
            (0.0..1.0).contains(&self.peak_min_fraction),
            "peak_min_fraction",
            format!("must lie in [0, 1), got {}", self.peak_min_fraction),
        );
        if issues.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(issues))
        }
    }
}

/// A named configuration problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub field: String,
    pub message: String,
}

impl ConfigIssue {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}
