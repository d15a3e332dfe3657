//! Per-window simulation chain: source, mesh, detector, bus, decoder.

use galton_core::detector::{detect, DetectionRecord, DetectorConfig};
use galton_core::readout::{decode, encode, DecodedEvent, LineConfig, TraceEvent};
use galton_core::rng::{stream, Domain};
use galton_core::source::{assign_bins, PhotonEvent, SourceConfig};
use galton_core::walk::{propagate, Coupler, MeshTopology, OutputDistribution};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;

/// Everything one recording window produced, from truth to decoder output.
/// Times are seconds from the start of the window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowRecord {
    pub index: u64,
    pub photons: Vec<PhotonEvent>,
    pub detections: Vec<DetectionRecord>,
    pub trace: Vec<TraceEvent>,
    pub decoded: Vec<DecodedEvent>,
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub distribution: OutputDistribution,
    pub source: SourceConfig,
    pub detector: DetectorConfig,
    pub line: LineConfig,
    pub seed: u64,
}

impl Pipeline {
    /// Validates `config` and fixes the coupler; no simulation happens here.
    pub fn new(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let (t_squared, _) = config.coupler_t_squared()?;
        let mesh = MeshTopology::new(config.stages)?;
        let coupler = Coupler::from_t_squared(t_squared)?;
        Ok(Self {
            distribution: propagate(&mesh, &coupler, config.input_port),
            source: SourceConfig {
                mean_photon_number: config.mean_photon_number,
                window: config.window_ns * 1e-9,
                seed: config.seed,
            },
            detector: config.detector.to_core(),
            line: config.line.to_core(),
            seed: config.seed,
        })
    }

    pub fn window(&self) -> f64 {
        self.source.window
    }

    /// Simulate window `index` from its own random streams.
    pub fn run_window(&self, index: u64) -> Result<WindowRecord, HarnessError> {
        let arrivals = self.source.sample_window(index)?;
        let photons = assign_bins(
            &self.distribution.probabilities,
            &arrivals,
            &mut stream(self.seed, Domain::Bins, index),
        )?;
        let detections = detect(
            &photons,
            &self.detector,
            self.source.window,
            &mut stream(self.seed, Domain::Detector, index),
        )?;
        let trace = encode(&detections, &self.line)?;
        let decoded = decode(&trace, &self.line)?;
        Ok(WindowRecord {
            index,
            photons,
            detections,
            trace,
            decoded,
        })
    }

    /// Windows `start..end` in index order, simulated in parallel.
    pub fn run_windows(&self, start: u64, end: u64) -> Result<Vec<WindowRecord>, HarnessError> {
        (start..end).into_par_iter().map(|i| self.run_window(i)).collect()
    }
}
