//! SNSPD pixel array: detection efficiency, timing jitter, dark counts and a
//! non-paralyzable per-pixel dead time.

use rand::distributions::Distribution;
use rand::Rng;
use rand_distr::{Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::source::PhotonEvent;

/// Detection efficiency, either shared by all pixels or given per pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Efficiency {
    Uniform(f64),
    PerPixel(Vec<f64>),
}

impl Efficiency {
    pub fn for_pixel(&self, pixel: usize) -> f64 {
        match self {
            Efficiency::Uniform(e) => *e,
            Efficiency::PerPixel(v) => v[pixel],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub pixel_count: usize,
    pub efficiency: Efficiency,
    /// Reset time in seconds.
    pub dead_time: f64,
    /// Gaussian timing jitter, seconds.
    pub jitter_sigma: f64,
    /// Dark counts per second per pixel.
    pub dark_count_rate: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            pixel_count: 16,
            efficiency: Efficiency::Uniform(1.0),
            dead_time: 20e-9,
            jitter_sigma: 50e-12,
            dark_count_rate: 0.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pixel_count == 0 {
            return invalid("detector needs at least one pixel");
        }
        match &self.efficiency {
            Efficiency::Uniform(e) => check_efficiency(*e)?,
            Efficiency::PerPixel(v) => {
                if v.len() != self.pixel_count {
                    return invalid(format!(
                        "{} per-pixel efficiencies for {} pixels",
                        v.len(),
                        self.pixel_count
                    ));
                }
                for e in v {
                    check_efficiency(*e)?;
                }
            }
        }
        for (name, value) in [
            ("dead_time", self.dead_time),
            ("jitter_sigma", self.jitter_sigma),
            ("dark_count_rate", self.dark_count_rate),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return invalid(format!("{name} must be finite and non-negative, got {value}"));
            }
        }
        Ok(())
    }
}

fn check_efficiency(e: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&e) {
        return invalid(format!("efficiency {e} outside [0, 1]"));
    }
    Ok(())
}

/// A registered pixel firing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub pixel: usize,
    /// Absorption time plus jitter, seconds since window start.
    pub fire_time: f64,
}

/// Turn photons into pixel firings.
///
/// Photons survive with the pixel efficiency; dark counts over `[0, span)`
/// are merged in; every candidate is jittered and then kept only if its
/// pixel has been idle for at least `dead_time` since its last registration.
/// Blocked candidates do not extend the dead window.
pub fn detect<R: Rng + ?Sized>(
    events: &[PhotonEvent],
    config: &DetectorConfig,
    span: f64,
    rng: &mut R,
) -> Result<Vec<DetectionRecord>> {
    config.validate()?;
    if events.windows(2).any(|w| w[0].arrival_time > w[1].arrival_time) {
        return invalid("photon events must be sorted by arrival time");
    }
    if let Some(e) = events.iter().find(|e| e.bin >= config.pixel_count) {
        return invalid(format!("bin {} has no pixel ({} pixels)", e.bin, config.pixel_count));
    }

    let mut candidates: Vec<DetectionRecord> = events
        .iter()
        .filter(|e| rng.gen::<f64>() < config.efficiency.for_pixel(e.bin))
        .map(|e| DetectionRecord {
            pixel: e.bin,
            fire_time: e.arrival_time,
        })
        .collect();

    if config.dark_count_rate > 0.0 && span > 0.0 {
        let darks = Poisson::new(config.dark_count_rate * span).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for pixel in 0..config.pixel_count {
            let n = darks.sample(rng) as usize;
            candidates.extend((0..n).map(|_| DetectionRecord {
                pixel,
                fire_time: rng.gen::<f64>() * span,
            }));
        }
    }

    if config.jitter_sigma > 0.0 {
        let jitter = Normal::new(0.0, config.jitter_sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for c in &mut candidates {
            c.fire_time += jitter.sample(rng);
        }
    }
    candidates.sort_by(|a, b| a.fire_time.total_cmp(&b.fire_time));

    let mut last_fire = vec![f64::NEG_INFINITY; config.pixel_count];
    Ok(candidates
        .into_iter()
        .filter(|c| {
            let idle = c.fire_time - last_fire[c.pixel] >= config.dead_time;
            if idle {
                last_fire[c.pixel] = c.fire_time;
            }
            idle
        })
        .collect())
}

/// Number of records with `fire_time` in `[0, window)`.
pub fn count_in_window(records: &[DetectionRecord], window: f64) -> usize {
    records
        .iter()
        .filter(|r| r.fire_time >= 0.0 && r.fire_time < window)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    fn ideal() -> DetectorConfig {
        DetectorConfig {
            dead_time: 0.0,
            jitter_sigma: 0.0,
            ..Default::default()
        }
    }

    fn photon(t_ns: f64, bin: usize) -> PhotonEvent {
        PhotonEvent {
            arrival_time: t_ns * 1e-9,
            bin,
        }
    }

    #[test]
    fn transparent_detector_is_identity() {
        let events: Vec<PhotonEvent> = (0..50).map(|i| photon(i as f64 * 3.0, i % 16)).collect();
        let mut rng = stream(0, Domain::Detector, 0);
        let out = detect(&events, &ideal(), 2e-6, &mut rng).unwrap();
        assert_eq!(out.len(), events.len());
        for (e, r) in events.iter().zip(&out) {
            assert_eq!((e.bin, e.arrival_time), (r.pixel, r.fire_time));
        }
    }

    #[test]
    fn second_photon_within_reset_is_lost() {
        let events = [photon(0.0, 3), photon(5.0, 3)];
        let cfg = DetectorConfig {
            jitter_sigma: 0.0,
            ..Default::default()
        };
        let out = detect(&events, &cfg, 2e-6, &mut stream(0, Domain::Detector, 0)).unwrap();
        assert_eq!(out, vec![DetectionRecord { pixel: 3, fire_time: 0.0 }]);
    }

    #[test]
    fn dead_time_is_non_paralyzable() {
        // the blocked photon at 15 ns must not push the window to 35 ns
        let events = [photon(0.0, 2), photon(15.0, 2), photon(25.0, 2)];
        let cfg = DetectorConfig {
            jitter_sigma: 0.0,
            ..Default::default()
        };
        let out = detect(&events, &cfg, 2e-6, &mut stream(0, Domain::Detector, 0)).unwrap();
        assert_eq!(out.len(), 2);
        assert!((out[1].fire_time - 25e-9).abs() < 1e-18);
    }

    #[test]
    fn other_pixels_unaffected_by_dead_time() {
        let events = [photon(0.0, 3), photon(1.0, 4), photon(2.0, 5)];
        let cfg = DetectorConfig {
            jitter_sigma: 0.0,
            ..Default::default()
        };
        let out = detect(&events, &cfg, 2e-6, &mut stream(0, Domain::Detector, 0)).unwrap();
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn unsorted_or_out_of_range_input_rejected() {
        let mut rng = stream(0, Domain::Detector, 0);
        assert!(detect(&[photon(5.0, 0), photon(1.0, 0)], &ideal(), 1e-6, &mut rng).is_err());
        assert!(detect(&[photon(5.0, 16)], &ideal(), 1e-6, &mut rng).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = DetectorConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.efficiency = Efficiency::Uniform(1.5);
        assert!(cfg.validate().is_err());
        cfg.efficiency = Efficiency::PerPixel(vec![0.9; 15]);
        assert!(cfg.validate().is_err());
        cfg.efficiency = Efficiency::PerPixel(vec![0.9; 16]);
        cfg.dead_time = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn dead_time_law_and_monotone_loss_with_darks() {
        let cfg = DetectorConfig {
            dark_count_rate: 2e6,
            ..Default::default()
        };
        for w in 0..200 {
            let mut rng = stream(5, Domain::Detector, w);
            let mut events: Vec<PhotonEvent> = (0..40)
                .map(|_| photon(rng.gen::<f64>() * 2000.0, rng.gen_range(0..16)))
                .collect();
            events.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time));
            let out = detect(&events, &cfg, 2e-6, &mut rng).unwrap();
            assert!(out.windows(2).all(|p| p[0].fire_time <= p[1].fire_time));
            for pixel in 0..16 {
                let times: Vec<f64> = out.iter().filter(|r| r.pixel == pixel).map(|r| r.fire_time).collect();
                assert!(times.windows(2).all(|p| p[1] - p[0] >= cfg.dead_time));
            }
        }
    }

    #[test]
    fn registered_never_exceeds_incident_without_darks() {
        let cfg = DetectorConfig::default();
        for w in 0..200 {
            let mut rng = stream(6, Domain::Detector, w);
            let mut events: Vec<PhotonEvent> = (0..60)
                .map(|_| photon(rng.gen::<f64>() * 500.0, rng.gen_range(0..16)))
                .collect();
            events.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time));
            let out = detect(&events, &cfg, 2e-6, &mut rng).unwrap();
            assert!(out.len() <= events.len());
        }
    }

    #[test]
    fn efficiency_statistics() {
        let eta = 0.7;
        let cfg = DetectorConfig {
            efficiency: Efficiency::Uniform(eta),
            dead_time: 0.0,
            ..Default::default()
        };
        let n = 100_000usize;
        let events: Vec<PhotonEvent> = (0..n).map(|i| photon(i as f64, i % 16)).collect();
        let out = detect(&events, &cfg, 1e-3, &mut stream(11, Domain::Detector, 0)).unwrap();
        let ratio = out.len() as f64 / n as f64;
        let bound = 3.0 * (eta * (1.0 - eta) / n as f64).sqrt();
        assert!((ratio - eta).abs() <= bound, "ratio {ratio}");
    }

    #[test]
    fn window_counting() {
        assert_eq!(count_in_window(&[], 2e-6), 0);
        // 17 firings across 16 pixels, all well separated in time
        let records: Vec<DetectionRecord> = (0..17)
            .map(|i| DetectionRecord {
                pixel: i % 16,
                fire_time: i as f64 * 100e-9,
            })
            .collect();
        assert_eq!(count_in_window(&records, 2e-6), 17);
        let edge = [
            DetectionRecord { pixel: 0, fire_time: -1e-12 },
            DetectionRecord { pixel: 1, fire_time: 0.0 },
            DetectionRecord { pixel: 2, fire_time: 2e-6 - 1e-12 },
            DetectionRecord { pixel: 3, fire_time: 2e-6 },
        ];
        assert_eq!(count_in_window(&edge, 2e-6), 2);
    }
}
