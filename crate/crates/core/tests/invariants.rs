//! Property tests for the simulation chain.

use galton_core::detector::{detect, DetectionRecord, DetectorConfig};
use galton_core::readout::{decode, encode, photon_count, LineConfig, Polarity};
use galton_core::rng::{derive_seed, stream, Domain};
use galton_core::source::{assign_bins, SourceConfig};
use galton_core::stats::{chi_square_gof, fit_exponential, fit_t2_frequencies, FitOptions, MIN_INTERVALS};
use galton_core::walk::{propagate, Coupler, MeshTopology, Side};
use proptest::prelude::*;

const NO_BOOTSTRAP: FitOptions = FitOptions {
    bootstrap_resamples: 0,
    seed: 0,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn arrivals_sorted_inside_window(mean in 0.0f64..50.0, seed in any::<u64>(), w in 0u64..1000) {
        let source = SourceConfig { mean_photon_number: mean, window: 2e-6, seed };
        let a = source.sample_window(w).unwrap();
        prop_assert!(a.windows(2).all(|p| p[0] <= p[1]));
        prop_assert!(a.iter().all(|&t| (0.0..2e-6).contains(&t)));
        prop_assert_eq!(a, source.sample_window(w).unwrap());
    }

    #[test]
    fn dead_time_holds_per_pixel(
        mean in 0.0f64..60.0,
        dead_ns in 0.0f64..200.0,
        jitter_ps in 0.0f64..200.0,
        dark_hz in prop_oneof![Just(0.0), 1e5f64..1e7],
        seed in any::<u64>(),
    ) {
        let source = SourceConfig { mean_photon_number: mean, window: 2e-6, seed };
        let p = vec![1.0 / 16.0; 16];
        let photons = assign_bins(&p, &source.sample_window(0).unwrap(), &mut stream(seed, Domain::Bins, 0)).unwrap();
        let cfg = DetectorConfig {
            dead_time: dead_ns * 1e-9,
            jitter_sigma: jitter_ps * 1e-12,
            dark_count_rate: dark_hz,
            ..DetectorConfig::default()
        };
        let records = detect(&photons, &cfg, source.window, &mut stream(seed, Domain::Detector, 0)).unwrap();
        prop_assert!(records.windows(2).all(|r| r[0].fire_time <= r[1].fire_time));
        if dark_hz == 0.0 {
            prop_assert!(records.len() <= photons.len());
        }
        for pixel in 0..16 {
            let times: Vec<f64> = records.iter().filter(|r| r.pixel == pixel).map(|r| r.fire_time).collect();
            prop_assert!(times.windows(2).all(|t| t[1] - t[0] >= cfg.dead_time));
        }
    }

    #[test]
    fn sparse_records_round_trip(
        pixels in prop::collection::vec(0usize..16, 1..8),
        gaps in prop::collection::vec(0.0f64..500e-9, 8),
        start in 0.0f64..1e-6,
    ) {
        let line = LineConfig::default();
        let mut t = start;
        let records: Vec<DetectionRecord> = pixels
            .iter()
            .zip(&gaps)
            .map(|(&pixel, gap)| {
                let r = DetectionRecord { pixel, fire_time: t };
                t += line.pairing_window() + 1e-10 + gap;
                r
            })
            .collect();
        let trace = encode(&records, &line).unwrap();
        prop_assert_eq!(trace.len(), 2 * records.len());
        let decoded = decode(&trace, &line).unwrap();
        prop_assert_eq!(decoded.len(), records.len());
        for (d, r) in decoded.iter().zip(&records) {
            prop_assert!(d.is_ok());
            prop_assert_eq!(d.pixel, Some(r.pixel));
            prop_assert!((d.origin_time - r.fire_time).abs() < 1e-15);
        }
        prop_assert_eq!(photon_count(&decoded, Polarity::Negative), records.len());
    }

    #[test]
    fn dense_trace_never_loses_triggers(
        pixels in prop::collection::vec(0usize..16, 1..20),
        times in prop::collection::vec(0.0f64..100e-9, 20),
    ) {
        let line = LineConfig::default();
        let mut records: Vec<DetectionRecord> = pixels
            .iter()
            .zip(&times)
            .map(|(&pixel, &fire_time)| DetectionRecord { pixel, fire_time })
            .collect();
        records.sort_by(|a, b| a.fire_time.total_cmp(&b.fire_time));
        let decoded = decode(&encode(&records, &line).unwrap(), &line).unwrap();
        // pulses are conserved: each ok event is two pulses, every flagged one is one
        let pulses: usize = decoded.iter().map(|d| if d.is_ok() { 2 } else { 1 }).sum();
        prop_assert_eq!(pulses, 2 * records.len());
        // decoding never invents an out-of-range pixel from a calibrated line
        prop_assert!(decoded.iter().all(|d| d.pixel.is_none_or(|p| p < 16)));
    }

    #[test]
    fn streams_are_domain_separated(master in any::<u64>(), index in any::<u64>()) {
        let domains = [Domain::Arrivals, Domain::Bins, Domain::Detector, Domain::Bootstrap, Domain::Synthetic];
        let seeds: Vec<u64> = domains.iter().map(|&d| derive_seed(master, d, index)).collect();
        for i in 0..seeds.len() {
            for j in i + 1..seeds.len() {
                prop_assert_ne!(seeds[i], seeds[j]);
            }
        }
        prop_assert_ne!(derive_seed(master, Domain::Bins, index), derive_seed(master, Domain::Bins, index.wrapping_add(1)));
    }

    #[test]
    fn exact_frequencies_recover_t2(t2 in 0.05f64..0.95, stages in 2usize..=8) {
        let mesh = MeshTopology::new(stages).unwrap();
        let p = propagate(&mesh, &Coupler::from_t_squared(t2).unwrap(), Side::Left).probabilities;
        let fit = fit_t2_frequencies(&p, 10_000, stages, Side::Left, &NO_BOOTSTRAP).unwrap();
        prop_assert!((fit.estimate() - t2).abs() < 1e-6, "{} vs {}", fit.estimate(), t2);
    }

    #[test]
    fn gof_p_value_is_a_probability(counts in prop::collection::vec(0u64..500, 4..16)) {
        prop_assume!(counts.iter().sum::<u64>() > 0);
        let p = vec![1.0 / counts.len() as f64; counts.len()];
        let g = chi_square_gof(&counts, &p, 0).unwrap();
        prop_assert!(g.statistic >= 0.0);
        prop_assert!((0.0..=1.0).contains(&g.p_value));
    }

    #[test]
    fn exponential_estimate_is_positive(intervals in prop::collection::vec(1e-3f64..1e3, 1..400)) {
        if intervals.len() < MIN_INTERVALS {
            prop_assert!(fit_exponential(&intervals, &NO_BOOTSTRAP).is_err());
            return Ok(());
        }
        let fit = fit_exponential(&intervals, &NO_BOOTSTRAP).unwrap();
        prop_assert!(fit.fit.estimate > 0.0 && fit.fit.estimate.is_finite());
        prop_assert!(fit.fit.ci_low <= fit.fit.estimate && fit.fit.estimate <= fit.fit.ci_high);
    }
}
