//! The four experiments, each driven entirely by decoded readout events.
//!
//! Source-side truth is carried along only for the `truth` sections of the
//! reports. Times in reports are nanoseconds.

use galton_core::readout::{
    persistence_trace, photon_count, DecodeFlag, DecodedEvent, LineConfig, PersistenceTrace, Polarity, TraceEvent,
};
use galton_core::stats::{
    chi_square_gof, fit_exponential, fit_poisson, fit_t2, mean_consistency, poisson_pmf, BinHistogram,
    ConsistencyReport, ExponentialFit, FitOptions, FitResult, GofResult, PoissonFit, T2Fit, MIN_INTERVALS,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::HarnessError;
use crate::pipeline::{Pipeline, WindowRecord};

/// Significance level of the saturation test.
pub const SATURATION_SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplerInfo {
    pub t_squared: f64,
    pub wavelength_nm: Option<f64>,
    /// The wavelength lies outside the calibration points.
    pub extrapolated: Option<bool>,
    /// Ideal output distribution of the mesh.
    pub distribution: Vec<f64>,
}

/// Decoder flag tallies over the windows a run used.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DecodeSummary {
    pub ok: u64,
    pub ambiguous: u64,
    pub orphan: u64,
    pub out_of_range: u64,
}

impl DecodeSummary {
    pub fn tally<'a>(decoded: impl IntoIterator<Item = &'a DecodedEvent>) -> Self {
        let mut s = Self::default();
        for d in decoded {
            match d.flag {
                DecodeFlag::Ok => s.ok += 1,
                DecodeFlag::Ambiguous => s.ambiguous += 1,
                DecodeFlag::Orphan => s.orphan += 1,
                DecodeFlag::OutOfRange => s.out_of_range += 1,
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterferenceTruth {
    pub t_squared: f64,
    /// Bins of every photon emitted in the windows used.
    pub histogram: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterferenceReport {
    pub windows_used: u64,
    /// Decoded photons requested and obtained.
    pub sample_size: u64,
    pub photons: u64,
    /// `max_windows` ran out before `sample_size` photons were decoded.
    pub shortfall: bool,
    pub histogram: Vec<u64>,
    pub fit: T2Fit,
    pub gof: Option<GofResult>,
    pub truth: InterferenceTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingTruth {
    pub incident_mean: f64,
    pub detected_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingReport {
    pub windows: u64,
    /// `histogram[n]` = windows in which `n` photons were decoded.
    pub histogram: Vec<u64>,
    pub fit: PoissonFit,
    /// The Poisson law is rejected at the 5% level.
    pub saturated: bool,
    pub registered_mean: f64,
    pub truth: CountingTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalsTruth {
    pub incident_mean: f64,
    pub mean_interval_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalsReport {
    pub windows: u64,
    pub photons: u64,
    pub intervals: u64,
    /// Fewer intervals than an exponential fit needs.
    pub insufficient_data: bool,
    /// Time constant in ns.
    pub fit: Option<ExponentialFit>,
    /// `ΔT / τ̂`
    pub interval_mean: Option<f64>,
    pub count_fit: Option<FitResult>,
    pub consistency: Option<ConsistencyReport>,
    pub truth: IntervalsTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakReport {
    pub delay_ns: f64,
    pub weight: u64,
    pub amplitude: f64,
    /// Pixel the delay maps back to, if it sits on the lattice.
    pub pixel: Option<usize>,
    pub expected_weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistenceReport {
    pub windows: u64,
    pub triggers: u64,
    pub bin_width_ns: f64,
    pub peak_count: usize,
    pub peaks: Vec<PeakReport>,
    pub spacing_ns: Vec<f64>,
    pub mean_spacing_ns: Option<f64>,
    pub amplitudes_decreasing: bool,
    /// Peak weights against the mesh distribution, when every pixel shows up.
    pub weights_gof: Option<GofResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentResult {
    Interference(InterferenceReport),
    Counting(CountingReport),
    Intervals(IntervalsReport),
    Persistence(PersistenceReport),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub coupler: CouplerInfo,
    pub decode: DecodeSummary,
    pub result: ExperimentResult,
}

/// A finished run: the report plus the raw streams behind it.
#[derive(Debug, Clone)]
pub struct Run {
    pub report: Report,
    pub windows: Vec<WindowRecord>,
    pub persistence: Option<PersistenceTrace>,
}

/// Validate `config` and run its experiment.
pub fn run(config: &ExperimentConfig) -> Result<Run, HarnessError> {
    let pipeline = Pipeline::new(config)?;
    let (t_squared, extrapolated) = config.coupler_t_squared()?;
    let coupler = CouplerInfo {
        t_squared,
        wavelength_nm: config.wavelength_nm,
        extrapolated,
        distribution: pipeline.distribution.probabilities.clone(),
    };
    let (result, windows, persistence) = match config.experiment {
        ExperimentKind::Interference => {
            let (r, w) = interference(config, &pipeline)?;
            (ExperimentResult::Interference(r), w, None)
        }
        ExperimentKind::Counting => {
            let (r, w) = counting(config, &pipeline)?;
            (ExperimentResult::Counting(r), w, None)
        }
        ExperimentKind::Intervals => {
            let (r, w) = intervals(config, &pipeline)?;
            (ExperimentResult::Intervals(r), w, None)
        }
        ExperimentKind::Persistence => {
            let (r, w, trace) = persistence(config, &pipeline)?;
            (ExperimentResult::Persistence(r), w, Some(trace))
        }
    };
    let mut echoed = config.clone();
    echoed.output_dir = None;
    Ok(Run {
        report: Report {
            experiment: config.experiment,
            seed: config.seed,
            config: echoed,
            coupler,
            decode: DecodeSummary::tally(windows.iter().flat_map(|w| &w.decoded)),
            result,
        },
        windows,
        persistence,
    })
}

fn fit_options(config: &ExperimentConfig) -> FitOptions {
    FitOptions {
        bootstrap_resamples: config.bootstrap_resamples,
        seed: config.seed,
    }
}

fn mean_efficiency(config: &ExperimentConfig) -> f64 {
    use galton_core::detector::Efficiency;
    match &config.detector.efficiency {
        Efficiency::Uniform(e) => *e,
        Efficiency::PerPixel(v) => v.iter().sum::<f64>() / v.len() as f64,
    }
}

fn interference(config: &ExperimentConfig, pipeline: &Pipeline) -> Result<(InterferenceReport, Vec<WindowRecord>), HarnessError> {
    let target = config.sample_size as u64;
    let limit = config.max_windows as u64;
    let per_window = (config.mean_photon_number * mean_efficiency(config)).max(1e-3);
    let mut windows: Vec<WindowRecord> = Vec::new();
    let mut decoded = 0u64;
    while decoded < target && (windows.len() as u64) < limit {
        let used = windows.len() as u64;
        let need = (1.1 * (target - decoded) as f64 / per_window).ceil() as u64;
        let end = (used + need.max(64)).min(limit);
        let batch = pipeline.run_windows(used, end)?;
        decoded += batch.iter().map(|w| w.decoded.iter().filter(|d| d.is_ok()).count() as u64).sum::<u64>();
        windows.extend(batch);
    }

    // keep whole windows up to the one holding the target-th photon
    let mut pixels = Vec::with_capacity(config.sample_size);
    let mut keep = 0;
    for w in &windows {
        if pixels.len() as u64 >= target {
            break;
        }
        keep += 1;
        pixels.extend(w.decoded.iter().filter_map(|d| d.pixel.filter(|_| d.is_ok())));
    }
    windows.truncate(keep);
    pixels.truncate(config.sample_size);

    let bins = pipeline.distribution.bins();
    let histogram = BinHistogram::from_indices(pixels.iter().copied(), bins);
    let fit = fit_t2(&histogram, config.stages, config.input_port, &fit_options(config))?;
    let gof = chi_square_gof(histogram.counts(), &fit.model, 1).ok();
    let truth = BinHistogram::from_indices(windows.iter().flat_map(|w| w.photons.iter().map(|p| p.bin)), bins);
    let photons = histogram.total();
    Ok((
        InterferenceReport {
            windows_used: windows.len() as u64,
            sample_size: target,
            photons,
            shortfall: photons < target,
            histogram: histogram.counts().to_vec(),
            fit,
            gof,
            truth: InterferenceTruth {
                t_squared: pipeline.distribution.t_squared,
                histogram: truth.counts().to_vec(),
            },
        },
        windows,
    ))
}

/// Photons the decoder accounts for in each window.
pub fn window_counts(windows: &[WindowRecord], trigger: Polarity) -> Vec<u64> {
    windows.iter().map(|w| photon_count(&w.decoded, trigger) as u64).collect()
}

fn counting(config: &ExperimentConfig, pipeline: &Pipeline) -> Result<(CountingReport, Vec<WindowRecord>), HarnessError> {
    let windows = pipeline.run_windows(0, config.windows as u64)?;
    let counts = window_counts(&windows, pipeline.line.trigger_polarity);
    let fit = fit_poisson(&counts, &fit_options(config))?;
    let saturated = fit.gof.map(|g| !g.passes(SATURATION_SIGNIFICANCE)).unwrap_or(false);
    let n = windows.len() as f64;
    let truth = CountingTruth {
        incident_mean: windows.iter().map(|w| w.photons.len()).sum::<usize>() as f64 / n,
        detected_mean: windows.iter().map(|w| w.detections.len()).sum::<usize>() as f64 / n,
    };
    Ok((
        CountingReport {
            windows: windows.len() as u64,
            histogram: fit.histogram.clone(),
            registered_mean: fit.mle,
            saturated,
            fit,
            truth,
        },
        windows,
    ))
}

/// Decoded firing times of consecutive windows laid end to end, in ns.
///
/// Resolved pairs give their pulse-pair average. A trigger pulse stuck in an
/// ambiguous cluster still marks one photon; its firing time is only known
/// to lie within one line span before the pulse, so the middle of that range
/// is used (error at most half a span).
pub fn decoded_stream_ns(windows: &[WindowRecord], window_ns: f64, line: &LineConfig) -> Vec<f64> {
    let trigger = line.trigger_polarity;
    let half_span = line.line_span() / 2.0;
    let mut times: Vec<f64> = windows
        .iter()
        .flat_map(|w| {
            let start = w.index as f64 * window_ns;
            w.decoded.iter().filter_map(move |d| {
                let t = match d.flag {
                    DecodeFlag::Ok => d.origin_time,
                    DecodeFlag::Ambiguous if d.polarity == Some(trigger) => d.origin_time - half_span,
                    _ => return None,
                };
                Some(start + t * 1e9)
            })
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times
}

fn gaps(times: &[f64]) -> Vec<f64> {
    times.windows(2).map(|p| p[1] - p[0]).filter(|g| *g > 0.0).collect()
}

fn intervals(config: &ExperimentConfig, pipeline: &Pipeline) -> Result<(IntervalsReport, Vec<WindowRecord>), HarnessError> {
    let windows = pipeline.run_windows(0, config.windows as u64)?;
    let times = decoded_stream_ns(&windows, config.window_ns, &pipeline.line);
    let intervals = gaps(&times);
    let options = fit_options(config);

    let insufficient_data = intervals.len() < MIN_INTERVALS;
    let fit = if insufficient_data {
        None
    } else {
        Some(fit_exponential(&intervals, &options)?)
    };
    let counts = window_counts(&windows, pipeline.line.trigger_polarity);
    let count_fit = fit_poisson(&counts, &options).ok().map(|f| f.fit);
    let consistency = count_fit
        .as_ref()
        .map(|c| mean_consistency(c, fit.as_ref().map(|f| &f.fit), config.window_ns));
    let interval_mean = fit.as_ref().map(|f| config.window_ns / f.fit.estimate);

    let truth_times: Vec<f64> = windows
        .iter()
        .flat_map(|w| {
            let start = w.index as f64 * config.window_ns;
            w.photons.iter().map(move |p| start + p.arrival_time * 1e9)
        })
        .collect();
    let truth_gaps = gaps(&truth_times);
    let truth = IntervalsTruth {
        incident_mean: truth_times.len() as f64 / windows.len() as f64,
        mean_interval_ns: if truth_gaps.is_empty() {
            0.0
        } else {
            truth_gaps.iter().sum::<f64>() / truth_gaps.len() as f64
        },
    };
    Ok((
        IntervalsReport {
            windows: windows.len() as u64,
            photons: times.len() as u64,
            intervals: intervals.len() as u64,
            insufficient_data,
            fit,
            interval_mean,
            count_fit,
            consistency,
            truth,
        },
        windows,
    ))
}

/// Bus pulses of consecutive windows laid end to end, sorted, in seconds.
pub fn trace_stream(windows: &[WindowRecord], window: f64) -> Vec<TraceEvent> {
    let mut events: Vec<TraceEvent> = windows
        .iter()
        .flat_map(|w| {
            let start = w.index as f64 * window;
            w.trace.iter().map(move |e| TraceEvent {
                time: start + e.time,
                ..*e
            })
        })
        .collect();
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    events
}

fn persistence(
    config: &ExperimentConfig,
    pipeline: &Pipeline,
) -> Result<(PersistenceReport, Vec<WindowRecord>, PersistenceTrace), HarnessError> {
    let windows = pipeline.run_windows(0, config.windows as u64)?;
    let stream = trace_stream(&windows, pipeline.window());
    let line = &pipeline.line;
    let trace = persistence_trace(&stream, line, config.persistence_bin_width_ns * 1e-9)?;
    let found = trace.peaks(config.peak_min_fraction);

    // partner minus trigger delay; equal to the pair difference for negative triggers
    let sign = if line.trigger_polarity == Polarity::Negative { 1.0 } else { -1.0 };
    let probabilities = &pipeline.distribution.probabilities;
    let peaks: Vec<PeakReport> = found
        .iter()
        .map(|p| {
            let k = (sign * p.delay - line.offset()) / line.pixel_step();
            let pixel = Some(k.round())
                .filter(|r| (k - r).abs() * line.pixel_step() <= line.pair_tolerance && *r >= 0.0)
                .map(|r| r as usize)
                .filter(|&r| r < line.pixel_count);
            PeakReport {
                delay_ns: p.delay * 1e9,
                weight: p.weight,
                amplitude: p.amplitude,
                pixel,
                expected_weight: pixel.map(|i| trace.triggers as f64 * probabilities[i]),
            }
        })
        .collect();
    let spacing_ns: Vec<f64> = peaks.windows(2).map(|w| w[1].delay_ns - w[0].delay_ns).collect();
    let mean_spacing_ns = (!spacing_ns.is_empty()).then(|| spacing_ns.iter().sum::<f64>() / spacing_ns.len() as f64);
    let amplitudes_decreasing = peaks.len() > 1 && peaks.windows(2).all(|w| w[1].amplitude < w[0].amplitude);

    let mut pixels: Vec<usize> = peaks.iter().filter_map(|p| p.pixel).collect();
    pixels.sort_unstable();
    pixels.dedup();
    let weights_gof = if pixels.len() == line.pixel_count && peaks.len() == line.pixel_count {
        let mut observed = vec![0u64; line.pixel_count];
        for p in &peaks {
            observed[p.pixel.expect("all peaks mapped")] = p.weight;
        }
        chi_square_gof(&observed, probabilities, 0).ok()
    } else {
        None
    };

    Ok((
        PersistenceReport {
            windows: windows.len() as u64,
            triggers: trace.triggers as u64,
            bin_width_ns: config.persistence_bin_width_ns,
            peak_count: peaks.len(),
            peaks,
            spacing_ns,
            mean_spacing_ns,
            amplitudes_decreasing,
            weights_gof,
        },
        windows,
        trace,
    ))
}

/// One point of a wavelength sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub wavelength_nm: f64,
    pub model_t_squared: f64,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// Least-squares line through the fitted t² values.
    pub slope: f64,
    pub intercept: f64,
    /// Largest |fit − line| as a multiple of that point's CI half-width.
    pub max_scaled_residual: f64,
    pub monotone: bool,
}

/// Interference runs at each wavelength; point `i` uses seed `seed + i`.
pub fn wavelength_sweep(config: &ExperimentConfig, wavelengths_nm: &[f64]) -> Result<SweepReport, HarnessError> {
    let mut points = Vec::with_capacity(wavelengths_nm.len());
    for (i, &lambda) in wavelengths_nm.iter().enumerate() {
        let mut c = config.clone();
        c.experiment = ExperimentKind::Interference;
        c.wavelength_nm = Some(lambda);
        c.t_squared = None;
        c.seed = config.seed.wrapping_add(i as u64);
        let run = run(&c)?;
        let ExperimentResult::Interference(r) = run.report.result else {
            unreachable!("interference run")
        };
        points.push(SweepPoint {
            wavelength_nm: lambda,
            model_t_squared: run.report.coupler.t_squared,
            fit: r.fit.fit,
        });
    }
    let n = points.len() as f64;
    let (slope, intercept) = if points.len() >= 2 {
        let mx = points.iter().map(|p| p.wavelength_nm).sum::<f64>() / n;
        let my = points.iter().map(|p| p.fit.estimate).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|p| (p.wavelength_nm - mx).powi(2)).sum();
        let sxy: f64 = points.iter().map(|p| (p.wavelength_nm - mx) * (p.fit.estimate - my)).sum();
        let s = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        (s, my - s * mx)
    } else {
        (0.0, points.first().map_or(0.0, |p| p.fit.estimate))
    };
    let max_scaled_residual = points
        .iter()
        .map(|p| {
            let r = (p.fit.estimate - (slope * p.wavelength_nm + intercept)).abs();
            if p.fit.half_width() > 0.0 {
                r / p.fit.half_width()
            } else if r == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    let mut sorted: Vec<&SweepPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.wavelength_nm.total_cmp(&b.wavelength_nm));
    let rising = sorted.windows(2).all(|w| w[1].fit.estimate >= w[0].fit.estimate);
    let falling = sorted.windows(2).all(|w| w[1].fit.estimate <= w[0].fit.estimate);
    Ok(SweepReport {
        points,
        slope,
        intercept,
        max_scaled_residual,
        monotone: rising || falling,
    })
}

/// Expected windows per count under the fitted law, for plotting.
pub fn poisson_expected(fit: &PoissonFit) -> Vec<f64> {
    let n = fit.fit.n_samples as f64;
    poisson_pmf(fit.fit.estimate, fit.histogram.len().saturating_sub(1))
        .into_iter()
        .map(|p| p * n)
        .collect()
}
