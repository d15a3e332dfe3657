//! Delay-line multiplexed readout bus.
//!
//! A pixel firing launches a negative pulse toward one end of the bus and a
//! positive pulse toward the other. With pixels numbered from the positive
//! end, pixel `p` sends its positive pulse through `p` delay segments and its
//! negative pulse through `N - 1 - p`, so the difference
//! `positive - negative = (2p - (N - 1)) * segment_delay` identifies the pixel
//! and the mean of the two arrival times recovers the firing time.

use serde::{Deserialize, Serialize};

use crate::detector::DetectionRecord;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn other(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineConfig {
    /// Delay of one inter-pixel segment, seconds.
    pub segment_delay: f64,
    pub pixel_count: usize,
    /// Amplitude factor per segment traversed.
    pub attenuation_per_segment: f64,
    pub base_amplitude: f64,
    /// Polarity that triggers the persistence display.
    pub trigger_polarity: Polarity,
    /// Timing slack when pairing pulses, seconds. Three jitter sigmas by default.
    pub pair_tolerance: f64,
    /// Time difference (positive − negative) that maps to pixel 0.
    /// `None` uses `-(pixel_count - 1) * segment_delay`.
    pub offset: Option<f64>,
}

impl Default for LineConfig {
    fn default() -> Self {
        Self {
            segment_delay: 0.9e-9,
            pixel_count: 16,
            attenuation_per_segment: 0.97,
            base_amplitude: 1.0,
            trigger_polarity: Polarity::Negative,
            pair_tolerance: 3.0 * 50e-12,
            offset: None,
        }
    }
}

impl LineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.segment_delay.is_finite() && self.segment_delay > 0.0) {
            return invalid(format!("segment delay must be positive, got {}", self.segment_delay));
        }
        if self.pixel_count == 0 {
            return invalid("line needs at least one pixel");
        }
        if !(self.attenuation_per_segment > 0.0 && self.attenuation_per_segment <= 1.0) {
            return invalid(format!(
                "attenuation per segment {} outside (0, 1]",
                self.attenuation_per_segment
            ));
        }
        if !(self.base_amplitude.is_finite() && self.base_amplitude > 0.0) {
            return invalid(format!("base amplitude must be positive, got {}", self.base_amplitude));
        }
        if !(self.pair_tolerance.is_finite() && self.pair_tolerance >= 0.0) {
            return invalid(format!("pair tolerance must be non-negative, got {}", self.pair_tolerance));
        }
        if self.pair_tolerance >= self.segment_delay {
            return invalid("pair tolerance must be smaller than one segment delay");
        }
        if matches!(self.offset, Some(o) if !o.is_finite()) {
            return invalid("offset must be finite");
        }
        Ok(())
    }

    /// Time from one end of the bus to the other.
    pub fn line_span(&self) -> f64 {
        (self.pixel_count - 1) as f64 * self.segment_delay
    }

    /// Difference step between neighbouring pixels.
    pub fn pixel_step(&self) -> f64 {
        2.0 * self.segment_delay
    }

    pub fn offset(&self) -> f64 {
        self.offset.unwrap_or(-self.line_span())
    }

    /// Largest |positive − negative| a genuine pair can show.
    pub fn pairing_window(&self) -> f64 {
        self.line_span() + self.pair_tolerance
    }

    fn segments(&self, pixel: usize, polarity: Polarity) -> usize {
        match polarity {
            Polarity::Positive => pixel,
            Polarity::Negative => self.pixel_count - 1 - pixel,
        }
    }

    /// Expected `positive − negative` for a pixel.
    pub fn difference_for(&self, pixel: usize) -> f64 {
        self.offset() + pixel as f64 * self.pixel_step()
    }
}

/// A pulse seen at the end of the bus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub polarity: Polarity,
    pub time: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulsePair {
    pub positive: TraceEvent,
    pub negative: TraceEvent,
}

impl PulsePair {
    pub fn difference(&self) -> f64 {
        self.positive.time - self.negative.time
    }
}

fn pulse(record: &DetectionRecord, polarity: Polarity, config: &LineConfig) -> TraceEvent {
    let n = config.segments(record.pixel, polarity);
    TraceEvent {
        polarity,
        time: record.fire_time + n as f64 * config.segment_delay,
        amplitude: config.base_amplitude * config.attenuation_per_segment.powi(n as i32),
    }
}

/// The pulse pair launched by one firing.
pub fn encode_pair(record: &DetectionRecord, config: &LineConfig) -> Result<PulsePair> {
    if record.pixel >= config.pixel_count {
        return invalid(format!("pixel {} outside line of {} pixels", record.pixel, config.pixel_count));
    }
    Ok(PulsePair {
        positive: pulse(record, Polarity::Positive, config),
        negative: pulse(record, Polarity::Negative, config),
    })
}

/// Emit both pulses of every record, sorted by arrival time.
pub fn encode(records: &[DetectionRecord], config: &LineConfig) -> Result<Vec<TraceEvent>> {
    config.validate()?;
    let mut events = Vec::with_capacity(2 * records.len());
    for r in records {
        let pair = encode_pair(r, config)?;
        events.push(pair.negative);
        events.push(pair.positive);
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(events)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecodeFlag {
    Ok,
    /// Several pairings are consistent with the pulses in a pile-up cluster.
    Ambiguous,
    /// No partner pulse within the pairing window.
    Orphan,
    /// Partners exist but every candidate maps outside the pixel range.
    OutOfRange,
}

/// One decoder output row.
///
/// For [`DecodeFlag::Ok`] rows `origin_time` is the reconstructed firing time
/// and `pixel` is set. Flagged rows describe a single unpaired pulse: `pixel`
/// is `None`, `polarity` names the pulse and `origin_time` is its bus time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodedEvent {
    pub pixel: Option<usize>,
    pub origin_time: f64,
    pub flag: DecodeFlag,
    pub polarity: Option<Polarity>,
}

impl DecodedEvent {
    pub fn is_ok(&self) -> bool {
        self.flag == DecodeFlag::Ok
    }
}

/// Number of photons a decoded stream accounts for: every resolved pair plus
/// every trigger pulse stuck in an ambiguous cluster.
pub fn photon_count(decoded: &[DecodedEvent], trigger: Polarity) -> usize {
    decoded
        .iter()
        .filter(|d| d.is_ok() || (d.flag == DecodeFlag::Ambiguous && d.polarity == Some(trigger)))
        .count()
}

// Clusters with more negatives than this are flagged without enumeration.
const MAX_CLUSTER: usize = 12;

struct Candidate {
    positive: usize,
    pixel: usize,
}

/// Pair negative and positive pulses back into firings.
///
/// A negative and a positive are candidates when their difference lies
/// within the pairing window and sits on the pixel lattice within
/// `pair_tolerance`. Pulses linked by candidate edges form clusters; a
/// cluster decodes only when it has exactly one perfect matching. Every
/// other pulse is reported with a flag.
pub fn decode(events: &[TraceEvent], config: &LineConfig) -> Result<Vec<DecodedEvent>> {
    config.validate()?;
    if events.windows(2).any(|w| w[0].time > w[1].time) {
        return invalid("trace events must be sorted by time");
    }
    let negatives: Vec<&TraceEvent> = events.iter().filter(|e| e.polarity == Polarity::Negative).collect();
    let positives: Vec<&TraceEvent> = events.iter().filter(|e| e.polarity == Polarity::Positive).collect();
    let window = config.pairing_window();
    let step = config.pixel_step();
    let offset = config.offset();

    let mut edges: Vec<Vec<Candidate>> = Vec::with_capacity(negatives.len());
    let mut neg_near_miss = vec![false; negatives.len()];
    let mut pos_near_miss = vec![false; positives.len()];
    let mut pos_degree = vec![0usize; positives.len()];
    let mut lo = 0usize;
    for (i, neg) in negatives.iter().enumerate() {
        while lo < positives.len() && positives[lo].time < neg.time - window {
            lo += 1;
        }
        let mut list = Vec::new();
        for (j, pos) in positives.iter().enumerate().skip(lo) {
            let diff = pos.time - neg.time;
            if diff > window {
                break;
            }
            let index = ((diff - offset) / step).round();
            let residual = (diff - (offset + index * step)).abs();
            if residual > config.pair_tolerance {
                continue;
            }
            if index < 0.0 || index >= config.pixel_count as f64 {
                neg_near_miss[i] = true;
                pos_near_miss[j] = true;
                continue;
            }
            pos_degree[j] += 1;
            list.push(Candidate {
                positive: j,
                pixel: index as usize,
            });
        }
        edges.push(list);
    }

    // union-find over negatives (0..n) and positives (n..n+m)
    let n = negatives.len();
    let mut parent: Vec<usize> = (0..n + positives.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, list) in edges.iter().enumerate() {
        for c in list {
            let a = find(&mut parent, i);
            let b = find(&mut parent, n + c.positive);
            if a != b {
                parent[a] = b;
            }
        }
    }
    let mut clusters: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>)> = Default::default();
    for (i, list) in edges.iter().enumerate() {
        if !list.is_empty() {
            let root = find(&mut parent, i);
            clusters.entry(root).or_default().0.push(i);
        }
    }
    for (j, &degree) in pos_degree.iter().enumerate() {
        if degree > 0 {
            let root = find(&mut parent, n + j);
            clusters.entry(root).or_default().1.push(j);
        }
    }

    let mut out = Vec::with_capacity(negatives.len());
    let flagged = |e: &TraceEvent, flag| DecodedEvent {
        pixel: None,
        origin_time: e.time,
        flag,
        polarity: Some(e.polarity),
    };
    let half_span = config.line_span() / 2.0;
    for (negs, poss) in clusters.values() {
        let matching = if negs.len() == poss.len() && negs.len() <= MAX_CLUSTER {
            unique_matching(negs, &edges)
        } else {
            None
        };
        match matching {
            Some(pairs) => {
                for (i, c) in pairs {
                    out.push(DecodedEvent {
                        pixel: Some(c.pixel),
                        origin_time: (negatives[i].time + positives[c.positive].time) / 2.0 - half_span,
                        flag: DecodeFlag::Ok,
                        polarity: None,
                    });
                }
            }
            None => {
                out.extend(negs.iter().map(|&i| flagged(negatives[i], DecodeFlag::Ambiguous)));
                out.extend(poss.iter().map(|&j| flagged(positives[j], DecodeFlag::Ambiguous)));
            }
        }
    }
    for (i, neg) in negatives.iter().enumerate() {
        if edges[i].is_empty() {
            let flag = if neg_near_miss[i] { DecodeFlag::OutOfRange } else { DecodeFlag::Orphan };
            out.push(flagged(neg, flag));
        }
    }
    for (j, pos) in positives.iter().enumerate() {
        if pos_degree[j] == 0 {
            let flag = if pos_near_miss[j] { DecodeFlag::OutOfRange } else { DecodeFlag::Orphan };
            out.push(flagged(pos, flag));
        }
    }
    out.sort_by(|a, b| {
        a.origin_time
            .total_cmp(&b.origin_time)
            .then(a.pixel.cmp(&b.pixel))
            .then((a.flag as u8).cmp(&(b.flag as u8)))
    });
    Ok(out)
}

/// The single perfect matching of a cluster, or `None` if there are zero or
/// several.
fn unique_matching<'a>(negs: &[usize], edges: &'a [Vec<Candidate>]) -> Option<Vec<(usize, &'a Candidate)>> {
    fn search<'a>(
        k: usize,
        negs: &[usize],
        edges: &'a [Vec<Candidate>],
        used: &mut Vec<usize>,
        current: &mut Vec<(usize, &'a Candidate)>,
        found: &mut Option<Vec<(usize, &'a Candidate)>>,
        count: &mut usize,
    ) {
        if *count > 1 {
            return;
        }
        if k == negs.len() {
            *count += 1;
            *found = Some(current.clone());
            return;
        }
        let i = negs[k];
        for c in &edges[i] {
            if used.contains(&c.positive) {
                continue;
            }
            used.push(c.positive);
            current.push((i, c));
            search(k + 1, negs, edges, used, current, found, count);
            current.pop();
            used.pop();
        }
    }
    let mut found = None;
    let mut count = 0;
    search(0, negs, edges, &mut Vec::new(), &mut Vec::new(), &mut found, &mut count);
    if count == 1 {
        found
    } else {
        None
    }
}

/// Oscilloscope persistence display: partner pulses plotted against delay
/// from each trigger pulse, binned in delay and amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceTrace {
    pub delay_start: f64,
    pub bin_width: f64,
    pub amplitude_max: f64,
    pub amplitude_bins: usize,
    /// `counts[delay_bin][amplitude_bin]`
    pub counts: Vec<Vec<u64>>,
    pub triggers: usize,
}

/// A cluster of occupied delay bins in a persistence trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Count-weighted mean delay, seconds.
    pub delay: f64,
    pub weight: u64,
    /// Most occupied amplitude bin (centre).
    pub amplitude: f64,
}

pub const PERSISTENCE_AMPLITUDE_BINS: usize = 256;

pub fn persistence_trace(events: &[TraceEvent], config: &LineConfig, bin_width: f64) -> Result<PersistenceTrace> {
    config.validate()?;
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return invalid(format!("bin width must be positive, got {bin_width}"));
    }
    let window = config.pairing_window();
    let delay_bins = (2.0 * window / bin_width).ceil() as usize;
    let amplitude_max = config.base_amplitude;
    let amplitude_bins = PERSISTENCE_AMPLITUDE_BINS;
    let mut counts = vec![vec![0u64; amplitude_bins]; delay_bins];

    let trigger = config.trigger_polarity;
    let partners: Vec<&TraceEvent> = events.iter().filter(|e| e.polarity == trigger.other()).collect();
    let mut triggers = 0;
    let mut lo = 0usize;
    for t in events.iter().filter(|e| e.polarity == trigger) {
        triggers += 1;
        while lo < partners.len() && partners[lo].time < t.time - window {
            lo += 1;
        }
        for p in partners[lo..].iter().take_while(|p| p.time <= t.time + window) {
            let d = ((p.time - t.time + window) / bin_width).floor() as usize;
            let a = ((p.amplitude / amplitude_max) * amplitude_bins as f64).floor() as usize;
            counts[d.min(delay_bins - 1)][a.min(amplitude_bins - 1)] += 1;
        }
    }
    Ok(PersistenceTrace {
        delay_start: -window,
        bin_width,
        amplitude_max,
        amplitude_bins,
        counts,
        triggers,
    })
}

impl PersistenceTrace {
    pub fn delay_center(&self, bin: usize) -> f64 {
        self.delay_start + (bin as f64 + 0.5) * self.bin_width
    }

    pub fn amplitude_center(&self, bin: usize) -> f64 {
        (bin as f64 + 0.5) * self.amplitude_max / self.amplitude_bins as f64
    }

    /// Occupancy summed over amplitude.
    pub fn delay_profile(&self) -> Vec<u64> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }

    /// Runs of occupied delay bins whose total weight is at least
    /// `min_fraction` of the trigger count.
    pub fn peaks(&self, min_fraction: f64) -> Vec<Peak> {
        let profile = self.delay_profile();
        let threshold = (min_fraction * self.triggers as f64).max(1.0);
        let mut peaks = Vec::new();
        let mut k = 0;
        while k < profile.len() {
            if profile[k] == 0 {
                k += 1;
                continue;
            }
            let start = k;
            while k < profile.len() && profile[k] > 0 {
                k += 1;
            }
            let weight: u64 = profile[start..k].iter().sum();
            if (weight as f64) < threshold {
                continue;
            }
            let delay = (start..k)
                .map(|b| self.delay_center(b) * profile[b] as f64)
                .sum::<f64>()
                / weight as f64;
            let mut amp = vec![0u64; self.amplitude_bins];
            for row in &self.counts[start..k] {
                for (a, c) in row.iter().enumerate() {
                    amp[a] += c;
                }
            }
            let mode = amp
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(&x.0)))
                .map(|(a, _)| a)
                .unwrap_or(0);
            peaks.push(Peak {
                delay,
                weight,
                amplitude: self.amplitude_center(mode),
            });
        }
        peaks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(pixel: usize, t_ns: f64) -> DetectionRecord {
        DetectionRecord {
            pixel,
            fire_time: t_ns * 1e-9,
        }
    }

    #[test]
    fn edge_pixels_span_the_line() {
        let cfg = LineConfig::default();
        let p0 = encode_pair(&rec(0, 0.0), &cfg).unwrap();
        assert!((p0.negative.time - 13.5e-9).abs() < 1e-21);
        assert_eq!(p0.positive.time, 0.0);
        let p15 = encode_pair(&rec(15, 0.0), &cfg).unwrap();
        assert_eq!(p15.negative.time, 0.0);
        assert!((p15.positive.time - 13.5e-9).abs() < 1e-21);
    }

    #[test]
    fn neighbouring_pixels_differ_by_1_8_ns() {
        let cfg = LineConfig::default();
        for p in 0..15 {
            let a = encode_pair(&rec(p, 100.0), &cfg).unwrap().difference();
            let b = encode_pair(&rec(p + 1, 100.0), &cfg).unwrap().difference();
            assert!((b - a - 1.8e-9).abs() < 1e-18, "pixel {p}");
        }
    }

    #[test]
    fn mean_arrival_is_pixel_independent() {
        let cfg = LineConfig::default();
        let mean = |p| {
            let pair = encode_pair(&rec(p, 0.0), &cfg).unwrap();
            (pair.positive.time + pair.negative.time) / 2.0
        };
        // equal up to rounding of the segment sums
        for p in 0..16 {
            assert!((mean(p) - mean(0)).abs() <= 4.0 * f64::EPSILON * mean(0), "pixel {p}");
        }
    }

    #[test]
    fn lossless_line_keeps_amplitude() {
        let cfg = LineConfig {
            attenuation_per_segment: 1.0,
            ..Default::default()
        };
        let records: Vec<_> = (0..16).map(|p| rec(p, p as f64 * 100.0)).collect();
        for e in encode(&records, &cfg).unwrap() {
            assert_eq!(e.amplitude, 1.0);
        }
    }

    #[test]
    fn amplitude_falls_with_segments() {
        let cfg = LineConfig::default();
        let amps: Vec<f64> = (0..16)
            .map(|p| encode_pair(&rec(p, 0.0), &cfg).unwrap().positive.amplitude)
            .collect();
        assert!(amps.windows(2).all(|w| w[1] < w[0]));
        assert!((amps[15] - 0.97f64.powi(15)).abs() < 1e-15);
    }

    #[test]
    fn encode_rejects_unknown_pixel() {
        assert!(encode(&[rec(16, 0.0)], &LineConfig::default()).is_err());
    }

    #[test]
    fn difference_maps_to_pixel_two() {
        let cfg = LineConfig::default();
        let diff = -13.5e-9 + 2.0 * 1.8e-9;
        assert!((cfg.difference_for(2) - diff).abs() < 1e-18);
        let events = [
            TraceEvent { polarity: Polarity::Positive, time: 100e-9, amplitude: 1.0 },
            TraceEvent { polarity: Polarity::Negative, time: 100e-9 - diff, amplitude: 1.0 },
        ];
        let d = decode(&events, &cfg).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].pixel, Some(2));
    }

    #[test]
    fn every_pixel_round_trips() {
        // brute force over the 16 encode/decode pairs
        let cfg = LineConfig::default();
        for p in 0..16 {
            let records = [rec(p, 500.0)];
            let decoded = decode(&encode(&records, &cfg).unwrap(), &cfg).unwrap();
            assert_eq!(decoded.len(), 1);
            assert_eq!(decoded[0].pixel, Some(p));
            assert!((decoded[0].origin_time - 500e-9).abs() < 1e-12);
        }
    }

    #[test]
    fn orphans_are_reported() {
        let cfg = LineConfig::default();
        let events = [
            TraceEvent { polarity: Polarity::Negative, time: 0.0, amplitude: 1.0 },
            TraceEvent { polarity: Polarity::Positive, time: 100e-9, amplitude: 1.0 },
        ];
        let d = decode(&events, &cfg).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|e| e.flag == DecodeFlag::Orphan && e.pixel.is_none()));
    }

    #[test]
    fn miscalibrated_offset_gives_out_of_range() {
        let cfg = LineConfig::default();
        let events = encode(&[rec(15, 0.0)], &cfg).unwrap();
        let shifted = LineConfig {
            offset: Some(cfg.offset() - 2.0 * cfg.pixel_step()),
            ..cfg
        };
        let d = decode(&events, &shifted).unwrap();
        assert!(d.iter().all(|e| e.flag == DecodeFlag::OutOfRange));
    }

    #[test]
    fn overlapping_pairs_resolved_by_lattice() {
        let cfg = LineConfig::default();
        // 3.33 ns apart: cross pairings fall off the 1.8 ns lattice
        let records = [rec(4, 10.0), rec(11, 13.33)];
        let d = decode(&encode(&records, &cfg).unwrap(), &cfg).unwrap();
        let pixels: Vec<_> = d.iter().map(|e| (e.pixel, e.flag)).collect();
        assert_eq!(pixels, vec![(Some(4), DecodeFlag::Ok), (Some(11), DecodeFlag::Ok)]);
    }

    #[test]
    fn indistinguishable_pile_up_is_ambiguous() {
        let cfg = LineConfig::default();
        // same firing time and same pixel parity: the crossed pairing also
        // lands on the lattice
        let records = [rec(3, 10.0), rec(7, 10.0)];
        let d = decode(&encode(&records, &cfg).unwrap(), &cfg).unwrap();
        assert_eq!(d.len(), 4);
        assert!(d.iter().all(|e| e.flag == DecodeFlag::Ambiguous));
        assert_eq!(photon_count(&d, Polarity::Negative), 2);
    }

    #[test]
    fn unsorted_trace_rejected() {
        let events = [
            TraceEvent { polarity: Polarity::Negative, time: 1.0, amplitude: 1.0 },
            TraceEvent { polarity: Polarity::Positive, time: 0.0, amplitude: 1.0 },
        ];
        assert!(decode(&events, &LineConfig::default()).is_err());
    }

    #[test]
    fn line_config_validation() {
        let mut cfg = LineConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.attenuation_per_segment = 0.0;
        assert!(cfg.validate().is_err());
        cfg.attenuation_per_segment = 1.0;
        cfg.segment_delay = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn single_pixel_persistence_has_one_peak() {
        let cfg = LineConfig::default();
        let records: Vec<_> = (0..100).map(|i| rec(9, i as f64 * 100.0)).collect();
        let trace = persistence_trace(&encode(&records, &cfg).unwrap(), &cfg, 0.1e-9).unwrap();
        let peaks = trace.peaks(0.001);
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks[0].weight, 100);
        assert!((peaks[0].delay - cfg.difference_for(9)).abs() <= 0.1e-9);
    }

    #[test]
    fn persistence_amplitude_falls_with_delay() {
        let cfg = LineConfig::default();
        let records: Vec<_> = (0..160).map(|i| rec(i % 16, i as f64 * 100.0)).collect();
        let trace = persistence_trace(&encode(&records, &cfg).unwrap(), &cfg, 0.1e-9).unwrap();
        let peaks = trace.peaks(0.001);
        assert_eq!(peaks.len(), 16);
        assert!(peaks.windows(2).all(|w| w[1].amplitude < w[0].amplitude));
        assert!(peaks.windows(2).all(|w| ((w[1].delay - w[0].delay) - 1.8e-9).abs() <= 0.1e-9));
    }
}
