//! Single-photon quantum walk through a triangular directional-coupler mesh.
//!
//! Row `k` (1-based) of the mesh holds `k` couplers. The right output of
//! coupler `j` feeds the left input of coupler `j + 1` in the next row, and
//! its left output feeds the right input of coupler `j`; the two edge inputs
//! of every row past the first see vacuum. A mesh with `S` rows therefore
//! ends in `2S` output bins, ordered `[L1, R1, L2, R2, ...]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest mesh the path-sum oracle will enumerate (`2^stages` paths).
pub const MAX_ORACLE_STAGES: usize = 20;

/// One of the two arms of a coupler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    fn offset(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }
}

/// A lossless symmetric directional coupler.
///
/// Only the transmission amplitude `t` is stored; the coupling amplitude is
/// always `sqrt(1 - t^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupler {
    t: f64,
}

impl Coupler {
    pub fn new(t: f64) -> Result<Self> {
        if !t.is_finite() || !(0.0..=1.0).contains(&t) {
            return invalid(format!("transmission amplitude {t} outside [0, 1]"));
        }
        Ok(Self { t })
    }

    /// Build from the power transmission `t^2`.
    pub fn from_t_squared(t_squared: f64) -> Result<Self> {
        if !t_squared.is_finite() || !(0.0..=1.0).contains(&t_squared) {
            return invalid(format!("t^2 = {t_squared} outside [0, 1]"));
        }
        Self::new(t_squared.sqrt())
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> f64 {
        (1.0 - self.t * self.t).max(0.0).sqrt()
    }

    pub fn t_squared(&self) -> f64 {
        self.t * self.t
    }

    /// Apply `[[t, ir], [ir, t]]` to the input mode amplitudes.
    pub fn transfer(&self, in_left: Complex64, in_right: Complex64) -> (Complex64, Complex64) {
        let t = self.t;
        let ir = Complex64::new(0.0, self.r());
        (t * in_left + ir * in_right, ir * in_left + t * in_right)
    }
}

/// Where a coupler input port takes its light from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortSource {
    /// External injection port of the first coupler.
    Injection,
    Vacuum,
    /// An output of a coupler in the previous row.
    Upstream { coupler: usize, side: Side },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CouplerNode {
    pub left: PortSource,
    pub right: PortSource,
}

impl CouplerNode {
    fn input(&self, side: Side) -> PortSource {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }
}

/// Triangular Galton-board mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeshTopology {
    rows: Vec<Vec<CouplerNode>>,
    // feeds[k][2j + side] = input of row k+1 fed by that output of row k
    feeds: Vec<Vec<(usize, Side)>>,
}

impl MeshTopology {
    pub fn new(stages: usize) -> Result<Self> {
        if stages == 0 {
            return invalid("mesh needs at least one stage");
        }
        let mut rows = Vec::with_capacity(stages);
        rows.push(vec![CouplerNode {
            left: PortSource::Injection,
            right: PortSource::Injection,
        }]);
        for k in 1..stages {
            // row k (0-based) has k + 1 couplers fed by the k couplers above
            let row = (0..=k)
                .map(|j| CouplerNode {
                    left: if j == 0 {
                        PortSource::Vacuum
                    } else {
                        PortSource::Upstream { coupler: j - 1, side: Side::Right }
                    },
                    right: if j == k {
                        PortSource::Vacuum
                    } else {
                        PortSource::Upstream { coupler: j, side: Side::Left }
                    },
                })
                .collect();
            rows.push(row);
        }

        let mut feeds = Vec::with_capacity(stages - 1);
        for k in 0..stages - 1 {
            let mut map = vec![(usize::MAX, Side::Left); 2 * rows[k].len()];
            for (j, node) in rows[k + 1].iter().enumerate() {
                for side in [Side::Left, Side::Right] {
                    if let PortSource::Upstream { coupler, side: out } = node.input(side) {
                        map[2 * coupler + out.offset()] = (j, side);
                    }
                }
            }
            feeds.push(map);
        }
        Ok(Self { rows, feeds })
    }

    pub fn stages(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<CouplerNode>] {
        &self.rows
    }

    pub fn coupler_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn output_bins(&self) -> usize {
        2 * self.stages()
    }

    /// The next-row coupler input fed by output `side` of coupler `coupler`
    /// in row `row` (0-based). `None` for the final row, whose outputs are bins.
    pub fn downstream(&self, row: usize, coupler: usize, side: Side) -> Option<(usize, Side)> {
        self.feeds.get(row).map(|map| map[2 * coupler + side.offset()])
    }

    /// Bin index of an output port of the final row.
    pub fn bin_index(coupler: usize, side: Side) -> usize {
        2 * coupler + side.offset()
    }
}

/// Complex amplitudes and probabilities over the output bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDistribution {
    pub stages: usize,
    pub t_squared: f64,
    pub input_port: Side,
    pub amplitudes: Vec<Complex64>,
    pub probabilities: Vec<f64>,
}

impl OutputDistribution {
    fn from_amplitudes(stages: usize, coupler: &Coupler, input_port: Side, amplitudes: Vec<Complex64>) -> Self {
        let probabilities = amplitudes.iter().map(|a| a.norm_sqr()).collect();
        Self {
            stages,
            t_squared: coupler.t_squared(),
            input_port,
            amplitudes,
            probabilities,
        }
    }

    pub fn bins(&self) -> usize {
        self.probabilities.len()
    }
}

fn injected(input_port: Side, side: Side) -> Complex64 {
    if side == input_port {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Row-by-row unitary propagation of a photon injected at `input_port`.
pub fn propagate(mesh: &MeshTopology, coupler: &Coupler, input_port: Side) -> OutputDistribution {
    let mut state: Vec<Complex64> = Vec::new();
    for row in mesh.rows() {
        let mut next = vec![Complex64::new(0.0, 0.0); 2 * row.len()];
        for (j, node) in row.iter().enumerate() {
            let amp = |side: Side| match node.input(side) {
                PortSource::Injection => injected(input_port, side),
                PortSource::Vacuum => Complex64::new(0.0, 0.0),
                PortSource::Upstream { coupler, side } => state[MeshTopology::bin_index(coupler, side)],
            };
            let (l, r) = coupler.transfer(amp(Side::Left), amp(Side::Right));
            next[2 * j] = l;
            next[2 * j + 1] = r;
        }
        state = next;
    }
    OutputDistribution::from_amplitudes(mesh.stages(), coupler, input_port, state)
}

/// Derivative of every bin probability with respect to the transmission
/// amplitude `t`, by forward-mode differentiation through the mesh.
///
/// Undefined at `t = 1`, where `dr/dt` diverges.
pub fn probability_gradient(mesh: &MeshTopology, coupler: &Coupler, input_port: Side) -> Result<Vec<f64>> {
    let t = coupler.t();
    let r = coupler.r();
    if r == 0.0 {
        return invalid("probability gradient is undefined at t = 1");
    }
    let zero = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let dr = -t / r;

    // (value, d/dt) pairs
    let mut state: Vec<(Complex64, Complex64)> = Vec::new();
    for row in mesh.rows() {
        let mut next = vec![(zero, zero); 2 * row.len()];
        for (j, node) in row.iter().enumerate() {
            let amp = |side: Side| match node.input(side) {
                PortSource::Injection => (injected(input_port, side), zero),
                PortSource::Vacuum => (zero, zero),
                PortSource::Upstream { coupler, side } => state[MeshTopology::bin_index(coupler, side)],
            };
            let (l, dl) = amp(Side::Left);
            let (rr, drr) = amp(Side::Right);
            next[2 * j] = (t * l + i * r * rr, l + t * dl + i * dr * rr + i * r * drr);
            next[2 * j + 1] = (i * r * l + t * rr, i * dr * l + i * r * dl + rr + t * drr);
        }
        state = next;
    }
    Ok(state
        .iter()
        .map(|(a, da)| 2.0 * (a.conj() * da).re)
        .collect())
}

/// Brute-force sum over every transmit/cross decision sequence.
///
/// Independent of [`propagate`]: each of the `2^stages` paths is followed
/// through the mesh links and its amplitude added to its terminal bin.
pub fn path_sum_oracle(mesh: &MeshTopology, coupler: &Coupler, input_port: Side) -> Result<OutputDistribution> {
    let stages = mesh.stages();
    if stages > MAX_ORACLE_STAGES {
        return Err(Error::ResourceLimit(format!(
            "path enumeration over {stages} stages exceeds the {MAX_ORACLE_STAGES}-stage limit"
        )));
    }
    let same = Complex64::new(coupler.t(), 0.0);
    let cross = Complex64::new(0.0, coupler.r());
    let mut sums = vec![Complex64::new(0.0, 0.0); mesh.output_bins()];

    for decisions in 0u32..(1u32 << stages) {
        let mut amplitude = Complex64::new(1.0, 0.0);
        let mut at = 0usize;
        let mut entering = input_port;
        for row in 0..stages {
            let exit = if decisions >> row & 1 == 0 {
                amplitude *= same;
                entering
            } else {
                amplitude *= cross;
                entering.other()
            };
            match mesh.downstream(row, at, exit) {
                Some((next, side)) => {
                    at = next;
                    entering = side;
                }
                None => sums[MeshTopology::bin_index(at, exit)] += amplitude,
            }
        }
    }
    Ok(OutputDistribution::from_amplitudes(stages, coupler, input_port, sums))
}
