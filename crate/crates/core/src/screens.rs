//! Screens: arrival histograms, analytic intensity profiles, fringe contrast
//! and the sweeper summary of the attenuated beam.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::attenuation::{
    apply_stochastic, deterministic_intensity, distinguishability, theoretical_visibility,
    AttenuationKind, AttenuationMode, TransmissionFactor,
};
use crate::fields::{channel_densities, CoherenceMode};
use crate::packets::{PacketError, PacketParams};
use crate::stats::{iqr, median, trapezoid};
use crate::trajectories::{Slit, Termination, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScreenError {
    #[error("histogram needs a positive bin width, got range [{lo}, {hi}] with {bins} bins")]
    BadBins { lo: f64, hi: f64, bins: usize },
    #[error("profile grid needs at least two increasing points")]
    BadGrid,
    #[error(transparent)]
    Packet(#[from] PacketError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScreenOrientation {
    /// at fixed forward distance; arrivals binned in `x`
    Forward,
    /// parallel to the forward axis at fixed `x`; arrivals binned in `y`
    Sideways,
}

impl ScreenOrientation {
    pub fn termination(self) -> Termination {
        match self {
            ScreenOrientation::Forward => Termination::ReachedForwardScreen,
            ScreenOrientation::Sideways => Termination::ReachedSidewaysScreen,
        }
    }
}

/// Uniform bins over `[lo, hi)`; the last bin also takes `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinGrid {
    lo: f64,
    hi: f64,
    bins: usize,
}

impl BinGrid {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self, ScreenError> {
        if bins == 0 || !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(ScreenError::BadBins { lo, hi, bins });
        }
        Ok(Self { lo, hi, bins })
    }

    /// Grid covering all `values` with a small margin; a single point or an
    /// empty slice gets a unit-width window.
    pub fn covering(values: &[f64], bins: usize) -> Result<Self, ScreenError> {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(lo.is_finite() && hi.is_finite()) {
            return Self::new(-0.5, 0.5, bins);
        }
        let pad = if hi > lo {
            1e-9 * (hi - lo)
        } else {
            0.5 * lo.abs().max(1.0)
        };
        Self::new(lo - pad, hi + pad, bins)
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn len(&self) -> usize {
        self.bins
    }

    pub fn is_empty(&self) -> bool {
        self.bins == 0
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = self.width();
        (0..self.bins)
            .map(|i| self.lo + (i as f64 + 0.5) * w)
            .collect()
    }

    pub fn index(&self, value: f64) -> Option<usize> {
        if !(value >= self.lo && value <= self.hi) {
            return None;
        }
        Some((((value - self.lo) / self.width()) as usize).min(self.bins - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenSpec {
    pub orientation: ScreenOrientation,
    pub grid: BinGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    /// `x` on a forward screen, `y` on a sideways screen
    pub coord: f64,
    pub slit: Slit,
    pub x0: f64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenRecord {
    pub orientation: ScreenOrientation,
    pub grid: BinGrid,
    pub counts_total: Vec<u64>,
    pub counts_slit1: Vec<u64>,
    pub counts_slit2: Vec<u64>,
    pub arrivals: Vec<Arrival>,
    /// arrivals on this screen that fell outside the bin range
    pub out_of_range: usize,
}

impl ScreenRecord {
    pub fn arrivals_from(&self, slit: Slit) -> impl Iterator<Item = &Arrival> {
        self.arrivals.iter().filter(move |a| a.slit == slit)
    }

    /// Histogram with each arrival weighted by its slit, e.g. `[1, a]` for
    /// physically proportioned counts from equal launch numbers.
    pub fn weighted_counts(&self, weights: [f64; 2]) -> Vec<f64> {
        self.counts_slit1
            .iter()
            .zip(&self.counts_slit2)
            .map(|(&c1, &c2)| weights[0] * c1 as f64 + weights[1] * c2 as f64)
            .collect()
    }
}

/// Sideways-screen bins spanning the slit-2 arrivals, or all sideways
/// arrivals when slit 2 has none. Late slit-1 stragglers land far up the
/// screen and would otherwise squeeze the attenuated arm into a few bins.
pub fn sideways_grid(trajectories: &[Trajectory], bins: usize) -> Result<BinGrid, ScreenError> {
    let heights = |slit: Option<Slit>| -> Vec<f64> {
        trajectories
            .iter()
            .filter(|t| t.termination == Termination::ReachedSidewaysScreen)
            .filter(|t| slit.is_none_or(|s| t.source_slit == s))
            .map(|t| t.last().y)
            .collect()
    };
    let ys = heights(Some(Slit::Slit2));
    if ys.is_empty() {
        BinGrid::covering(&heights(None), bins)
    } else {
        BinGrid::covering(&ys, bins)
    }
}

/// Bins every trajectory that terminated on the given screen.
pub fn record(trajectories: &[Trajectory], spec: &ScreenSpec) -> ScreenRecord {
    let n = spec.grid.len();
    let mut rec = ScreenRecord {
        orientation: spec.orientation,
        grid: spec.grid,
        counts_total: vec![0; n],
        counts_slit1: vec![0; n],
        counts_slit2: vec![0; n],
        arrivals: Vec::new(),
        out_of_range: 0,
    };
    for traj in trajectories
        .iter()
        .filter(|t| t.termination == spec.orientation.termination())
    {
        let last = traj.last();
        let coord = match spec.orientation {
            ScreenOrientation::Forward => last.x,
            ScreenOrientation::Sideways => last.y,
        };
        rec.arrivals.push(Arrival {
            coord,
            slit: traj.source_slit,
            x0: traj.x0,
            t: last.t,
            x: last.x,
            y: last.y,
        });
        match spec.grid.index(coord) {
            Some(i) => {
                rec.counts_total[i] += 1;
                match traj.source_slit {
                    Slit::Slit1 => rec.counts_slit1[i] += 1,
                    Slit::Slit2 => rec.counts_slit2[i] += 1,
                }
            }
            None => rec.out_of_range += 1,
        }
    }
    rec
}

/// Per-slit fate of every launched trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SlitTally {
    pub launched: usize,
    pub forward: usize,
    pub sideways: usize,
    pub max_time: usize,
    pub node_stall: usize,
}

impl SlitTally {
    pub fn other(&self) -> usize {
        self.max_time + self.node_stall
    }

    /// `launched = forward + sideways + other`
    pub fn balanced(&self) -> bool {
        self.launched == self.forward + self.sideways + self.other()
    }
}

pub fn bookkeeping(trajectories: &[Trajectory]) -> [SlitTally; 2] {
    let mut out = [SlitTally::default(); 2];
    for traj in trajectories {
        let tally = &mut out[traj.source_slit.index()];
        tally.launched += 1;
        match traj.termination {
            Termination::ReachedForwardScreen => tally.forward += 1,
            Termination::ReachedSidewaysScreen => tally.sideways += 1,
            Termination::MaxTime => tally.max_time += 1,
            Termination::NodeStall => tally.node_stall += 1,
        }
    }
    out
}

/// Screen intensity, normalized to unit area on its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub xs: Vec<f64>,
    pub intensity: Vec<f64>,
    /// trapezoid area before normalization
    pub raw_area: f64,
    /// smallest fraction of a single channel's mass inside the grid
    pub captured_mass: f64,
    pub warning: Option<String>,
}

pub const MIN_CAPTURED_MASS: f64 = 0.999;

fn check_grid(xs: &[f64]) -> Result<(), ScreenError> {
    if xs.len() < 2 || xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ScreenError::BadGrid);
    }
    Ok(())
}

/// Unnormalized screen intensity for open packets `packets` under `mode`.
///
/// Stochastic: `|psi1 + sqrt(a) psi2|^2`. Deterministic: the time-averaged
/// mixture of the slit-1-only density and the open double-slit density.
pub fn screen_intensity(
    packets: &[PacketParams; 2],
    mode: AttenuationMode,
    coherence: CoherenceMode,
    x: f64,
    t: f64,
) -> Result<f64, PacketError> {
    let a = mode.transmission();
    match mode {
        AttenuationMode::None | AttenuationMode::Stochastic(_) => {
            let p2 = apply_stochastic(packets[1], a);
            let d = channel_densities(&packets[0].sample(x, t)?, &p2.sample(x, t)?, coherence);
            Ok(d.ptot)
        }
        AttenuationMode::Deterministic(_) => {
            let (s1, s2) = (packets[0].sample(x, t)?, packets[1].sample(x, t)?);
            let open = channel_densities(&s1, &s2, coherence);
            let single = (2.0 * s1.log_r).exp();
            Ok(deterministic_intensity(single, open.p1, open.p2, a))
        }
    }
}

pub fn analytic_profile(
    packets: &[PacketParams; 2],
    mode: AttenuationMode,
    coherence: CoherenceMode,
    t: f64,
    xs: &[f64],
) -> Result<Profile, ScreenError> {
    check_grid(xs)?;
    let raw = xs
        .iter()
        .map(|&x| screen_intensity(packets, mode, coherence, x, t))
        .collect::<Result<Vec<_>, _>>()?;
    let raw_area = trapezoid(xs, &raw);
    let captured_mass = captured_mass(packets, t, xs[0], xs[xs.len() - 1])?;
    let warning = (captured_mass < MIN_CAPTURED_MASS)
        .then(|| format!("profile grid captures only {captured_mass:.6} of a channel's mass"));
    let intensity = if raw_area > 0.0 {
        raw.iter().map(|v| v / raw_area).collect()
    } else {
        raw
    };
    Ok(Profile {
        xs: xs.to_vec(),
        intensity,
        raw_area,
        captured_mass,
        warning,
    })
}

fn captured_mass(
    packets: &[PacketParams; 2],
    t: f64,
    lo: f64,
    hi: f64,
) -> Result<f64, PacketError> {
    let mut worst: f64 = 1.0;
    for p in packets {
        let normal = Normal::new(p.center_at(t), p.sigma_at(t)?).expect("positive width");
        worst = worst.min(normal.cdf(hi) - normal.cdf(lo));
    }
    Ok(worst)
}

/// Contrast recovered by stepping a phase shifter in arm 2.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityMeasurement {
    pub value: f64,
    /// pixels whose open-slit envelopes agree to within the tolerance
    pub pixels: usize,
    pub window: (f64, f64),
}

/// Envelope ratio tolerance for the measurement window.
pub const ENVELOPE_TOLERANCE: f64 = 0.1;

/// Fringe visibility measured from phase-stepped screen profiles.
///
/// For each of `steps` shifter settings `chi_k = 2 pi k / steps` on arm 2 the
/// screen intensity is recorded; the first harmonic of `I(chi)` at a pixel
/// gives `(I_max - I_min) / (I_max + I_min)` there. The result is the mean
/// over pixels where the two open-slit envelopes agree within
/// [`ENVELOPE_TOLERANCE`]; if none do, the pixel closest to envelope balance
/// is used.
pub fn phase_stepped_visibility(
    packets: &[PacketParams; 2],
    mode: AttenuationMode,
    coherence: CoherenceMode,
    t: f64,
    xs: &[f64],
    steps: usize,
) -> Result<VisibilityMeasurement, ScreenError> {
    check_grid(xs)?;
    let steps = steps.max(3);
    let mut window = Vec::new();
    let mut best = (f64::INFINITY, xs[0]);
    for &x in xs {
        let (s1, s2) = (packets[0].sample(x, t)?, packets[1].sample(x, t)?);
        // |ln(R1^2 / R2^2)|
        let imbalance = (2.0 * (s1.log_r - s2.log_r)).abs();
        if imbalance <= (1.0 + ENVELOPE_TOLERANCE).ln() {
            window.push(x);
        }
        if imbalance < best.0 {
            best = (imbalance, x);
        }
    }
    if window.is_empty() {
        window.push(best.1);
    }

    let shifted: Vec<[PacketParams; 2]> = (0..steps)
        .map(|k| {
            let chi = 2.0 * PI * k as f64 / steps as f64;
            let p2 = packets[1]
                .with_phase_offset(packets[1].phase_offset() + chi)
                .expect("finite phase");
            [packets[0], p2]
        })
        .collect();
    let mut total = 0.0;
    for &x in &window {
        let mut harmonic = Complex64::new(0.0, 0.0);
        let mut mean = 0.0;
        for (k, pk) in shifted.iter().enumerate() {
            let i = screen_intensity(pk, mode, coherence, x, t)?;
            let chi = 2.0 * PI * k as f64 / steps as f64;
            harmonic += i * Complex64::from_polar(1.0, -chi);
            mean += i;
        }
        total += if mean > 0.0 {
            2.0 * harmonic.norm() / mean
        } else {
            0.0
        };
    }
    Ok(VisibilityMeasurement {
        value: total / window.len() as f64,
        pixels: window.len(),
        window: (window[0], window[window.len() - 1]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityMetrics {
    pub visibility: f64,
    pub distinguishability: f64,
    /// `|D^2 + V^2 - 1|`
    pub residual: f64,
}

/// Which-path complementarity at the equal-envelope point, `R2^2 = a R1^2`.
pub fn duality_metrics(a: TransmissionFactor) -> DualityMetrics {
    let v = theoretical_visibility(a, AttenuationKind::Stochastic).value;
    let d = distinguishability(a);
    DualityMetrics {
        visibility: v,
        distinguishability: d,
        residual: (d * d + v * v - 1.0).abs(),
    }
}

/// Summary of how the attenuated beam lands on the sideways screen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweeperMetrics {
    /// slit-2 trajectories registered sideways
    pub n_a: usize,
    pub launched: usize,
    pub sideways_fraction: f64,
    /// slit-2 trajectories registered on the forward screen
    pub forward: usize,
    pub median_angle_rad: Option<f64>,
    /// interquartile width of slit-2 arrival heights `y`
    pub iqr_y: Option<f64>,
    /// arrival-angle IQR over the IQR of the undeflected fan
    pub bunching_ratio: Option<f64>,
    /// no slit-2 arrivals; the optional fields are all `None`
    pub empty: bool,
}

/// Sweeper metrics from slit-2 trajectories.
///
/// The undeflected fan assigns each sideways arrival the angle its launch
/// quantile would have on the free single-slit packet at the same time,
/// `atan((c + z sigma_t) / (v_y t))` with `z = (x0 - c) / sigma0`. A ratio
/// below one means the arrivals are bunched compared with free spreading.
pub fn sweeper_metrics(
    trajectories: &[Trajectory],
    attenuated: &PacketParams,
    forward_speed: f64,
) -> Result<SweeperMetrics, PacketError> {
    let tally = bookkeeping(trajectories)[Slit::Slit2.index()];
    let arrivals: Vec<&Trajectory> = trajectories
        .iter()
        .filter(|t| {
            t.source_slit == Slit::Slit2 && t.termination == Termination::ReachedSidewaysScreen
        })
        .collect();
    let sideways_fraction = if tally.launched == 0 {
        0.0
    } else {
        arrivals.len() as f64 / tally.launched as f64
    };
    let mut out = SweeperMetrics {
        n_a: arrivals.len(),
        launched: tally.launched,
        sideways_fraction,
        forward: tally.forward,
        median_angle_rad: None,
        iqr_y: None,
        bunching_ratio: None,
        empty: arrivals.is_empty(),
    };
    if arrivals.is_empty() {
        return Ok(out);
    }
    let angles: Vec<f64> = arrivals.iter().map(|t| t.deflection_angle()).collect();
    let ys: Vec<f64> = arrivals.iter().map(|t| t.last().y).collect();
    let mut free = Vec::with_capacity(arrivals.len());
    for traj in &arrivals {
        let t = traj.last().t;
        let z = (traj.x0 - attenuated.center_x()) / attenuated.sigma0();
        let x = attenuated.center_at(t) + z * attenuated.sigma_at(t)?;
        free.push(x.atan2(forward_speed * t));
    }
    out.median_angle_rad = median(&angles);
    out.iqr_y = iqr(&ys);
    out.bunching_ratio = match (iqr(&angles), iqr(&free)) {
        (Some(a), Some(f)) if f > 0.0 => Some(a / f),
        _ => None,
    };
    Ok(out)
}

/// Local maxima whose prominence clears the counting-noise floor
/// `2 sqrt(height)` and that hold at least `min_height` counts. A maximum in
/// an edge bin counts too, measured against its interior side only, so a
/// monotone histogram has one mode.
pub fn count_prominent_peaks(counts: &[u64], min_height: u64) -> usize {
    let n = counts.len();
    let h: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let mut peaks = 0;
    let mut i = 0;
    while i < n {
        // treat a plateau as one candidate
        let mut j = i;
        while j + 1 < n && h[j + 1] == h[i] {
            j += 1;
        }
        let left_lower = i == 0 || h[i - 1] < h[i];
        let right_lower = j + 1 == n || h[j + 1] < h[i];
        if left_lower && right_lower && counts[i] >= min_height && counts[i] > 0 {
            // lowest point on each side before a higher sample or the edge
            let base_left = h[..i]
                .iter()
                .rev()
                .take_while(|&&v| v <= h[i])
                .fold(h[i], |m, &v| m.min(v));
            let base_right = h[j + 1..]
                .iter()
                .take_while(|&&v| v <= h[i])
                .fold(h[i], |m, &v| m.min(v));
            let base = match (i == 0, j + 1 == n) {
                (true, true) => 0.0,
                (true, false) => base_right,
                (false, true) => base_left,
                (false, false) => base_left.max(base_right),
            };
            let prominence = h[i] - base;
            if prominence > 2.0 * h[i].sqrt() {
                peaks += 1;
            }
        }
        i = j + 1;
    }
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::linspace;
    use crate::trajectories::TrajectoryPoint;

    fn open_pair(sep: f64) -> [PacketParams; 2] {
        [
            PacketParams::new(-0.5 * sep, 1.0).unwrap(),
            PacketParams::new(0.5 * sep, 1.0).unwrap(),
        ]
    }

    fn tf(a: f64) -> TransmissionFactor {
        TransmissionFactor::new(a).unwrap()
    }

    fn ended(slit: Slit, x0: f64, t: f64, x: f64, termination: Termination) -> Trajectory {
        Trajectory {
            id: 0,
            source_slit: slit,
            x0,
            points: vec![
                TrajectoryPoint {
                    t: 0.0,
                    x: x0,
                    y: 0.0,
                    v: None,
                },
                TrajectoryPoint {
                    t,
                    x,
                    y: 10.0 * t,
                    v: None,
                },
            ],
            termination,
        }
    }

    #[test]
    fn bins_validate_and_index() {
        assert!(BinGrid::new(1.0, 1.0, 4).is_err());
        assert!(BinGrid::new(0.0, 1.0, 0).is_err());
        let g = BinGrid::new(0.0, 4.0, 4).unwrap();
        assert_eq!(g.centers(), vec![0.5, 1.5, 2.5, 3.5]);
        assert_eq!(g.index(0.0), Some(0));
        assert_eq!(g.index(4.0), Some(3));
        assert_eq!(g.index(2.0), Some(2));
        assert_eq!(g.index(-1e-12), None);
        let c = BinGrid::covering(&[], 3).unwrap();
        assert_eq!(c.range(), (-0.5, 0.5));
    }

    #[test]
    fn record_tracks_provenance() {
        let spec = ScreenSpec {
            orientation: ScreenOrientation::Forward,
            grid: BinGrid::new(-10.0, 10.0, 10).unwrap(),
        };
        assert!(record(&[], &spec).arrivals.is_empty());
        let trajs = vec![
            ended(
                Slit::Slit1,
                -1.0,
                2.0,
                -3.0,
                Termination::ReachedForwardScreen,
            ),
            ended(
                Slit::Slit1,
                -0.5,
                2.0,
                -2.5,
                Termination::ReachedForwardScreen,
            ),
            ended(
                Slit::Slit2,
                1.0,
                2.0,
                15.0,
                Termination::ReachedForwardScreen,
            ),
            ended(
                Slit::Slit2,
                0.5,
                1.0,
                4.0,
                Termination::ReachedSidewaysScreen,
            ),
            ended(Slit::Slit2, 0.7, 1.0, 1.0, Termination::NodeStall),
        ];
        let rec = record(&trajs, &spec);
        assert_eq!(rec.arrivals.len(), 3);
        assert_eq!(rec.out_of_range, 1);
        assert_eq!(rec.counts_slit1.iter().sum::<u64>(), 2);
        assert_eq!(rec.counts_slit2.iter().sum::<u64>(), 0);
        for i in 0..rec.grid.len() {
            assert_eq!(
                rec.counts_total[i],
                rec.counts_slit1[i] + rec.counts_slit2[i]
            );
        }
        let side = record(
            &trajs,
            &ScreenSpec {
                orientation: ScreenOrientation::Sideways,
                grid: BinGrid::new(0.0, 20.0, 4).unwrap(),
            },
        );
        assert_eq!(side.arrivals[0].coord, 10.0);
        assert_eq!(side.weighted_counts([1.0, 0.5]), vec![0.0, 0.0, 0.5, 0.0]);

        let tally = bookkeeping(&trajs);
        assert!(tally.iter().all(SlitTally::balanced));
        assert_eq!(
            (tally[1].forward, tally[1].sideways, tally[1].node_stall),
            (1, 1, 1)
        );
    }

    #[test]
    fn profiles_normalize_and_flag_narrow_grids() {
        let packets = open_pair(12.0);
        let xs = linspace(-60.0, 60.0, 6001);
        for mode in [
            AttenuationMode::Stochastic(tf(0.25)),
            AttenuationMode::Deterministic(tf(0.25)),
        ] {
            let p = analytic_profile(&packets, mode, CoherenceMode::Coherent, 6.0, &xs).unwrap();
            assert!((trapezoid(&p.xs, &p.intensity) - 1.0).abs() < 1e-12);
            assert!(p.warning.is_none());
        }
        let narrow = linspace(-3.0, 3.0, 101);
        let p = analytic_profile(
            &packets,
            AttenuationMode::None,
            CoherenceMode::Coherent,
            6.0,
            &narrow,
        )
        .unwrap();
        assert!(p.warning.is_some());
        assert!(analytic_profile(
            &packets,
            AttenuationMode::None,
            CoherenceMode::Coherent,
            1.0,
            &[0.0]
        )
        .is_err());
    }

    #[test]
    fn modes_coincide_at_the_ends() {
        let packets = open_pair(10.0);
        for &x in &[-7.0, -1.0, 0.3, 4.0] {
            let s = screen_intensity(
                &packets,
                AttenuationMode::Stochastic(tf(1.0)),
                CoherenceMode::Coherent,
                x,
                3.0,
            )
            .unwrap();
            let d = screen_intensity(
                &packets,
                AttenuationMode::Deterministic(tf(1.0)),
                CoherenceMode::Coherent,
                x,
                3.0,
            )
            .unwrap();
            assert!((s - d).abs() <= 1e-15 * s);
            let s0 = screen_intensity(
                &packets,
                AttenuationMode::Stochastic(tf(0.0)),
                CoherenceMode::Coherent,
                x,
                3.0,
            )
            .unwrap();
            let d0 = screen_intensity(
                &packets,
                AttenuationMode::Deterministic(tf(0.0)),
                CoherenceMode::Coherent,
                x,
                3.0,
            )
            .unwrap();
            let single = packets[0].sample(x, 3.0).unwrap().r.powi(2);
            assert!((s0 - single).abs() <= 1e-15 * single && (d0 - single).abs() <= 1e-15 * single);
        }
    }

    #[test]
    fn phase_stepping_recovers_contrast() {
        let packets = open_pair(20.0);
        let xs = linspace(-2.0, 2.0, 401);
        for &a in &[0.25, 0.0025] {
            for kind in [AttenuationKind::Stochastic, AttenuationKind::Deterministic] {
                let mode = AttenuationMode::new(kind, a).unwrap();
                let m =
                    phase_stepped_visibility(&packets, mode, CoherenceMode::Coherent, 15.0, &xs, 8)
                        .unwrap();
                let v = theoretical_visibility(tf(a), kind).value;
                assert!(
                    (m.value / v - 1.0).abs() < 1e-2,
                    "a={a} {kind:?}: {} vs {v}",
                    m.value
                );
                assert!(m.pixels > 1);
            }
        }
        let m = phase_stepped_visibility(
            &packets,
            AttenuationMode::None,
            CoherenceMode::Incoherent,
            15.0,
            &xs,
            8,
        )
        .unwrap();
        assert!(m.value < 1e-12);
    }

    #[test]
    fn duality_examples() {
        let m = duality_metrics(tf(1.0));
        assert_eq!((m.distinguishability, m.visibility), (0.0, 1.0));
        let m = duality_metrics(tf(0.25));
        assert!((m.distinguishability - 0.6).abs() < 1e-15 && (m.visibility - 0.8).abs() < 1e-15);
        assert!(m.residual < 1e-15);
        let m = duality_metrics(tf(1e-4));
        assert!((m.distinguishability - 0.9998).abs() < 1e-7);
        assert!((m.visibility - 0.02).abs() < 1e-5);
    }

    #[test]
    fn sweeper_empty_and_filled() {
        let packet = PacketParams::new(5.0, 1.0).unwrap();
        let none = vec![ended(
            Slit::Slit2,
            5.0,
            3.0,
            5.0,
            Termination::ReachedForwardScreen,
        )];
        let m = sweeper_metrics(&none, &packet, 10.0).unwrap();
        assert!(m.empty && m.median_angle_rad.is_none());
        assert_eq!((m.n_a, m.launched, m.forward), (0, 1, 1));

        let trajs: Vec<Trajectory> = (0..8)
            .map(|i| {
                ended(
                    Slit::Slit2,
                    4.0 + 0.25 * i as f64,
                    2.0,
                    30.0,
                    Termination::ReachedSidewaysScreen,
                )
            })
            .collect();
        let m = sweeper_metrics(&trajs, &packet, 10.0).unwrap();
        assert_eq!(m.sideways_fraction, 1.0);
        assert!((m.median_angle_rad.unwrap() - (30.0f64).atan2(20.0)).abs() < 1e-15);
        assert_eq!(m.iqr_y, Some(0.0));
        assert_eq!(m.bunching_ratio, Some(0.0));
    }

    #[test]
    fn peak_counting() {
        assert_eq!(count_prominent_peaks(&[], 1), 0);
        assert_eq!(count_prominent_peaks(&[0, 5, 20, 40, 20, 5, 0], 3), 1);
        assert_eq!(count_prominent_peaks(&[0, 40, 5, 0, 30, 30, 2], 3), 2);
        // a bump of one count on a slope is noise
        assert_eq!(count_prominent_peaks(&[10, 30, 29, 30, 60, 10], 3), 1);
        assert_eq!(count_prominent_peaks(&[1, 0, 1, 0, 1], 3), 0);
        assert_eq!(count_prominent_peaks(&[0, 1, 4, 9, 20, 45], 3), 1);
        assert_eq!(count_prominent_peaks(&[45, 20, 9, 1, 30, 2], 3), 2);
    }
}
