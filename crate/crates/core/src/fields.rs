//! Two-channel assembly: projections, channel densities, total current and
//! the guidance velocity `v_tot = J_tot / P_tot`.
//!
//! Every product of amplitudes is formed in the log domain. The two samples
//! are rescaled by the larger amplitude before any product is taken, so a
//! weak channel at `a = 1e-10` deep in a tail never underflows in the
//! velocity; only the absolute densities can underflow, and that is flagged.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::packets::{PacketError, PacketParams, PacketSample};

/// Default density floor below which the velocity is reported as a node.
pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoherenceMode {
    Coherent,
    /// Fixed relative phase `pi/2`: `cos = 0`, `sin = 1`.
    Incoherent,
}

impl CoherenceMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CoherenceMode::Coherent => "coherent",
            CoherenceMode::Incoherent => "incoherent",
        }
    }
}

/// The six projected intensities, one per velocity component.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Projections {
    pub v1: f64,
    pub u1_right: f64,
    pub u1_left: f64,
    pub v2: f64,
    pub u2_right: f64,
    pub u2_left: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Densities {
    pub p1: f64,
    pub p2: f64,
    pub ptot: f64,
    /// set when `ptot` fell below the smallest normal double and was zeroed
    pub underflow: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowVelocity {
    Regular(f64),
    /// density below the floor; the ratio `J/P` is not evaluated
    Node,
}

impl FlowVelocity {
    pub fn value(&self) -> Option<f64> {
        match *self {
            FlowVelocity::Regular(v) => Some(v),
            FlowVelocity::Node => None,
        }
    }

    pub fn is_node(&self) -> bool {
        matches!(self, FlowVelocity::Node)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub x: f64,
    pub t: f64,
    pub p1: f64,
    pub p2: f64,
    pub ptot: f64,
    pub jtot: f64,
    pub vtot: FlowVelocity,
    pub phi: f64,
    /// `ln P_tot`, finite even where `ptot` underflowed
    pub log_ptot: f64,
    pub underflow: bool,
    pub projections: Projections,
}

fn wrap_angle(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Relative phase between the channels at a common point.
///
/// Coherent channels use `S2 - S1`; with that orientation the `sin` term of
/// the current reproduces `Im(psi* d psi)` of the superposed wave.
pub fn phase_difference(s1: &PacketSample, s2: &PacketSample, mode: CoherenceMode) -> f64 {
    match mode {
        CoherenceMode::Coherent => wrap_angle(s2.phase - s1.phase),
        CoherenceMode::Incoherent => FRAC_PI_2,
    }
}

fn trig(s1: &PacketSample, s2: &PacketSample, mode: CoherenceMode) -> (f64, f64) {
    match mode {
        CoherenceMode::Coherent => {
            let (s, c) = phase_difference(s1, s2, mode).sin_cos();
            (c, s)
        }
        CoherenceMode::Incoherent => (0.0, 1.0),
    }
}

/// Amplitudes rescaled by the larger of the two.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    r1: f64,
    r2: f64,
    log_scale: f64,
}

impl Scaled {
    fn new(s1: &PacketSample, s2: &PacketSample) -> Option<Self> {
        let log_scale = s1.log_r.max(s2.log_r);
        if log_scale == f64::NEG_INFINITY {
            return None;
        }
        Some(Self {
            r1: (s1.log_r - log_scale).exp(),
            r2: (s2.log_r - log_scale).exp(),
            log_scale,
        })
    }

    /// `exp(2 log_scale)`, the factor restoring absolute densities.
    fn density_factor(&self) -> f64 {
        (2.0 * self.log_scale).exp()
    }

    fn densities(&self, cos: f64) -> (f64, f64) {
        let cross = self.r1 * self.r2 * cos;
        (self.r1 * self.r1 + cross, self.r2 * self.r2 + cross)
    }

    fn current(&self, s1: &PacketSample, s2: &PacketSample, cos: f64, sin: f64) -> f64 {
        let cross = self.r1 * self.r2;
        self.r1 * self.r1 * s1.v
            + self.r2 * self.r2 * s2.v
            + cross * (s1.v + s2.v) * cos
            + cross * (s1.u - s2.u) * sin
    }
}

pub fn channel_projections(
    s1: &PacketSample,
    s2: &PacketSample,
    mode: CoherenceMode,
) -> Projections {
    let (cos, sin) = trig(s1, s2, mode);
    let r1_sq = (2.0 * s1.log_r).exp();
    let r2_sq = (2.0 * s2.log_r).exp();
    let cross = (s1.log_r + s2.log_r).exp();
    Projections {
        v1: r1_sq + cross * cos,
        u1_right: cross * sin,
        u1_left: -cross * sin,
        v2: r2_sq + cross * cos,
        u2_right: -cross * sin,
        u2_left: cross * sin,
    }
}

pub fn channel_densities(s1: &PacketSample, s2: &PacketSample, mode: CoherenceMode) -> Densities {
    let Some(scaled) = Scaled::new(s1, s2) else {
        return Densities {
            p1: 0.0,
            p2: 0.0,
            ptot: 0.0,
            underflow: false,
        };
    };
    let (p1, p2, p1s, p2s) = match mode {
        // no cross term: each density is its own squared amplitude
        CoherenceMode::Incoherent => (
            (2.0 * s1.log_r).exp(),
            (2.0 * s2.log_r).exp(),
            scaled.r1 * scaled.r1,
            scaled.r2 * scaled.r2,
        ),
        CoherenceMode::Coherent => {
            let (cos, _) = trig(s1, s2, mode);
            let (p1s, p2s) = scaled.densities(cos);
            let factor = scaled.density_factor();
            (p1s * factor, p2s * factor, p1s, p2s)
        }
    };
    let ptot = p1 + p2;
    if p1s + p2s > 0.0 && ptot.abs() < f64::MIN_POSITIVE {
        return Densities {
            p1: 0.0,
            p2: 0.0,
            ptot: 0.0,
            underflow: true,
        };
    }
    Densities {
        p1,
        p2,
        ptot,
        underflow: false,
    }
}

/// x-component of the total current
/// `R1^2 v1 + R2^2 v2 + R1 R2 (v1 + v2) cos + R1 R2 (u1 - u2) sin`.
pub fn total_current(s1: &PacketSample, s2: &PacketSample, mode: CoherenceMode) -> f64 {
    match Scaled::new(s1, s2) {
        Some(scaled) => {
            let (cos, sin) = trig(s1, s2, mode);
            scaled.current(s1, s2, cos, sin) * scaled.density_factor()
        }
        None => 0.0,
    }
}

/// Guidance velocity `J_tot / P_tot`, or [`FlowVelocity::Node`] below `floor`.
pub fn total_velocity(
    s1: &PacketSample,
    s2: &PacketSample,
    mode: CoherenceMode,
    floor: f64,
) -> FlowVelocity {
    let Some(scaled) = Scaled::new(s1, s2) else {
        return FlowVelocity::Node;
    };
    let (cos, sin) = trig(s1, s2, mode);
    let (p1s, p2s) = scaled.densities(cos);
    let ps = p1s + p2s;
    if !(ps > 0.0) {
        return FlowVelocity::Node;
    }
    let log_ptot = ps.ln() + 2.0 * scaled.log_scale;
    if log_ptot < floor.ln() {
        return FlowVelocity::Node;
    }
    FlowVelocity::Regular(scaled.current(s1, s2, cos, sin) / ps)
}

/// Both channels plus coherence mode: the velocity field the trajectories follow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoChannelField {
    pub packets: [PacketParams; 2],
    pub mode: CoherenceMode,
    pub density_floor: f64,
}

impl TwoChannelField {
    pub fn new(packets: [PacketParams; 2], mode: CoherenceMode) -> Self {
        Self {
            packets,
            mode,
            density_floor: DEFAULT_DENSITY_FLOOR,
        }
    }

    pub fn with_density_floor(self, density_floor: f64) -> Self {
        Self {
            density_floor,
            ..self
        }
    }

    pub fn samples(&self, x: f64, t: f64) -> Result<(PacketSample, PacketSample), PacketError> {
        Ok((self.packets[0].sample(x, t)?, self.packets[1].sample(x, t)?))
    }

    pub fn velocity(&self, x: f64, t: f64) -> Result<FlowVelocity, PacketError> {
        let (s1, s2) = self.samples(x, t)?;
        Ok(total_velocity(&s1, &s2, self.mode, self.density_floor))
    }

    pub fn sample(&self, x: f64, t: f64) -> Result<FieldSample, PacketError> {
        let (s1, s2) = self.samples(x, t)?;
        let densities = channel_densities(&s1, &s2, self.mode);
        let log_ptot = match Scaled::new(&s1, &s2) {
            Some(scaled) => {
                let (cos, _) = trig(&s1, &s2, self.mode);
                let (p1s, p2s) = scaled.densities(cos);
                (p1s + p2s).ln() + 2.0 * scaled.log_scale
            }
            None => f64::NEG_INFINITY,
        };
        Ok(FieldSample {
            x,
            t,
            p1: densities.p1,
            p2: densities.p2,
            ptot: densities.ptot,
            jtot: total_current(&s1, &s2, self.mode),
            vtot: total_velocity(&s1, &s2, self.mode, self.density_floor),
            phi: phase_difference(&s1, &s2, self.mode),
            log_ptot,
            underflow: densities.underflow,
            projections: channel_projections(&s1, &s2, self.mode),
        })
    }

    /// Point on the axis where the diffusive velocities cancel, `u1 + u2 = 0`.
    pub fn no_crossing_locus(&self, t: f64) -> Result<f64, PacketError> {
        let [a, b] = &self.packets;
        let (va, vb) = (a.sigma_at(t)?.powi(2), b.sigma_at(t)?.powi(2));
        Ok((a.center_at(t) * vb + b.center_at(t) * va) / (va + vb))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn symmetric(weight2: f64, mode: CoherenceMode) -> TwoChannelField {
        let p1 = PacketParams::new(-4.0, 1.0).unwrap();
        let p2 = PacketParams::new(4.0, 1.0)
            .unwrap()
            .with_weight(weight2)
            .unwrap();
        TwoChannelField::new([p1, p2], mode)
    }

    fn sample_with(r: f64, phase: f64, v: f64, u: f64) -> PacketSample {
        PacketSample {
            r,
            log_r: r.ln(),
            phase,
            v,
            u,
            center: 0.0,
            sigma: 1.0,
        }
    }

    #[test]
    fn phase_difference_cases() {
        let a = sample_with(0.5, 1.3, 0.0, 0.0);
        let b = sample_with(0.2, 1.3, 0.0, 0.0);
        assert_eq!(phase_difference(&a, &b, CoherenceMode::Coherent), 0.0);
        assert_eq!(
            phase_difference(&a, &b, CoherenceMode::Incoherent),
            FRAC_PI_2
        );
        let f = symmetric(1.0, CoherenceMode::Coherent);
        for &t in &[0.0, 0.7, 5.0] {
            let s = f.sample(0.0, t).unwrap();
            assert!(s.phi.abs() < 1e-14);
        }
    }

    #[test]
    fn projections_single_slit_and_quadrature() {
        let a = sample_with(0.5, 0.0, 0.1, 0.2);
        let zero = PacketSample {
            r: 0.0,
            log_r: f64::NEG_INFINITY,
            ..a
        };
        let p = channel_projections(&a, &zero, CoherenceMode::Coherent);
        assert!((p.v1 - 0.25).abs() < 1e-15);
        assert_eq!((p.u1_right, p.v2, p.u2_left), (0.0, 0.0, 0.0));

        let b = sample_with(0.5, 0.0, -0.1, -0.2);
        let p = channel_projections(&a, &b, CoherenceMode::Coherent);
        assert!((p.v1 - 0.5).abs() < 1e-15 && (p.v2 - 0.5).abs() < 1e-15);

        let c = sample_with(0.3, 0.0, -0.1, -0.2);
        let p = channel_projections(&a, &c, CoherenceMode::Incoherent);
        assert!((p.v1 - 0.25).abs() < 1e-15);
        assert!((p.u1_right - 0.15).abs() < 1e-15);
        assert_eq!(p.u1_right, -p.u1_left);
        assert_eq!(p.u2_right, -p.u2_left);
    }

    #[test]
    fn densities_constructive_destructive_incoherent() {
        let a = sample_with(0.4, 0.0, 0.0, 0.0);
        let d = channel_densities(&a, &a, CoherenceMode::Coherent);
        assert!((d.ptot - 4.0 * 0.16).abs() < 1e-15);
        let b = sample_with(0.4, PI, 0.0, 0.0);
        let d = channel_densities(&a, &b, CoherenceMode::Coherent);
        assert!(d.ptot.abs() < 1e-16);
        let c = sample_with(0.1, 0.3, 0.0, 0.0);
        let d = channel_densities(&a, &c, CoherenceMode::Incoherent);
        assert_eq!(
            d.ptot,
            0.4f64.ln().mul_add(2.0, 0.0).exp() + 0.1f64.ln().mul_add(2.0, 0.0).exp()
        );
    }

    #[test]
    fn density_underflow_is_flagged() {
        let a = PacketSample {
            r: 0.0,
            log_r: -400.0,
            phase: 0.0,
            v: 1.0,
            u: 0.0,
            center: 0.0,
            sigma: 1.0,
        };
        let d = channel_densities(&a, &a, CoherenceMode::Coherent);
        assert!(d.underflow);
        assert_eq!(d.ptot, 0.0);
        // the ratio survives in the scaled representation
        assert_eq!(
            total_velocity(&a, &a, CoherenceMode::Coherent, 0.0),
            FlowVelocity::Regular(1.0)
        );
        assert_eq!(
            total_velocity(&a, &a, CoherenceMode::Coherent, DEFAULT_DENSITY_FLOOR),
            FlowVelocity::Node
        );
    }

    #[test]
    fn single_channel_current_and_velocity() {
        let f = symmetric(0.0, CoherenceMode::Coherent);
        for &x in &[-7.0, -4.0, 0.0, 3.0] {
            let (s1, s2) = f.samples(x, 1.3).unwrap();
            let j = total_current(&s1, &s2, CoherenceMode::Coherent);
            assert!((j - s1.r * s1.r * s1.v).abs() <= 1e-15 * j.abs().max(1e-300));
            assert_eq!(f.velocity(x, 1.3).unwrap().value(), Some(s1.v));
        }
    }

    #[test]
    fn symmetric_axis_has_no_current() {
        let f = symmetric(1.0, CoherenceMode::Coherent);
        for &t in &[0.1, 1.0, 8.0] {
            let s = f.sample(0.0, t).unwrap();
            assert!(s.jtot.abs() < 1e-15 * s.ptot);
            assert!(s.vtot.value().unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn incoherent_diffusive_term() {
        let f = symmetric(1.0, CoherenceMode::Incoherent);
        let (s1, s2) = f.samples(1.7, 2.0).unwrap();
        let j = total_current(&s1, &s2, CoherenceMode::Incoherent);
        let convective = s1.r * s1.r * s1.v + s2.r * s2.r * s2.v;
        // (R1 dR2/dx - R2 dR1/dx) with dR/dx = -u R
        let diffusive = s1.r * (-s2.u * s2.r) - s2.r * (-s1.u * s1.r);
        assert!((j - convective - diffusive).abs() < 1e-14 * j.abs());

        // equal amplitudes and gradients: the diffusive part vanishes
        let a = sample_with(0.3, 0.0, 0.2, 0.1);
        let j = total_current(&a, &a, CoherenceMode::Incoherent);
        assert!((j - 2.0 * 0.09 * 0.2).abs() < 1e-15);
    }

    #[test]
    fn locus_is_midpoint_for_equal_widths() {
        let p1 = PacketParams::new(0.0, 1.0).unwrap();
        for &w in &[1.0, 1e-5] {
            let p2 = PacketParams::new(9.0, 1.0).unwrap().with_weight(w).unwrap();
            let f = TwoChannelField::new([p1, p2], CoherenceMode::Coherent);
            assert!((f.no_crossing_locus(3.0).unwrap() - 4.5).abs() < 1e-14);
        }
        let drift = [
            PacketParams::new(-2.0, 1.0)
                .unwrap()
                .with_group_velocity(0.5)
                .unwrap(),
            PacketParams::new(2.0, 1.0)
                .unwrap()
                .with_group_velocity(0.5)
                .unwrap(),
        ];
        let f = TwoChannelField::new(drift, CoherenceMode::Coherent);
        assert!((f.no_crossing_locus(4.0).unwrap() - 2.0).abs() < 1e-14);
        // unequal widths: u1 + u2 = 0 at the returned point
        let uneq = [
            PacketParams::new(-2.0, 1.0).unwrap(),
            PacketParams::new(3.0, 2.0).unwrap(),
        ];
        let f = TwoChannelField::new(uneq, CoherenceMode::Coherent);
        let x = f.no_crossing_locus(1.5).unwrap();
        let (s1, s2) = f.samples(x, 1.5).unwrap();
        assert!((s1.u + s2.u).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn assembled_quantities_are_consistent(
            x in -20.0f64..20.0,
            t in 0.0f64..20.0,
            log_a in -23.0f64..0.0,
            coherent in any::<bool>(),
        ) {
            let mode = if coherent { CoherenceMode::Coherent } else { CoherenceMode::Incoherent };
            let f = symmetric(log_a.exp().sqrt(), mode);
            let s = f.sample(x, t).unwrap();
            prop_assert_eq!(s.ptot, s.p1 + s.p2);
            let p = s.projections;
            // log-domain and direct routes differ by exp-argument rounding, ~|ln P| ulp
            let ulps = 8.0 + 4.0 * s.log_ptot.abs();
            prop_assert!((p.v1 + p.v2 - s.ptot).abs() <= ulps * f64::EPSILON * (p.v1.abs() + p.v2.abs()));
            prop_assert!(s.ptot >= -1e-15 * (p.v1.abs() + p.v2.abs()));
            // current assembled from projections
            let (s1, s2) = f.samples(x, t).unwrap();
            let from_proj = s1.v * p.v1 + s1.u * p.u1_right + s2.v * p.v2 + s2.u * p.u2_right;
            prop_assert!((from_proj - s.jtot).abs() <= 1e-12 * (s1.v.abs() + s2.v.abs() + s1.u.abs() + s2.u.abs()) * (p.v1.abs() + p.v2.abs() + p.u1_right.abs()));
            if !coherent {
                let expect = (2.0 * s1.log_r).exp() + (2.0 * s2.log_r).exp();
                prop_assert_eq!(s.ptot, expect);
            }
        }

        #[test]
        fn current_is_antisymmetric(x in 0.0f64..15.0, t in 0.0f64..20.0) {
            let f = symmetric(1.0, CoherenceMode::Coherent);
            let (a, b) = (f.sample(x, t).unwrap(), f.sample(-x, t).unwrap());
            let scale = a.jtot.abs().max(1e-300);
            prop_assert!((a.jtot + b.jtot).abs() <= 1e-12 * scale.max(a.ptot * 1e-3));
        }
    }
}
