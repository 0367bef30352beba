//! Cross-checks of the assembled field against the reference wavefunction and
//! against local probability conservation.

use serde::Serialize;

use crate::attenuation::{apply_stochastic, TransmissionFactor};
use crate::fields::{CoherenceMode, FlowVelocity, TwoChannelField, DEFAULT_DENSITY_FLOOR};
use crate::oracle;
use crate::packets::{PacketError, PacketParams};
use crate::stats::linspace;

/// `max |P_tot - |psi|^2|` relative to the largest density.
pub const DENSITY_TOLERANCE: f64 = 1e-10;
/// `max |v_tot - v_bohm|` relative to the largest Bohm speed.
pub const VELOCITY_TOLERANCE: f64 = 1e-8;
/// Continuity residual relative to the largest flux gradient of a time slice.
pub const CONTINUITY_TOLERANCE: f64 = 1e-4;

/// Grid-scan points: `points_per_time` positions over
/// `+-(d/2 + half_width_sigmas sigma_t)` at each time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub times: Vec<f64>,
    pub points_per_time: usize,
    pub half_width_sigmas: f64,
}

impl ScanGrid {
    /// Three times `0.1 tau`, `tau` and the screen time with about `10^4`
    /// points overall, each slice spanning ten widths past the slits.
    pub fn standard(spreading_time: f64, screen_time: f64) -> Self {
        Self {
            times: vec![0.1 * spreading_time, spreading_time, screen_time],
            points_per_time: 3334,
            half_width_sigmas: 10.0,
        }
    }

    pub fn positions(&self, packets: &[PacketParams; 2], t: f64) -> Result<Vec<f64>, PacketError> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in packets {
            let reach = self.half_width_sigmas * p.sigma_at(t)?;
            lo = lo.min(p.center_at(t) - reach);
            hi = hi.max(p.center_at(t) + reach);
        }
        Ok(linspace(lo, hi, self.points_per_time))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub a: f64,
    pub points: usize,
    pub max_density_error: f64,
    pub max_density: f64,
    /// `max |P_tot - |psi|^2| / max P_tot`
    pub density_relative: f64,
    pub max_velocity_error: f64,
    pub max_bohm_speed: f64,
    /// `max |v_tot - v_bohm| / max |v_bohm|`
    pub velocity_relative: f64,
    /// points flagged as nodes by either side
    pub nodes: usize,
    /// points flagged as a node by exactly one side
    pub node_disagreements: usize,
}

/// Compares the coherent field with `|psi1 + psi2|^2` and the Bohm velocity
/// for attenuation `a` applied to `open[1]`.
pub fn oracle_equivalence(
    open: &[PacketParams; 2],
    a: TransmissionFactor,
    grid: &ScanGrid,
) -> Result<EquivalenceReport, PacketError> {
    let packets = [open[0], apply_stochastic(open[1], a)];
    let field = TwoChannelField::new(packets, CoherenceMode::Coherent);
    let mut r = EquivalenceReport {
        a: a.value(),
        points: 0,
        max_density_error: 0.0,
        max_density: 0.0,
        density_relative: 0.0,
        max_velocity_error: 0.0,
        max_bohm_speed: 0.0,
        velocity_relative: 0.0,
        nodes: 0,
        node_disagreements: 0,
    };
    for &t in &grid.times {
        for x in grid.positions(&packets, t)? {
            let s = field.sample(x, t)?;
            let psi = oracle::pair(&packets, x, t);
            let born = oracle::born_density(&psi);
            r.points += 1;
            r.max_density = r.max_density.max(s.ptot);
            r.max_density_error = r.max_density_error.max((s.ptot - born).abs());
            match (s.vtot, oracle::bohm_velocity(&psi, DEFAULT_DENSITY_FLOOR)) {
                (FlowVelocity::Regular(v), FlowVelocity::Regular(vb)) => {
                    r.max_bohm_speed = r.max_bohm_speed.max(vb.abs());
                    r.max_velocity_error = r.max_velocity_error.max((v - vb).abs());
                }
                (FlowVelocity::Node, FlowVelocity::Node) => r.nodes += 1,
                _ => {
                    r.nodes += 1;
                    r.node_disagreements += 1;
                }
            }
        }
    }
    r.density_relative = r.max_density_error / r.max_density;
    r.velocity_relative = r.max_velocity_error / r.max_bohm_speed;
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub a: f64,
    pub mode: CoherenceMode,
    /// worst over time slices of `max |dP/dt + dJ/dx| / max |dJ/dx|`
    pub relative_residual: f64,
    pub worst_time: f64,
    pub points: usize,
}

/// Central-difference residual of `dP/dt + dJ/dx` for the field with
/// attenuation `a` on arm 2, steps `dt` and `dx`, scaled per time slice by
/// the largest flux gradient in that slice.
pub fn continuity_residual(
    open: &[PacketParams; 2],
    a: TransmissionFactor,
    mode: CoherenceMode,
    grid: &ScanGrid,
    dt: f64,
    dx: f64,
) -> Result<ContinuityReport, PacketError> {
    let packets = [open[0], apply_stochastic(open[1], a)];
    let field = TwoChannelField::new(packets, mode);
    let mut report = ContinuityReport {
        a: a.value(),
        mode,
        relative_residual: 0.0,
        worst_time: f64::NAN,
        points: 0,
    };
    for &t in &grid.times {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for x in grid.positions(&packets, t)? {
            let dp = (field.sample(x, t + dt)?.ptot - field.sample(x, t - dt)?.ptot) / (2.0 * dt);
            let dj = (field.sample(x + dx, t)?.jtot - field.sample(x - dx, t)?.jtot) / (2.0 * dx);
            worst = worst.max((dp + dj).abs());
            scale = scale.max(dj.abs());
            report.points += 1;
        }
        let ratio = if scale > 0.0 { worst / scale } else { 0.0 };
        if !(ratio <= report.relative_residual) {
            report.relative_residual = ratio;
            report.worst_time = t;
        }
    }
    Ok(report)
}
