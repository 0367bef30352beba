//! Averaged trajectories `dx/dt = v_tot(x, t)` through the two-channel field.
//!
//! Integration uses the embedded Runge-Kutta-Fehlberg 4(5) pair, advancing
//! the fourth-order solution. Steps whose stages land in a density node are
//! rejected and halved; a trajectory that cannot leave a node stops with
//! [`Termination::NodeStall`] instead of extrapolating through `0/0`.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::fields::{FlowVelocity, TwoChannelField, DEFAULT_DENSITY_FLOOR};
use crate::packets::{PacketError, PacketParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("launch position must be finite, got {0}")]
    NonFiniteLaunch(f64),
    #[error("invalid integrator setting: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Field(#[from] PacketError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Slit {
    Slit1,
    Slit2,
}

impl Slit {
    pub const BOTH: [Slit; 2] = [Slit::Slit1, Slit::Slit2];

    pub fn index(self) -> usize {
        match self {
            Slit::Slit1 => 0,
            Slit::Slit2 => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

impl fmt::Display for Slit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Launch {
    pub slit: Slit,
    pub x0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LaunchSampler {
    /// Equal-mass quantiles `i / (n + 1)` of each slit's initial density.
    Quantile,
    /// Independent normal draws from a ChaCha8 stream.
    Random { seed: u64 },
}

/// Launch positions at `t = 0`, `n_per_slit` for each slit, sorted by slit
/// then by position.
pub fn launch_positions(
    packets: &[PacketParams; 2],
    n_per_slit: usize,
    sampler: LaunchSampler,
) -> Vec<Launch> {
    let standard = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = match sampler {
        LaunchSampler::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        LaunchSampler::Quantile => None,
    };
    let mut out = Vec::with_capacity(2 * n_per_slit);
    for slit in Slit::BOTH {
        let p = &packets[slit.index()];
        let mut xs: Vec<f64> = match rng.as_mut() {
            None => (1..=n_per_slit)
                .map(|i| {
                    let q = i as f64 / (n_per_slit + 1) as f64;
                    // inverse_cdf(0.5) is not exactly zero
                    let z = if 2 * i == n_per_slit + 1 {
                        0.0
                    } else {
                        standard.inverse_cdf(q)
                    };
                    p.center_x() + p.sigma0() * z
                })
                .collect(),
            Some(rng) => {
                let normal =
                    rand_distr::Normal::new(p.center_x(), p.sigma0()).expect("validated width");
                (0..n_per_slit).map(|_| normal.sample(rng)).collect()
            }
        };
        xs.sort_by(f64::total_cmp);
        out.extend(xs.into_iter().map(|x0| Launch { slit, x0 }));
    }
    out
}

/// Step control for the embedded pair. All quantities in internal units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    /// length
    pub abs_tol: f64,
    /// time
    pub max_step: f64,
    pub initial_step: f64,
    pub density_floor: f64,
    /// time; must not precede the forward screen
    pub max_time: f64,
    /// consecutive rejections inside a node before giving up
    pub max_node_retries: u32,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-8,
            max_step: 0.5,
            initial_step: 1e-3,
            density_floor: DEFAULT_DENSITY_FLOOR,
            max_time: 1e4,
            max_node_retries: 40,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self, screens: &ScreenGeometry) -> Result<(), TrajectoryError> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("initial_step", self.initial_step),
            ("max_time", self.max_time),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(TrajectoryError::InvalidConfig(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if !(self.density_floor >= 0.0) {
            return Err(TrajectoryError::InvalidConfig(format!(
                "density_floor must be non-negative, got {}",
                self.density_floor
            )));
        }
        if let Some(t) = screens.forward_time {
            if self.max_time < t {
                return Err(TrajectoryError::InvalidConfig(format!(
                    "max_time {} ends before the forward screen at {t}",
                    self.max_time
                )));
            }
        }
        Ok(())
    }
}

/// Where trajectories stop. The forward screen is reached at a fixed time
/// because the forward coordinate advances uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScreenGeometry {
    pub forward_time: Option<f64>,
    pub sideways_x: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    ReachedForwardScreen,
    ReachedSidewaysScreen,
    MaxTime,
    NodeStall,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::ReachedForwardScreen => "forward",
            Termination::ReachedSidewaysScreen => "sideways",
            Termination::MaxTime => "max_time",
            Termination::NodeStall => "node_stall",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: f64,
    /// forward coordinate `v_y t`
    pub y: f64,
    /// `dx/dt` at the point; `None` if the point sits in a node
    pub v: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: usize,
    pub source_slit: Slit,
    pub x0: f64,
    pub points: Vec<TrajectoryPoint>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryPoint {
        self.points
            .last()
            .expect("trajectory holds its launch point")
    }

    /// Deflection angle `atan(x / y)` of the final point in the (x, y) plane.
    pub fn deflection_angle(&self) -> f64 {
        let p = self.last();
        p.x.atan2(p.y)
    }

    /// Position at time `t` by cubic Hermite interpolation between recorded
    /// points; `None` outside the recorded span.
    pub fn position_at(&self, t: f64) -> Option<f64> {
        let first = self.points.first()?;
        if t < first.t || t > self.last().t {
            return None;
        }
        let k = self.points.partition_point(|p| p.t < t);
        if k == 0 {
            return Some(first.x);
        }
        let (a, b) = (&self.points[k - 1], &self.points[k]);
        if b.t == t {
            return Some(b.x);
        }
        Some(match (a.v, b.v) {
            (Some(va), Some(vb)) => hermite(a.t, a.x, va, b.t, b.x, vb, t),
            _ => a.x + (b.x - a.x) * (t - a.t) / (b.t - a.t),
        })
    }
}

fn hermite(t0: f64, x0: f64, v0: f64, t1: f64, x1: f64, v1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let (s2, s3) = (s * s, s * s * s);
    (2.0 * s3 - 3.0 * s2 + 1.0) * x0
        + (s3 - 2.0 * s2 + s) * h * v0
        + (-2.0 * s3 + 3.0 * s2) * x1
        + (s3 - s2) * h * v1
}

// Fehlberg coefficients
const C: [f64; 6] = [0.0, 0.25, 0.375, 12.0 / 13.0, 1.0, 0.5];
const A: [[f64; 5]; 6] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [
        -8.0 / 27.0,
        2.0,
        -3544.0 / 2565.0,
        1859.0 / 4104.0,
        -11.0 / 40.0,
    ],
];
const B4: [f64; 6] = [
    25.0 / 216.0,
    0.0,
    1408.0 / 2565.0,
    2197.0 / 4104.0,
    -0.2,
    0.0,
];
const B5: [f64; 6] = [
    16.0 / 135.0,
    0.0,
    6656.0 / 12825.0,
    28561.0 / 56430.0,
    -9.0 / 50.0,
    2.0 / 55.0,
];

enum StepOutcome {
    Done { x4: f64, err: f64 },
    Node,
}

fn rkf45_step(
    field: &TwoChannelField,
    t: f64,
    x: f64,
    v0: f64,
    h: f64,
) -> Result<StepOutcome, PacketError> {
    let mut k = [0.0; 6];
    k[0] = v0;
    for s in 1..6 {
        let xs = x + h * (0..s).map(|j| A[s][j] * k[j]).sum::<f64>();
        match field.velocity(xs, t + C[s] * h)? {
            FlowVelocity::Regular(v) => k[s] = v,
            FlowVelocity::Node => return Ok(StepOutcome::Node),
        }
    }
    let x4 = x + h * (0..6).map(|j| B4[j] * k[j]).sum::<f64>();
    let x5 = x + h * (0..6).map(|j| B5[j] * k[j]).sum::<f64>();
    if !x4.is_finite() || !x5.is_finite() {
        return Ok(StepOutcome::Node);
    }
    Ok(StepOutcome::Done {
        x4,
        err: (x5 - x4).abs(),
    })
}

/// Integrates one trajectory from `t = 0` until a screen, `max_time` or a
/// node stall. Every accepted step is recorded.
pub fn integrate(
    field: &TwoChannelField,
    launch: Launch,
    screens: &ScreenGeometry,
    forward_speed: f64,
    config: &IntegratorConfig,
) -> Result<Trajectory, TrajectoryError> {
    config.validate(screens)?;
    if !launch.x0.is_finite() {
        return Err(TrajectoryError::NonFiniteLaunch(launch.x0));
    }
    let field = field.with_density_floor(config.density_floor);
    let t_end = screens
        .forward_time
        .unwrap_or(config.max_time)
        .min(config.max_time);
    let end_termination = match screens.forward_time {
        Some(tf) if tf <= config.max_time => Termination::ReachedForwardScreen,
        _ => Termination::MaxTime,
    };
    let point = |t: f64, x: f64, v: Option<f64>| TrajectoryPoint {
        t,
        x,
        y: forward_speed * t,
        v,
    };

    let (mut t, mut x) = (0.0, launch.x0);
    let mut v = field.velocity(x, t)?.value();
    let mut points = vec![point(t, x, v)];
    let finish = |points: Vec<TrajectoryPoint>, termination| Trajectory {
        id: 0,
        source_slit: launch.slit,
        x0: launch.x0,
        points,
        termination,
    };
    // a launch already beyond the sideways screen never registers there
    let side_sign = screens.sideways_x.map(|xs| (x - xs).signum());

    let mut h = config.initial_step.min(config.max_step);
    let mut node_rejections = 0u32;
    loop {
        let Some(v0) = v else {
            return Ok(finish(points, Termination::NodeStall));
        };
        let remaining = t_end - t;
        if remaining <= 1e-12 * t_end.max(1.0) {
            return Ok(finish(points, end_termination));
        }
        let last_step = h >= remaining;
        let step = if last_step { remaining } else { h };
        if step < 1e-14 * t.max(1.0) {
            return Ok(finish(points, Termination::NodeStall));
        }

        match rkf45_step(&field, t, x, v0, step)? {
            StepOutcome::Node => {
                node_rejections += 1;
                if node_rejections > config.max_node_retries {
                    return Ok(finish(points, Termination::NodeStall));
                }
                h = 0.5 * step;
                continue;
            }
            StepOutcome::Done { x4, err } => {
                let tol = config.abs_tol + config.rel_tol * x.abs().max(x4.abs());
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
                };
                if err > tol {
                    h = step * factor;
                    continue;
                }
                node_rejections = 0;
                let t_new = if last_step { t_end } else { t + step };
                let v_new = field.velocity(x4, t_new)?.value();

                if let (Some(xs), Some(sign)) = (screens.sideways_x, side_sign) {
                    if sign != 0.0 && (x4 - xs).signum() != sign {
                        let tc = crossing_time(t, x, v0, t_new, x4, v_new, xs);
                        points.push(point(tc, xs, field.velocity(xs, tc)?.value()));
                        return Ok(finish(points, Termination::ReachedSidewaysScreen));
                    }
                }

                t = t_new;
                x = x4;
                v = v_new;
                points.push(point(t, x, v));
                if last_step {
                    return Ok(finish(points, end_termination));
                }
                h = (step * factor).min(config.max_step);
            }
        }
    }
}

/// Time in `(t0, t1]` where the step's Hermite interpolant meets `xs`.
fn crossing_time(t0: f64, x0: f64, v0: f64, t1: f64, x1: f64, v1: Option<f64>, xs: f64) -> f64 {
    let path = |t: f64| match v1 {
        Some(v1) => hermite(t0, x0, v0, t1, x1, v1, t),
        None => x0 + (x1 - x0) * (t - t0) / (t1 - t0),
    };
    let below = (x0 - xs).signum();
    let (mut lo, mut hi) = (t0, t1);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (path(mid) - xs).signum() == below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Integrates all launches in parallel. Output is sorted by slit then `x0`
/// and ids are assigned in that order, independent of thread scheduling.
pub fn integrate_batch(
    field: &TwoChannelField,
    launches: &[Launch],
    screens: &ScreenGeometry,
    forward_speed: f64,
    config: &IntegratorConfig,
) -> Result<Vec<Trajectory>, TrajectoryError> {
    let mut out = launches
        .par_iter()
        .map(|&launch| integrate(field, launch, screens, forward_speed, config))
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_by(|a, b| {
        a.source_slit
            .cmp(&b.source_slit)
            .then(a.x0.total_cmp(&b.x0))
    });
    for (id, traj) in out.iter_mut().enumerate() {
        traj.id = id;
    }
    Ok(out)
}

/// Sign changes of `x(t) - locus(t)` along every trajectory. Points exactly
/// on the locus do not count as a side.
pub fn count_midline_crossings(trajectories: &[Trajectory], locus: impl Fn(f64) -> f64) -> usize {
    trajectories
        .iter()
        .map(|traj| {
            let mut side = 0.0;
            let mut crossings = 0;
            for p in &traj.points {
                let s = (p.x - locus(p.t)).signum();
                let s = if p.x == locus(p.t) { 0.0 } else { s };
                if s != 0.0 {
                    if side != 0.0 && s != side {
                        crossings += 1;
                    }
                    side = s;
                }
            }
            crossings
        })
        .sum()
}

/// Pairs ordered by launch position whose order in `x` is reversed at one
/// of `times`, counting only trajectories still in flight at that time.
pub fn count_order_inversions(trajectories: &[Trajectory], times: &[f64]) -> usize {
    let mut by_x0: Vec<&Trajectory> = trajectories.iter().collect();
    by_x0.sort_by(|a, b| a.x0.total_cmp(&b.x0));
    times
        .iter()
        .map(|&t| {
            let xs: Vec<f64> = by_x0.iter().filter_map(|tr| tr.position_at(t)).collect();
            let mut inversions = 0;
            for i in 0..xs.len() {
                for j in i + 1..xs.len() {
                    if xs[i] > xs[j] {
                        inversions += 1;
                    }
                }
            }
            inversions
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::CoherenceMode;

    fn field(weight2: f64, mode: CoherenceMode) -> TwoChannelField {
        let p1 = PacketParams::new(-5.0, 1.0).unwrap();
        let p2 = PacketParams::new(5.0, 1.0)
            .unwrap()
            .with_weight(weight2)
            .unwrap();
        TwoChannelField::new([p1, p2], mode)
    }

    fn forward(t: f64) -> ScreenGeometry {
        ScreenGeometry {
            forward_time: Some(t),
            sideways_x: None,
        }
    }

    #[test]
    fn quantile_launches() {
        let packets = field(1.0, CoherenceMode::Coherent).packets;
        let one = launch_positions(&packets, 1, LaunchSampler::Quantile);
        assert_eq!(
            one,
            vec![
                Launch {
                    slit: Slit::Slit1,
                    x0: -5.0
                },
                Launch {
                    slit: Slit::Slit2,
                    x0: 5.0
                }
            ]
        );
        let three = launch_positions(&packets, 3, LaunchSampler::Quantile);
        let offsets: Vec<f64> = three[3..].iter().map(|l| l.x0 - 5.0).collect();
        assert!((offsets[0] + 0.674_489_750_2).abs() < 1e-9);
        assert_eq!(offsets[1], 0.0);
        assert!((offsets[2] - 0.674_489_750_2).abs() < 1e-9);
    }

    #[test]
    fn random_launches_follow_seed() {
        let packets = field(1.0, CoherenceMode::Coherent).packets;
        let a = launch_positions(&packets, 50, LaunchSampler::Random { seed: 7 });
        let b = launch_positions(&packets, 50, LaunchSampler::Random { seed: 7 });
        let c = launch_positions(&packets, 50, LaunchSampler::Random { seed: 8 });
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.iter().filter(|l| l.slit == Slit::Slit2).count(), 50);
    }

    #[test]
    fn single_slit_center_stays_put() {
        let f = field(0.0, CoherenceMode::Coherent);
        let traj = integrate(
            &f,
            Launch {
                slit: Slit::Slit1,
                x0: -5.0,
            },
            &forward(20.0),
            3.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!(traj.termination, Termination::ReachedForwardScreen);
        assert!(traj.points.iter().all(|p| (p.x + 5.0).abs() < 1e-12));
        let last = traj.last();
        assert_eq!(last.t, 20.0);
        assert!((last.y - 60.0).abs() < 1e-12);
    }

    #[test]
    fn single_slit_follows_width_scaling() {
        // away from the center a free trajectory rides the width: x(t) = x0 sigma_t / sigma0
        let f = field(0.0, CoherenceMode::Coherent);
        let p = f.packets[0];
        let traj = integrate(
            &f,
            Launch {
                slit: Slit::Slit1,
                x0: -4.0,
            },
            &forward(12.0),
            1.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        let expect = -5.0 + 1.0 * p.sigma_at(12.0).unwrap();
        assert!((traj.last().x - expect).abs() < 1e-6, "{}", traj.last().x);
    }

    #[test]
    fn points_increase_in_time() {
        let f = field(1.0, CoherenceMode::Coherent);
        let traj = integrate(
            &f,
            Launch {
                slit: Slit::Slit2,
                x0: 4.0,
            },
            &forward(15.0),
            2.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(traj
            .points
            .windows(2)
            .all(|w| w[1].t > w[0].t && w[1].y > w[0].y));
        assert!(traj.points.iter().all(|p| p.x.is_finite()));
    }

    #[test]
    fn symmetric_trajectories_mirror() {
        let f = field(1.0, CoherenceMode::Coherent);
        let cfg = IntegratorConfig::default();
        for &x0 in &[0.5, 3.0, 5.2, 7.0] {
            let a = integrate(
                &f,
                Launch {
                    slit: Slit::Slit2,
                    x0,
                },
                &forward(20.0),
                1.0,
                &cfg,
            )
            .unwrap();
            let b = integrate(
                &f,
                Launch {
                    slit: Slit::Slit1,
                    x0: -x0,
                },
                &forward(20.0),
                1.0,
                &cfg,
            )
            .unwrap();
            assert!((a.last().x + b.last().x).abs() < 1e-6, "x0={x0}");
        }
    }

    #[test]
    fn halving_tolerance_converges() {
        let f = field(0.1, CoherenceMode::Coherent);
        let cfg = IntegratorConfig::default();
        let fine = IntegratorConfig {
            rel_tol: cfg.rel_tol / 2.0,
            abs_tol: cfg.abs_tol / 2.0,
            ..cfg
        };
        for &x0 in &[-6.0, -4.5, 4.0, 5.5] {
            let slit = if x0 < 0.0 { Slit::Slit1 } else { Slit::Slit2 };
            let a = integrate(&f, Launch { slit, x0 }, &forward(25.0), 1.0, &cfg).unwrap();
            let b = integrate(&f, Launch { slit, x0 }, &forward(25.0), 1.0, &fine).unwrap();
            assert!((a.last().x - b.last().x).abs() < 1e-3);
        }
    }

    #[test]
    fn sideways_screen_stops_exactly_on_it() {
        let f = field(0.0, CoherenceMode::Coherent);
        let screens = ScreenGeometry {
            forward_time: Some(50.0),
            sideways_x: Some(-2.0),
        };
        // slit 1 alone spreads; x0 = -4.5 rides x = -5 + 0.5 sigma_t / sigma0 past -2
        let traj = integrate(
            &f,
            Launch {
                slit: Slit::Slit1,
                x0: -4.5,
            },
            &screens,
            1.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!(traj.termination, Termination::ReachedSidewaysScreen);
        let last = traj.last();
        assert_eq!(last.x, -2.0);
        // sigma_t = 6 at t = 2 sqrt(35)
        assert!((last.t - 2.0 * 35f64.sqrt()).abs() < 1e-5, "t = {}", last.t);
    }

    #[test]
    fn max_time_without_screens() {
        let f = field(1.0, CoherenceMode::Incoherent);
        let cfg = IntegratorConfig {
            max_time: 3.0,
            ..IntegratorConfig::default()
        };
        let traj = integrate(
            &f,
            Launch {
                slit: Slit::Slit1,
                x0: -5.5,
            },
            &ScreenGeometry::default(),
            1.0,
            &cfg,
        )
        .unwrap();
        assert_eq!(traj.termination, Termination::MaxTime);
        assert_eq!(traj.last().t, 3.0);
    }

    #[test]
    fn node_launch_stalls() {
        // opposite phases on top of each other: the density vanishes identically
        let p = PacketParams::new(0.0, 1.0).unwrap();
        let q = p.with_phase_offset(std::f64::consts::PI).unwrap();
        let f = TwoChannelField::new([p, q], CoherenceMode::Coherent).with_density_floor(1e-20);
        let traj = integrate(
            &f,
            Launch {
                slit: Slit::Slit1,
                x0: 0.0,
            },
            &forward(5.0),
            1.0,
            &IntegratorConfig {
                density_floor: 1e-20,
                ..IntegratorConfig::default()
            },
        )
        .unwrap();
        assert_eq!(traj.termination, Termination::NodeStall);
        assert_eq!(traj.points.len(), 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = field(1.0, CoherenceMode::Coherent);
        let cfg = IntegratorConfig::default();
        assert!(matches!(
            integrate(
                &f,
                Launch {
                    slit: Slit::Slit1,
                    x0: f64::NAN
                },
                &forward(1.0),
                1.0,
                &cfg
            ),
            Err(TrajectoryError::NonFiniteLaunch(_))
        ));
        let short = IntegratorConfig {
            max_time: 0.5,
            ..cfg
        };
        assert!(matches!(
            integrate(
                &f,
                Launch {
                    slit: Slit::Slit1,
                    x0: 0.0
                },
                &forward(1.0),
                1.0,
                &short
            ),
            Err(TrajectoryError::InvalidConfig(_))
        ));
    }

    #[test]
    fn batch_is_sorted_and_counts_crossings() {
        let f = field(1.0, CoherenceMode::Coherent);
        let launches = launch_positions(&f.packets, 20, LaunchSampler::Quantile);
        let mut shuffled = launches.clone();
        shuffled.reverse();
        let cfg = IntegratorConfig::default();
        let a = integrate_batch(&f, &launches, &forward(10.0), 1.0, &cfg).unwrap();
        let b = integrate_batch(&f, &shuffled, &forward(10.0), 1.0, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a
            .windows(2)
            .all(|w| (w[0].source_slit, w[0].x0) < (w[1].source_slit, w[1].x0)));
        assert_eq!(count_midline_crossings(&a, |_| 0.0), 0);
        let times: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        assert_eq!(count_order_inversions(&a, &times), 0);
    }

    #[test]
    fn crossing_counter_counts_sign_changes() {
        let pt = |t: f64, x: f64| TrajectoryPoint {
            t,
            x,
            y: t,
            v: None,
        };
        let traj = Trajectory {
            id: 0,
            source_slit: Slit::Slit1,
            x0: -1.0,
            points: vec![pt(0.0, -1.0), pt(1.0, 0.0), pt(2.0, 1.0), pt(3.0, -0.5)],
            termination: Termination::MaxTime,
        };
        assert_eq!(count_midline_crossings(std::slice::from_ref(&traj), |_| 0.0), 2);
        assert_eq!(count_midline_crossings(&[traj], |_| 5.0), 0);
    }

    #[test]
    fn hermite_interpolation_is_exact_for_cubics() {
        let f = |t: f64| t * t * t - 2.0 * t;
        let df = |t: f64| 3.0 * t * t - 2.0;
        let x = hermite(0.5, f(0.5), df(0.5), 2.0, f(2.0), df(2.0), 1.3);
        assert!((x - f(1.3)).abs() < 1e-13);
    }
}
