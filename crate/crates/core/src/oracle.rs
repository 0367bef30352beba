//! Reference wavefunction built directly from the complex Gaussian.
//!
//! Nothing here calls into the channel analytics of [`crate::packets`] beyond
//! reading packet parameters; the width, phase and velocities are all
//! recovered from complex arithmetic on `psi` and its log-derivative. Values
//! are carried as `ln psi` so that amplitudes far below `f64::MIN_POSITIVE`
//! still combine correctly.

use num_complex::Complex64;

use crate::fields::FlowVelocity;
use crate::packets::PacketParams;

/// `psi = exp(log_modulus + i phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexAmplitude {
    pub log_modulus: f64,
    pub phase: f64,
}

impl ComplexAmplitude {
    pub fn from_log(log_psi: Complex64) -> Self {
        Self {
            log_modulus: log_psi.re,
            phase: log_psi.im,
        }
    }

    pub fn modulus(&self) -> f64 {
        self.log_modulus.exp()
    }

    pub fn re(&self) -> f64 {
        self.modulus() * self.phase.cos()
    }

    pub fn im(&self) -> f64 {
        self.modulus() * self.phase.sin()
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.modulus(), self.phase)
    }
}

/// Amplitude together with its logarithmic derivative `psi' / psi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalPsi {
    pub amplitude: ComplexAmplitude,
    pub log_derivative: Complex64,
}

/// Free Gaussian in units `hbar = m = 1`:
/// `w (2 pi s^2)^(-1/4) exp(-(x - x0 - vg t)^2 / (4 sigma0 s) + i vg (x - vg t / 2) + i chi)`
/// with complex width `s = sigma0 (1 + i t / (2 sigma0^2))`.
///
/// Zero weight yields `log_modulus = -inf`.
pub fn psi(packet: &PacketParams, x: f64, t: f64) -> LocalPsi {
    let sigma0 = packet.sigma0();
    let vg = packet.group_velocity();
    let s = Complex64::new(sigma0, t / (2.0 * sigma0));
    let dx = x - packet.center_x() - vg * t;
    let i = Complex64::i();

    let log_norm = packet.weight().ln() - 0.25 * (2.0 * std::f64::consts::PI).ln();
    // (s^2)^(-1/4) = s^(-1/2) on the principal branch since Re s > 0
    let log_psi = log_norm - 0.5 * s.ln() - dx * dx / (4.0 * sigma0 * s)
        + i * (vg * (x - 0.5 * vg * t) + packet.phase_offset());
    let log_derivative = -dx / (2.0 * sigma0 * s) + i * vg;
    LocalPsi {
        amplitude: ComplexAmplitude::from_log(log_psi),
        log_derivative,
    }
}

/// Superposition rescaled by `exp(-log_scale)` to stay representable.
#[derive(Debug, Clone, Copy)]
struct ScaledSum {
    psi: Complex64,
    dpsi: Complex64,
    log_scale: f64,
}

fn scaled_sum(parts: &[LocalPsi]) -> Option<ScaledSum> {
    let log_scale = parts
        .iter()
        .map(|p| p.amplitude.log_modulus)
        .fold(f64::NEG_INFINITY, f64::max);
    if log_scale == f64::NEG_INFINITY {
        return None;
    }
    let (mut psi, mut dpsi) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for p in parts {
        let term = Complex64::from_polar(
            (p.amplitude.log_modulus - log_scale).exp(),
            p.amplitude.phase,
        );
        psi += term;
        dpsi += term * p.log_derivative;
    }
    Some(ScaledSum {
        psi,
        dpsi,
        log_scale,
    })
}

/// `ln |psi1 + psi2|^2`, `-inf` at an exact node.
pub fn log_born_density(parts: &[LocalPsi]) -> f64 {
    match scaled_sum(parts) {
        Some(sum) => sum.psi.norm_sqr().ln() + 2.0 * sum.log_scale,
        None => f64::NEG_INFINITY,
    }
}

/// `|psi1 + psi2|^2`.
pub fn born_density(parts: &[LocalPsi]) -> f64 {
    log_born_density(parts).exp()
}

fn velocity_with(parts: &[LocalPsi], floor: f64, pick: impl Fn(Complex64) -> f64) -> FlowVelocity {
    let Some(sum) = scaled_sum(parts) else {
        return FlowVelocity::Node;
    };
    let norm = sum.psi.norm_sqr();
    if !(norm > 0.0) || norm.ln() + 2.0 * sum.log_scale < floor.ln() {
        return FlowVelocity::Node;
    }
    FlowVelocity::Regular(pick(sum.dpsi / sum.psi))
}

/// Guidance velocity `Im(psi' / psi)`.
pub fn bohm_velocity(parts: &[LocalPsi], floor: f64) -> FlowVelocity {
    velocity_with(parts, floor, |r| r.im)
}

/// Osmotic velocity `-Re(psi' / psi) = -d ln|psi| / dx`.
pub fn osmotic_velocity(parts: &[LocalPsi], floor: f64) -> FlowVelocity {
    velocity_with(parts, floor, |r| -r.re)
}

/// Probability current `|psi|^2 Im(psi'/psi)`; zero where the sum vanishes.
pub fn current(parts: &[LocalPsi]) -> f64 {
    match scaled_sum(parts) {
        Some(sum) => (sum.psi.conj() * sum.dpsi).im * (2.0 * sum.log_scale).exp(),
        None => 0.0,
    }
}

/// Both slit wavefunctions evaluated at one point.
pub fn pair(packets: &[PacketParams; 2], x: f64, t: f64) -> [LocalPsi; 2] {
    [psi(&packets[0], x, t), psi(&packets[1], x, t)]
}
