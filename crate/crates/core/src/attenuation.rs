//! Beam attenuation: foil-style amplitude scaling and chopper-style density
//! mixing, with the fringe contrast each one predicts.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::packets::PacketParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttenuationError {
    #[error("transmission factor must lie in [0, 1], got {0}")]
    OutOfRange(f64),
}

/// Probability that a particle passes the attenuator, `a` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TransmissionFactor(f64);

impl TransmissionFactor {
    pub const OPEN: Self = Self(1.0);

    pub fn new(a: f64) -> Result<Self, AttenuationError> {
        if (0.0..=1.0).contains(&a) {
            Ok(Self(a))
        } else {
            Err(AttenuationError::OutOfRange(a))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Amplitude factor `sqrt(a)`.
    pub fn amplitude(self) -> f64 {
        self.0.sqrt()
    }
}

impl TryFrom<f64> for TransmissionFactor {
    type Error = AttenuationError;

    fn try_from(a: f64) -> Result<Self, Self::Error> {
        Self::new(a)
    }
}

impl From<TransmissionFactor> for f64 {
    fn from(a: TransmissionFactor) -> f64 {
        a.0
    }
}

impl fmt::Display for TransmissionFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttenuationKind {
    Stochastic,
    Deterministic,
}

impl AttenuationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttenuationKind::Stochastic => "stochastic",
            AttenuationKind::Deterministic => "deterministic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttenuationMode {
    /// Both slits fully open; observably the same as `Stochastic(1)`.
    None,
    Stochastic(TransmissionFactor),
    Deterministic(TransmissionFactor),
}

impl AttenuationMode {
    pub fn new(kind: AttenuationKind, a: f64) -> Result<Self, AttenuationError> {
        let a = TransmissionFactor::new(a)?;
        Ok(match kind {
            AttenuationKind::Stochastic => Self::Stochastic(a),
            AttenuationKind::Deterministic => Self::Deterministic(a),
        })
    }

    pub fn transmission(&self) -> TransmissionFactor {
        match *self {
            Self::None => TransmissionFactor::OPEN,
            Self::Stochastic(a) | Self::Deterministic(a) => a,
        }
    }

    pub fn kind(&self) -> AttenuationKind {
        match self {
            Self::None | Self::Stochastic(_) => AttenuationKind::Stochastic,
            Self::Deterministic(_) => AttenuationKind::Deterministic,
        }
    }
}

/// Foil attenuation: scales the channel amplitude by `sqrt(a)`.
pub fn apply_stochastic(packet: PacketParams, a: TransmissionFactor) -> PacketParams {
    packet
        .with_weight(packet.weight() * a.amplitude())
        .expect("product of weights in [0, 1] stays in [0, 1]")
}

/// Chopper attenuation: `(1 - a) P1' + a (P1 + P2)`, where `P1'` is the
/// single-slit density and `P1 + P2` the unattenuated double-slit density.
pub fn deterministic_intensity(single: f64, p1: f64, p2: f64, a: TransmissionFactor) -> f64 {
    let a = a.value();
    (1.0 - a) * single + a * (p1 + p2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visibility {
    pub value: f64,
    /// `a = 0`: no second beam, the contrast is undefined and reported as 0
    pub degenerate: bool,
}

/// Predicted fringe contrast for equal envelopes.
///
/// Stochastic: `2 sqrt(a) / (1 + a)`. Deterministic: `2 a / (1 + a)`.
pub fn theoretical_visibility(a: TransmissionFactor, kind: AttenuationKind) -> Visibility {
    let a = a.value();
    if a == 0.0 {
        return Visibility {
            value: 0.0,
            degenerate: true,
        };
    }
    let numerator = match kind {
        AttenuationKind::Stochastic => a.sqrt(),
        AttenuationKind::Deterministic => a,
    };
    Visibility {
        value: 2.0 * numerator / (1.0 + a),
        degenerate: false,
    }
}

/// Which-path distinguishability `|R1^2 - R2^2| / (R1^2 + R2^2)` with
/// `R2^2 = a R1^2`.
pub fn distinguishability(a: TransmissionFactor) -> f64 {
    let a = a.value();
    (1.0 - a) / (1.0 + a)
}
