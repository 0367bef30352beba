use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PacketError {
    #[error("packet width must be positive and finite, got {0}")]
    BadWidth(f64),
    #[error("packet weight must lie in [0, 1], got {0}")]
    BadWeight(f64),
    #[error("packet parameter `{0}` must be finite")]
    NonFinite(&'static str),
    #[error("only forward evolution is simulated, got t = {0}")]
    NegativeTime(f64),
}

/// One Gaussian channel in internal units (`hbar = m = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketParams {
    center_x: f64,
    sigma0: f64,
    group_velocity: f64,
    weight: f64,
    phase_offset: f64,
}

/// Local single-channel data at `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSample {
    /// amplitude `R`; zero when it underflows or the weight is zero
    pub r: f64,
    /// `ln R`; `-inf` only for zero weight
    pub log_r: f64,
    /// phase `S / hbar`
    pub phase: f64,
    /// convective velocity `grad S / m`
    pub v: f64,
    /// diffusive velocity `-(hbar/m) grad R / R`
    pub u: f64,
    pub center: f64,
    pub sigma: f64,
}

impl PacketParams {
    pub fn new(center_x: f64, sigma0: f64) -> Result<Self, PacketError> {
        if !center_x.is_finite() {
            return Err(PacketError::NonFinite("center_x"));
        }
        if !(sigma0.is_finite() && sigma0 > 0.0) {
            return Err(PacketError::BadWidth(sigma0));
        }
        Ok(Self {
            center_x,
            sigma0,
            group_velocity: 0.0,
            weight: 1.0,
            phase_offset: 0.0,
        })
    }

    pub fn with_weight(self, weight: f64) -> Result<Self, PacketError> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(PacketError::BadWeight(weight));
        }
        Ok(Self { weight, ..self })
    }

    pub fn with_group_velocity(self, group_velocity: f64) -> Result<Self, PacketError> {
        if !group_velocity.is_finite() {
            return Err(PacketError::NonFinite("group_velocity"));
        }
        Ok(Self {
            group_velocity,
            ..self
        })
    }

    /// Constant phase added to the channel, as a phase shifter in the arm would.
    pub fn with_phase_offset(self, phase_offset: f64) -> Result<Self, PacketError> {
        if !phase_offset.is_finite() {
            return Err(PacketError::NonFinite("phase_offset"));
        }
        Ok(Self {
            phase_offset,
            ..self
        })
    }

    pub fn center_x(&self) -> f64 {
        self.center_x
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn group_velocity(&self) -> f64 {
        self.group_velocity
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn phase_offset(&self) -> f64 {
        self.phase_offset
    }

    /// `tau = 2 m sigma0^2 / hbar`.
    pub fn spreading_time(&self) -> f64 {
        2.0 * self.sigma0 * self.sigma0
    }

    pub fn center_at(&self, t: f64) -> f64 {
        self.center_x + self.group_velocity * t
    }

    /// `sigma_t = sigma0 sqrt(1 + (t/tau)^2)`.
    pub fn sigma_at(&self, t: f64) -> Result<f64, PacketError> {
        if !(t >= 0.0) {
            return Err(PacketError::NegativeTime(t));
        }
        let theta = t / self.spreading_time();
        Ok(self.sigma0 * theta.hypot(1.0))
    }

    pub fn sample(&self, x: f64, t: f64) -> Result<PacketSample, PacketError> {
        let sigma = self.sigma_at(t)?;
        let tau = self.spreading_time();
        let theta = t / tau;
        let center = self.center_at(t);
        let delta = x - center;
        let var = sigma * sigma;

        let log_r = self.weight.ln() - 0.25 * (2.0 * PI * var).ln() - delta * delta / (4.0 * var);
        let u = delta / (2.0 * var);
        // sigma_dot / sigma
        let expansion_rate = theta / (tau * (1.0 + theta * theta));
        let v = self.group_velocity + delta * expansion_rate;
        let vg = self.group_velocity;
        let phase = vg * (x - 0.5 * vg * t) + delta * delta * theta / (4.0 * var)
            - 0.5 * theta.atan()
            + self.phase_offset;

        Ok(PacketSample {
            r: log_r.exp(),
            log_r,
            phase,
            v,
            u,
            center,
            sigma,
        })
    }
}
