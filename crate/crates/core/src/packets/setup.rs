use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::gaussian::PacketParams;

/// Planck constant, J s (exact SI value).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
/// Neutron rest mass, kg (CODATA 2018).
pub const NEUTRON_MASS: f64 = 1.674_927_498_04e-27;

/// Converts a Gaussian full width at half maximum into its standard deviation.
pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetupError {
    #[error("setup parameter `{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("setup parameter `{name}` must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("setup parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
}

/// Experiment geometry and particle constants in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupParams {
    /// kg
    pub particle_mass: f64,
    /// de Broglie wavelength, m
    pub wavelength: f64,
    /// slit center-to-center distance, m
    pub slit_separation: f64,
    /// Gaussian standard deviation of each slit, m
    pub slit_width_sigma: f64,
    /// distance from the slit plane to the forward screen, m
    pub forward_screen_distance: f64,
    /// transverse position of the sideways screen, m; defaults to `3 d`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sideways_screen_x: Option<f64>,
}

impl SetupParams {
    /// Neutron double slit with 1.8 nm wavelength, slits 200 um apart whose
    /// 22 um width is read as a FWHM, forward screen at 5 m.
    pub fn neutron_double_slit() -> Self {
        Self {
            particle_mass: NEUTRON_MASS,
            wavelength: 1.8e-9,
            slit_separation: 200e-6,
            slit_width_sigma: fwhm_to_sigma(22e-6),
            forward_screen_distance: 5.0,
            sideways_screen_x: None,
        }
    }
}

impl Default for SetupParams {
    fn default() -> Self {
        Self::neutron_double_slit()
    }
}

/// Validated experiment with derived simulation units.
///
/// Internal units: `hbar = m = 1`, lengths in units of the slit width
/// `sigma0`, times in units of `m sigma0^2 / hbar`. The spreading time
/// `tau = 2 m sigma0^2 / hbar` is therefore exactly 2 internal time units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentSetup {
    params: SetupParams,
    sideways_screen_x: f64,
    length_unit: f64,
    time_unit: f64,
}

fn check_finite(name: &'static str, value: f64) -> Result<(), SetupError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(SetupError::NonFinite { name, value })
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), SetupError> {
    check_finite(name, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(SetupError::NonPositive { name, value })
    }
}

impl ExperimentSetup {
    pub fn new(params: SetupParams) -> Result<Self, SetupError> {
        check_positive("particle_mass", params.particle_mass)?;
        check_positive("wavelength", params.wavelength)?;
        check_positive("slit_width_sigma", params.slit_width_sigma)?;
        check_positive("forward_screen_distance", params.forward_screen_distance)?;
        check_finite("slit_separation", params.slit_separation)?;
        if params.slit_separation < 0.0 {
            return Err(SetupError::Negative {
                name: "slit_separation",
                value: params.slit_separation,
            });
        }
        let sideways_screen_x = match params.sideways_screen_x {
            Some(x) => {
                check_finite("sideways_screen_x", x)?;
                x
            }
            None => 3.0 * params.slit_separation,
        };
        let length_unit = params.slit_width_sigma;
        let time_unit = params.particle_mass * length_unit * length_unit / HBAR;
        Ok(Self {
            params,
            sideways_screen_x,
            length_unit,
            time_unit,
        })
    }

    pub fn neutron_default() -> Self {
        Self::new(SetupParams::default()).expect("built-in setup is valid")
    }

    pub fn params(&self) -> &SetupParams {
        &self.params
    }

    /// Returns a copy with a different slit separation (SI), keeping the
    /// sideways screen rule of the original parameters.
    pub fn with_slit_separation(&self, separation: f64) -> Result<Self, SetupError> {
        Self::new(SetupParams {
            slit_separation: separation,
            ..self.params
        })
    }

    pub fn with_sideways_screen(&self, x: f64) -> Result<Self, SetupError> {
        Self::new(SetupParams {
            sideways_screen_x: Some(x),
            ..self.params
        })
    }

    pub fn with_forward_distance(&self, distance: f64) -> Result<Self, SetupError> {
        Self::new(SetupParams {
            forward_screen_distance: distance,
            ..self.params
        })
    }

    /// Length unit in metres (`sigma0`).
    pub fn length_unit(&self) -> f64 {
        self.length_unit
    }

    /// Time unit in seconds (`m sigma0^2 / hbar`).
    pub fn time_unit(&self) -> f64 {
        self.time_unit
    }

    /// Forward speed `h / (m lambda)` in m/s.
    pub fn forward_speed_si(&self) -> f64 {
        PLANCK / (self.params.particle_mass * self.params.wavelength)
    }

    /// Time of flight to the forward screen in seconds.
    pub fn time_to_screen_si(&self) -> f64 {
        self.params.forward_screen_distance / self.forward_speed_si()
    }

    /// Spreading time `tau = 2 m sigma0^2 / hbar` in seconds.
    pub fn spreading_time_si(&self) -> f64 {
        2.0 * self.time_unit
    }

    pub fn length_to_internal(&self, metres: f64) -> f64 {
        metres / self.length_unit
    }

    pub fn length_to_si(&self, internal: f64) -> f64 {
        internal * self.length_unit
    }

    pub fn time_to_internal(&self, seconds: f64) -> f64 {
        seconds / self.time_unit
    }

    pub fn time_to_si(&self, internal: f64) -> f64 {
        internal * self.time_unit
    }

    pub fn velocity_to_si(&self, internal: f64) -> f64 {
        internal * self.length_unit / self.time_unit
    }

    /// Forward speed in internal units.
    pub fn forward_speed(&self) -> f64 {
        self.forward_speed_si() * self.time_unit / self.length_unit
    }

    /// Time of flight to the forward screen in internal units.
    pub fn screen_time(&self) -> f64 {
        self.time_to_internal(self.time_to_screen_si())
    }

    /// Spreading time in internal units (always 2).
    pub fn spreading_time(&self) -> f64 {
        2.0
    }

    pub fn slit_separation(&self) -> f64 {
        self.length_to_internal(self.params.slit_separation)
    }

    pub fn sideways_screen_x(&self) -> f64 {
        self.length_to_internal(self.sideways_screen_x)
    }

    pub fn sideways_screen_x_si(&self) -> f64 {
        self.sideways_screen_x
    }

    /// Internal centers of slit 1 and slit 2, symmetric about the origin.
    pub fn slit_centers(&self) -> [f64; 2] {
        let half = 0.5 * self.slit_separation();
        [-half, half]
    }

    /// Unattenuated packets for both slits (unit weight, no drift).
    pub fn packets(&self) -> [PacketParams; 2] {
        let [c1, c2] = self.slit_centers();
        [
            PacketParams::new(c1, 1.0).expect("unit width is valid"),
            PacketParams::new(c2, 1.0).expect("unit width is valid"),
        ]
    }
}
