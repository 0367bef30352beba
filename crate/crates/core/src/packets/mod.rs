//! Closed-form analytics for a single freely dispersing Gaussian channel.

mod gaussian;
mod setup;

pub use gaussian::{PacketError, PacketParams, PacketSample};
pub use setup::{
    fwhm_to_sigma, ExperimentSetup, SetupError, SetupParams, HBAR, NEUTRON_MASS, PLANCK,
};
