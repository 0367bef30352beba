use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::attenuation::{AttenuationKind, TransmissionFactor};
use crate::fields::CoherenceMode;
use crate::packets::{ExperimentSetup, SetupParams};
use crate::trajectories::{IntegratorConfig, LaunchSampler, ScreenGeometry};

/// The only config layout this build understands.
pub const SCHEMA_VERSION: u32 = 1;

/// Whole run description. Every section a sub-command reads must be present
/// and complete; nothing falls back to a built-in value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub setup: SetupParams,
    pub attenuation: AttenuationSection,
    pub coherence: Vec<CoherenceMode>,
    pub profile: Option<ProfileSection>,
    pub trajectories: Option<TrajectorySection>,
    pub integrator: Option<IntegratorSection>,
    pub verify: Option<VerifySection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttenuationSection {
    pub kinds: Vec<AttenuationKind>,
    /// transmission factors `a`
    pub values: Vec<f64>,
}

/// Analytic screen profiles at the forward screen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub points: usize,
    /// grid half-width beyond the slit centers, in screen-time packet widths
    pub half_width_sigmas: f64,
    /// phase-shifter settings for the contrast measurement
    pub phase_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Quantile,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub n_per_slit: usize,
    pub sampler: SamplerKind,
    /// required by the random sampler unless given on the command line
    pub seed: Option<u64>,
    pub forward_bins: usize,
    pub sideways_bins: usize,
    pub heatmap_x_points: usize,
    pub heatmap_t_points: usize,
    /// heatmap half-width beyond the slit centers, in screen-time widths
    pub heatmap_half_width_sigmas: f64,
}

/// Step control, with lengths in slit widths and times in spreading times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub rel_tol: f64,
    pub abs_tol_sigma: f64,
    pub max_step_tau: f64,
    pub initial_step_tau: f64,
    /// internal units (`1 / sigma0`)
    pub density_floor: f64,
    /// stopping time as a multiple of the flight time to the forward screen
    pub max_time_factor: f64,
    pub max_node_retries: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub points_per_time: usize,
    pub half_width_sigmas: f64,
    /// finite-difference steps in spreading times and slit widths
    pub dt_tau: f64,
    pub dx_sigma: f64,
}

fn invalid(msg: impl Into<String>) -> RunError {
    RunError::Validation(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.experiment()?;
        if self.attenuation.kinds.is_empty() {
            return Err(invalid("attenuation.kinds must not be empty"));
        }
        if self.attenuation.values.is_empty() {
            return Err(invalid("attenuation.values must not be empty"));
        }
        for &a in &self.attenuation.values {
            TransmissionFactor::new(a).map_err(|e| invalid(format!("attenuation.values: {e}")))?;
        }
        if self.coherence.is_empty() {
            return Err(invalid("coherence must list at least one mode"));
        }
        if let Some(p) = &self.profile {
            if p.points < 3 {
                return Err(invalid("profile.points must be at least 3"));
            }
            positive("profile.half_width_sigmas", p.half_width_sigmas)?;
            if p.phase_steps < 3 {
                return Err(invalid("profile.phase_steps must be at least 3"));
            }
        }
        if let Some(t) = &self.trajectories {
            let counts = [
                ("trajectories.n_per_slit", t.n_per_slit),
                ("trajectories.forward_bins", t.forward_bins),
                ("trajectories.sideways_bins", t.sideways_bins),
                ("trajectories.heatmap_x_points", t.heatmap_x_points),
                ("trajectories.heatmap_t_points", t.heatmap_t_points),
            ];
            for (name, n) in counts {
                if n == 0 {
                    return Err(invalid(format!("{name} must be at least 1")));
                }
            }
            positive(
                "trajectories.heatmap_half_width_sigmas",
                t.heatmap_half_width_sigmas,
            )?;
        }
        if let Some(i) = &self.integrator {
            positive("integrator.rel_tol", i.rel_tol)?;
            positive("integrator.abs_tol_sigma", i.abs_tol_sigma)?;
            positive("integrator.max_step_tau", i.max_step_tau)?;
            positive("integrator.initial_step_tau", i.initial_step_tau)?;
            if !(i.density_floor >= 0.0 && i.density_floor.is_finite()) {
                return Err(invalid(
                    "integrator.density_floor must be finite and non-negative",
                ));
            }
            if !(i.max_time_factor >= 1.0 && i.max_time_factor.is_finite()) {
                return Err(invalid("integrator.max_time_factor must be at least 1"));
            }
        }
        if let Some(v) = &self.verify {
            if v.points_per_time < 3 {
                return Err(invalid("verify.points_per_time must be at least 3"));
            }
            positive("verify.half_width_sigmas", v.half_width_sigmas)?;
            positive("verify.dt_tau", v.dt_tau)?;
            positive("verify.dx_sigma", v.dx_sigma)?;
        }
        Ok(())
    }

    pub fn experiment(&self) -> Result<ExperimentSetup, RunError> {
        ExperimentSetup::new(self.setup).map_err(|e| invalid(format!("setup: {e}")))
    }

    /// Distinct transmission factors in descending order, plus the values
    /// that were dropped as duplicates.
    pub fn distinct_values(&self) -> (Vec<TransmissionFactor>, Vec<f64>) {
        let mut seen = BTreeSet::new();
        let mut dropped = Vec::new();
        for &a in &self.attenuation.values {
            if !seen.insert(a.to_bits()) {
                dropped.push(a);
            }
        }
        let mut out: Vec<TransmissionFactor> = seen
            .into_iter()
            .map(|bits| TransmissionFactor::new(f64::from_bits(bits)).expect("validated"))
            .collect();
        out.sort_by(|a, b| b.value().total_cmp(&a.value()));
        (out, dropped)
    }

    pub fn require_profile(&self) -> Result<&ProfileSection, RunError> {
        self.profile
            .as_ref()
            .ok_or_else(|| invalid("missing [profile] section"))
    }

    pub fn require_trajectories(&self) -> Result<&TrajectorySection, RunError> {
        self.trajectories
            .as_ref()
            .ok_or_else(|| invalid("missing [trajectories] section"))
    }

    pub fn require_integrator(&self) -> Result<&IntegratorSection, RunError> {
        self.integrator
            .as_ref()
            .ok_or_else(|| invalid("missing [integrator] section"))
    }

    pub fn require_verify(&self) -> Result<&VerifySection, RunError> {
        self.verify
            .as_ref()
            .ok_or_else(|| invalid("missing [verify] section"))
    }

    /// Launch sampler, with `seed_override` taking precedence over the file.
    pub fn sampler(&self, seed_override: Option<u64>) -> Result<LaunchSampler, RunError> {
        let t = self.require_trajectories()?;
        match t.sampler {
            SamplerKind::Quantile => Ok(LaunchSampler::Quantile),
            SamplerKind::Random => {
                let seed = seed_override
                    .or(t.seed)
                    .ok_or_else(|| invalid("random sampler needs trajectories.seed or --seed"))?;
                Ok(LaunchSampler::Random { seed })
            }
        }
    }

    pub fn screens(&self, setup: &ExperimentSetup) -> ScreenGeometry {
        ScreenGeometry {
            forward_time: Some(setup.screen_time()),
            sideways_x: Some(setup.sideways_screen_x()),
        }
    }

    pub fn integrator_config(&self, setup: &ExperimentSetup) -> Result<IntegratorConfig, RunError> {
        let i = self.require_integrator()?;
        let tau = setup.spreading_time();
        Ok(IntegratorConfig {
            rel_tol: i.rel_tol,
            abs_tol: i.abs_tol_sigma,
            max_step: i.max_step_tau * tau,
            initial_step: i.initial_step_tau * tau,
            density_floor: i.density_floor,
            max_time: i.max_time_factor * setup.screen_time(),
            max_node_retries: i.max_node_retries,
        })
    }
}

fn positive(name: &str, value: f64) -> Result<(), RunError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {value}")))
    }
}
