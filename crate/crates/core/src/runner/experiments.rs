use serde::Serialize;

use super::config::RunConfig;
use super::output::{fmt_f64, OutputDir};
use super::{Command, RunError};
use crate::attenuation::{
    apply_stochastic, distinguishability, theoretical_visibility, AttenuationKind, AttenuationMode,
    TransmissionFactor,
};
use crate::fields::{CoherenceMode, TwoChannelField};
use crate::packets::{ExperimentSetup, PacketParams};
use crate::screens::{
    analytic_profile, bookkeeping, duality_metrics, phase_stepped_visibility, record,
    sideways_grid, sweeper_metrics, BinGrid, ScreenOrientation, ScreenRecord, ScreenSpec,
    SlitTally, SweeperMetrics,
};
use crate::stats::linspace;
use crate::trajectories::{
    count_midline_crossings, integrate_batch, launch_positions, LaunchSampler, Trajectory,
};
use crate::verification::{
    continuity_residual, oracle_equivalence, ScanGrid, CONTINUITY_TOLERANCE, DENSITY_TOLERANCE,
    VELOCITY_TOLERANCE,
};

pub(super) struct Outcome {
    pub warnings: Vec<String>,
    pub passed: bool,
}

type Metadata = Vec<(&'static str, String)>;

fn runtime(e: impl std::fmt::Display) -> RunError {
    RunError::Runtime(e.to_string())
}

pub(super) struct Context<'a> {
    command: Command,
    config: &'a RunConfig,
    config_sha256: &'a str,
    setup: ExperimentSetup,
    values: Vec<TransmissionFactor>,
    seed_override: Option<u64>,
    warnings: Vec<String>,
}

impl<'a> Context<'a> {
    pub(super) fn new(
        command: Command,
        config: &'a RunConfig,
        config_sha256: &'a str,
        seed_override: Option<u64>,
    ) -> Result<Self, RunError> {
        config.validate()?;
        let setup = config.experiment()?;
        let (values, dropped) = config.distinct_values();
        let warnings: Vec<String> = dropped
            .iter()
            .map(|a| format!("duplicate transmission factor {a} ignored"))
            .collect();
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(Self {
            command,
            config,
            config_sha256,
            setup,
            values,
            seed_override,
            warnings,
        })
    }

    pub(super) fn seed(&self) -> Option<u64> {
        self.seed_override
            .or_else(|| self.config.trajectories.as_ref().and_then(|t| t.seed))
    }

    fn metadata(&self) -> Metadata {
        let p = self.setup.params();
        let mut m = vec![
            ("tool", format!("qsweep {}", env!("CARGO_PKG_VERSION"))),
            ("command", self.command.as_str().to_string()),
            ("config_sha256", self.config_sha256.to_string()),
            ("particle_mass_kg", fmt_f64(p.particle_mass)),
            ("wavelength_m", fmt_f64(p.wavelength)),
            ("slit_separation_m", fmt_f64(p.slit_separation)),
            ("slit_width_sigma_m", fmt_f64(p.slit_width_sigma)),
            (
                "forward_screen_distance_m",
                fmt_f64(p.forward_screen_distance),
            ),
            (
                "sideways_screen_x_m",
                fmt_f64(self.setup.sideways_screen_x_si()),
            ),
            (
                "forward_speed_m_per_s",
                fmt_f64(self.setup.forward_speed_si()),
            ),
            ("screen_time_s", fmt_f64(self.setup.time_to_screen_si())),
        ];
        if let Some(seed) = self.seed() {
            m.push(("seed", seed.to_string()));
        }
        m
    }

    /// Transverse grid `+-(d/2 + k sigma_t)` at the forward screen.
    fn screen_grid(&self, half_width_sigmas: f64, points: usize) -> Result<Vec<f64>, RunError> {
        let sigma = self.setup.packets()[0]
            .sigma_at(self.setup.screen_time())
            .map_err(runtime)?;
        let reach = 0.5 * self.setup.slit_separation() + half_width_sigmas * sigma;
        Ok(linspace(-reach, reach, points))
    }

    fn measured_visibility(
        &self,
        a: TransmissionFactor,
        kind: AttenuationKind,
        coherence: CoherenceMode,
    ) -> Result<Option<f64>, RunError> {
        let Some(p) = &self.config.profile else {
            return Ok(None);
        };
        let xs = self.screen_grid(p.half_width_sigmas, p.points)?;
        let mode = AttenuationMode::new(kind, a.value()).map_err(runtime)?;
        let m = phase_stepped_visibility(
            &self.setup.packets(),
            mode,
            coherence,
            self.setup.screen_time(),
            &xs,
            p.phase_steps,
        )
        .map_err(runtime)?;
        Ok(Some(m.value))
    }
}

fn theory(a: TransmissionFactor, kind: AttenuationKind, coherence: CoherenceMode) -> f64 {
    match coherence {
        CoherenceMode::Coherent => theoretical_visibility(a, kind).value,
        CoherenceMode::Incoherent => 0.0,
    }
}

fn tag(a: TransmissionFactor) -> String {
    format!("a{:e}", a.value())
}

#[derive(Debug, Serialize)]
struct ProfileMetrics {
    file: String,
    a: f64,
    mode: AttenuationKind,
    coherence: CoherenceMode,
    #[serde(rename = "V_measured")]
    v_measured: f64,
    #[serde(rename = "V_theory")]
    v_theory: f64,
    #[serde(rename = "D")]
    d: f64,
    duality_residual: f64,
    raw_area: f64,
    captured_mass: f64,
    warning: Option<String>,
}

#[derive(Debug, Serialize)]
struct AreaCheck {
    a: f64,
    coherence: CoherenceMode,
    stochastic_area: f64,
    deterministic_area: f64,
    relative_difference: f64,
}

pub(super) fn profile(ctx: &Context, out: &mut OutputDir) -> Result<Outcome, RunError> {
    let section = ctx.config.require_profile()?;
    let setup = &ctx.setup;
    let t = setup.screen_time();
    let xs = ctx.screen_grid(section.half_width_sigmas, section.points)?;
    let open = setup.packets();
    let mut warnings = ctx.warnings.clone();
    let mut metrics = Vec::new();
    let mut areas = Vec::new();

    for &a in &ctx.values {
        for &coherence in &ctx.config.coherence {
            let mut by_kind = [None, None];
            for &kind in &ctx.config.attenuation.kinds {
                let mode = AttenuationMode::new(kind, a.value()).map_err(runtime)?;
                let prof = analytic_profile(&open, mode, coherence, t, &xs).map_err(runtime)?;
                let name = format!(
                    "profile_{}_{}_{}.csv",
                    kind.as_str(),
                    coherence.as_str(),
                    tag(a)
                );
                if let Some(w) = &prof.warning {
                    warnings.push(format!("{name}: {w}"));
                    log::warn!("{name}: {w}");
                }
                let mut meta = ctx.metadata();
                meta.extend([
                    ("a", fmt_f64(a.value())),
                    ("attenuation", kind.as_str().to_string()),
                    ("coherence", coherence.as_str().to_string()),
                    ("raw_area", fmt_f64(prof.raw_area)),
                    ("captured_mass", fmt_f64(prof.captured_mass)),
                    (
                        "units",
                        "x in m, intensity normalized to unit area in 1/m".to_string(),
                    ),
                ]);
                let length = setup.length_unit();
                let rows = prof
                    .xs
                    .iter()
                    .zip(&prof.intensity)
                    .map(|(&x, &i)| vec![fmt_f64(setup.length_to_si(x)), fmt_f64(i / length)]);
                out.write_csv(&name, &meta, &["x", "intensity"], rows)?;

                let v =
                    phase_stepped_visibility(&open, mode, coherence, t, &xs, section.phase_steps)
                        .map_err(runtime)?;
                let dm = duality_metrics(a);
                metrics.push(ProfileMetrics {
                    file: name,
                    a: a.value(),
                    mode: kind,
                    coherence,
                    v_measured: v.value,
                    v_theory: theory(a, kind, coherence),
                    d: dm.distinguishability,
                    duality_residual: dm.residual,
                    raw_area: prof.raw_area,
                    captured_mass: prof.captured_mass,
                    warning: prof.warning,
                });
                by_kind[match kind {
                    AttenuationKind::Stochastic => 0,
                    AttenuationKind::Deterministic => 1,
                }] = Some(prof.raw_area);
            }
            if let [Some(s), Some(d)] = by_kind {
                areas.push(AreaCheck {
                    a: a.value(),
                    coherence,
                    stochastic_area: s,
                    deterministic_area: d,
                    relative_difference: (s - d).abs() / s.abs().max(d.abs()),
                });
            }
        }
    }
    #[derive(Serialize)]
    struct Report {
        profiles: Vec<ProfileMetrics>,
        equal_area: Vec<AreaCheck>,
    }
    out.write_json(
        "profile_metrics.json",
        &Report {
            profiles: metrics,
            equal_area: areas,
        },
    )?;
    Ok(Outcome {
        warnings,
        passed: true,
    })
}

/// One trajectory batch at a fixed transmission factor and coherence.
struct Batch {
    field: TwoChannelField,
    trajectories: Vec<Trajectory>,
    tallies: [SlitTally; 2],
    sweeper: SweeperMetrics,
    midline_crossings: usize,
}

fn run_batch(
    ctx: &Context,
    a: TransmissionFactor,
    coherence: CoherenceMode,
    sampler: LaunchSampler,
) -> Result<Batch, RunError> {
    let section = ctx.config.require_trajectories()?;
    let setup = &ctx.setup;
    let open = setup.packets();
    let packets: [PacketParams; 2] = [open[0], apply_stochastic(open[1], a)];
    let integrator = ctx.config.integrator_config(setup)?;
    let field =
        TwoChannelField::new(packets, coherence).with_density_floor(integrator.density_floor);
    let launches = launch_positions(&packets, section.n_per_slit, sampler);
    let trajectories = integrate_batch(
        &field,
        &launches,
        &ctx.config.screens(setup),
        setup.forward_speed(),
        &integrator,
    )
    .map_err(|e| match e {
        crate::trajectories::TrajectoryError::InvalidConfig(msg) => RunError::Validation(msg),
        other => runtime(other),
    })?;
    let tallies = bookkeeping(&trajectories);
    let sweeper =
        sweeper_metrics(&trajectories, &packets[1], setup.forward_speed()).map_err(runtime)?;
    let midline_crossings = count_midline_crossings(&trajectories, |t| {
        field.no_crossing_locus(t).unwrap_or(f64::NAN)
    });
    log::info!(
        "a = {} {}: slit 2 forward {} sideways {} other {}",
        a,
        coherence.as_str(),
        tallies[1].forward,
        tallies[1].sideways,
        tallies[1].other()
    );
    Ok(Batch {
        field,
        trajectories,
        tallies,
        sweeper,
        midline_crossings,
    })
}

fn require_stochastic(ctx: &Context) -> Result<(), RunError> {
    if ctx
        .config
        .attenuation
        .kinds
        .contains(&AttenuationKind::Deterministic)
    {
        return Err(RunError::Validation(
            "trajectory runs need stochastic attenuation; deterministic attenuation only defines a time-averaged density"
                .into(),
        ));
    }
    Ok(())
}

fn histogram_rows(rec: &ScreenRecord, to_si: impl Fn(f64) -> f64) -> Vec<Vec<String>> {
    rec.grid
        .centers()
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            vec![
                fmt_f64(to_si(c)),
                rec.counts_total[i].to_string(),
                rec.counts_slit1[i].to_string(),
                rec.counts_slit2[i].to_string(),
            ]
        })
        .collect()
}

const HISTOGRAM_COLUMNS: [&str; 4] = ["bin_center", "counts_total", "counts_slit1", "counts_slit2"];

fn sideways_record(batch: &Batch, bins: usize) -> Result<ScreenRecord, RunError> {
    let grid = sideways_grid(&batch.trajectories, bins).map_err(runtime)?;
    Ok(record(
        &batch.trajectories,
        &ScreenSpec {
            orientation: ScreenOrientation::Sideways,
            grid,
        },
    ))
}

#[derive(Debug, Serialize)]
struct TrajectoryMetrics {
    a: f64,
    mode: AttenuationKind,
    coherence: CoherenceMode,
    #[serde(rename = "V_measured")]
    v_measured: Option<f64>,
    #[serde(rename = "V_theory")]
    v_theory: f64,
    #[serde(rename = "D")]
    d: f64,
    duality_residual: f64,
    n_a: usize,
    median_angle_rad: Option<f64>,
    /// metres
    bunching_iqr: Option<f64>,
    bunching_ratio: Option<f64>,
    sideways_fraction: f64,
    midline_crossings: usize,
    slit1: SlitTally,
    slit2: SlitTally,
}

pub(super) fn trajectories(ctx: &Context, out: &mut OutputDir) -> Result<Outcome, RunError> {
    require_stochastic(ctx)?;
    let section = ctx.config.require_trajectories()?;
    let sampler = ctx.config.sampler(ctx.seed_override)?;
    let setup = &ctx.setup;
    let t_screen = setup.screen_time();
    let mut metrics = Vec::new();

    for &a in &ctx.values {
        for &coherence in &ctx.config.coherence {
            let batch = run_batch(ctx, a, coherence, sampler)?;
            let suffix = format!("{}_{}", coherence.as_str(), tag(a));
            let mut meta = ctx.metadata();
            meta.extend([
                ("a", fmt_f64(a.value())),
                ("attenuation", "stochastic".to_string()),
                ("coherence", coherence.as_str().to_string()),
                ("n_per_slit", section.n_per_slit.to_string()),
                ("sampler", format!("{sampler:?}")),
            ]);
            if let Some(i) = &ctx.config.integrator {
                meta.extend([
                    ("rel_tol", fmt_f64(i.rel_tol)),
                    ("abs_tol_sigma", fmt_f64(i.abs_tol_sigma)),
                    ("max_step_tau", fmt_f64(i.max_step_tau)),
                    ("density_floor", fmt_f64(i.density_floor)),
                ]);
            }

            let mut traj_meta = meta.clone();
            traj_meta.push((
                "units",
                "t in s, x and y in m; slit 2 is attenuated".to_string(),
            ));
            let rows = batch.trajectories.iter().flat_map(|traj| {
                traj.points.iter().map(move |p| {
                    vec![
                        traj.id.to_string(),
                        traj.source_slit.to_string(),
                        fmt_f64(setup.time_to_si(p.t)),
                        fmt_f64(setup.length_to_si(p.x)),
                        fmt_f64(setup.length_to_si(p.y)),
                    ]
                })
            });
            out.write_csv(
                &format!("trajectories_{suffix}.csv"),
                &traj_meta,
                &["traj_id", "slit", "t", "x", "y"],
                rows,
            )?;

            // density and current map
            let xs =
                ctx.screen_grid(section.heatmap_half_width_sigmas, section.heatmap_x_points)?;
            let ts = linspace(0.0, t_screen, section.heatmap_t_points);
            let mut rows = Vec::with_capacity(xs.len() * ts.len());
            let density = 1.0 / setup.length_unit();
            let current = 1.0 / setup.time_unit();
            for &t in &ts {
                for &x in &xs {
                    let s = batch.field.sample(x, t).map_err(runtime)?;
                    rows.push(vec![
                        fmt_f64(setup.length_to_si(x)),
                        fmt_f64(setup.time_to_si(t)),
                        fmt_f64(s.p1 * density),
                        fmt_f64(s.p2 * density),
                        fmt_f64(s.ptot * density),
                        fmt_f64(s.jtot * current),
                        fmt_f64(s.vtot.value().map_or(f64::NAN, |v| setup.velocity_to_si(v))),
                        fmt_f64(s.phi),
                    ]);
                }
            }
            let mut map_meta = meta.clone();
            map_meta.push((
                "units",
                "x in m, t in s, densities in 1/m, current in 1/s, vtot in m/s (nan at nodes), phi in rad".to_string(),
            ));
            out.write_csv(
                &format!("field_{suffix}.csv"),
                &map_meta,
                &["x", "t", "P1", "P2", "Ptot", "Jtot", "vtot", "phi"],
                rows,
            )?;

            let fwd = record(
                &batch.trajectories,
                &ScreenSpec {
                    orientation: ScreenOrientation::Forward,
                    grid: BinGrid::new(xs[0], xs[xs.len() - 1], section.forward_bins)
                        .map_err(runtime)?,
                },
            );
            let mut fwd_meta = meta.clone();
            fwd_meta.push(("units", "bin_center is x in m".to_string()));
            fwd_meta.push(("out_of_range", fwd.out_of_range.to_string()));
            out.write_csv(
                &format!("forward_{suffix}.csv"),
                &fwd_meta,
                &HISTOGRAM_COLUMNS,
                histogram_rows(&fwd, |x| setup.length_to_si(x)),
            )?;
            let side = sideways_record(&batch, section.sideways_bins)?;
            let mut side_meta = meta.clone();
            side_meta.push(("units", "bin_center is y in m".to_string()));
            out.write_csv(
                &format!("sideways_{suffix}.csv"),
                &side_meta,
                &HISTOGRAM_COLUMNS,
                histogram_rows(&side, |y| setup.length_to_si(y)),
            )?;

            let dm = duality_metrics(a);
            metrics.push(TrajectoryMetrics {
                a: a.value(),
                mode: AttenuationKind::Stochastic,
                coherence,
                v_measured: ctx.measured_visibility(a, AttenuationKind::Stochastic, coherence)?,
                v_theory: theory(a, AttenuationKind::Stochastic, coherence),
                d: dm.distinguishability,
                duality_residual: dm.residual,
                n_a: batch.sweeper.n_a,
                median_angle_rad: batch.sweeper.median_angle_rad,
                bunching_iqr: batch.sweeper.iqr_y.map(|y| setup.length_to_si(y)),
                bunching_ratio: batch.sweeper.bunching_ratio,
                sideways_fraction: batch.sweeper.sideways_fraction,
                midline_crossings: batch.midline_crossings,
                slit1: batch.tallies[0],
                slit2: batch.tallies[1],
            });
        }
    }
    out.write_json("trajectory_metrics.json", &metrics)?;
    Ok(Outcome {
        warnings: ctx.warnings.clone(),
        passed: true,
    })
}

/// One row of the transmission-factor sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub a: f64,
    pub coherence: CoherenceMode,
    #[serde(rename = "V_stoch_theory")]
    pub v_stoch_theory: f64,
    #[serde(rename = "V_det_theory")]
    pub v_det_theory: f64,
    #[serde(rename = "V_measured")]
    pub v_measured: Option<f64>,
    #[serde(rename = "D")]
    pub d: f64,
    pub n_a: usize,
    pub launched_slit2: usize,
    pub forward_slit2: usize,
    pub sideways_fraction: f64,
    pub median_angle_rad: Option<f64>,
    /// metres
    pub bunching_iqr: Option<f64>,
    pub bunching_ratio: Option<f64>,
    pub midline_crossings: usize,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), fmt_f64)
}

pub(super) fn sweep_a(ctx: &Context, out: &mut OutputDir) -> Result<Outcome, RunError> {
    require_stochastic(ctx)?;
    if ctx.values.len() < 2 {
        return Err(RunError::Validation(
            "sweep-a needs at least two distinct transmission factors".into(),
        ));
    }
    let section = ctx.config.require_trajectories()?;
    let sampler = ctx.config.sampler(ctx.seed_override)?;
    let setup = &ctx.setup;
    let mut all_rows = Vec::new();
    let mut monotone = Vec::new();

    for &coherence in &ctx.config.coherence {
        let mut rows = Vec::new();
        for &a in &ctx.values {
            let batch = run_batch(ctx, a, coherence, sampler)?;
            let side = sideways_record(&batch, section.sideways_bins)?;
            let mut meta = ctx.metadata();
            meta.extend([
                ("a", fmt_f64(a.value())),
                ("coherence", coherence.as_str().to_string()),
                ("units", "bin_center is y in m".to_string()),
            ]);
            out.write_csv(
                &format!("sweep_sideways_{}_{}.csv", coherence.as_str(), tag(a)),
                &meta,
                &HISTOGRAM_COLUMNS,
                histogram_rows(&side, |y| setup.length_to_si(y)),
            )?;
            rows.push(SweepRow {
                a: a.value(),
                coherence,
                v_stoch_theory: theory(a, AttenuationKind::Stochastic, coherence),
                v_det_theory: theory(a, AttenuationKind::Deterministic, coherence),
                v_measured: ctx.measured_visibility(a, AttenuationKind::Stochastic, coherence)?,
                d: distinguishability(a),
                n_a: batch.sweeper.n_a,
                launched_slit2: batch.sweeper.launched,
                forward_slit2: batch.sweeper.forward,
                sideways_fraction: batch.sweeper.sideways_fraction,
                median_angle_rad: batch.sweeper.median_angle_rad,
                bunching_iqr: batch.sweeper.iqr_y.map(|y| setup.length_to_si(y)),
                bunching_ratio: batch.sweeper.bunching_ratio,
                midline_crossings: batch.midline_crossings,
            });
        }
        // values run from large to small a
        let nondecreasing = rows
            .windows(2)
            .all(|w| w[1].sideways_fraction >= w[0].sideways_fraction);
        monotone.push((coherence, nondecreasing));

        let mut meta = ctx.metadata();
        meta.extend([
            ("coherence", coherence.as_str().to_string()),
            ("n_per_slit", section.n_per_slit.to_string()),
            ("units", "angles in rad, bunching_iqr in m".to_string()),
        ]);
        let csv_rows = rows.iter().map(|r| {
            vec![
                fmt_f64(r.a),
                fmt_f64(r.v_stoch_theory),
                fmt_f64(r.v_det_theory),
                opt(r.v_measured),
                fmt_f64(r.d),
                r.n_a.to_string(),
                r.launched_slit2.to_string(),
                r.forward_slit2.to_string(),
                fmt_f64(r.sideways_fraction),
                opt(r.median_angle_rad),
                opt(r.bunching_iqr),
                opt(r.bunching_ratio),
                r.midline_crossings.to_string(),
            ]
        });
        out.write_csv(
            &format!("sweep_{}.csv", coherence.as_str()),
            &meta,
            &[
                "a",
                "V_stoch_theory",
                "V_det_theory",
                "V_measured",
                "D",
                "n_a",
                "launched_slit2",
                "forward_slit2",
                "sideways_fraction",
                "median_angle_rad",
                "bunching_iqr",
                "bunching_ratio",
                "midline_crossings",
            ],
            csv_rows,
        )?;
        all_rows.extend(rows);
    }

    #[derive(Serialize)]
    struct Report {
        rows: Vec<SweepRow>,
        sideways_fraction_nondecreasing: Vec<(CoherenceMode, bool)>,
    }
    out.write_json(
        "sweep_metrics.json",
        &Report {
            rows: all_rows,
            sideways_fraction_nondecreasing: monotone,
        },
    )?;
    Ok(Outcome {
        warnings: ctx.warnings.clone(),
        passed: true,
    })
}

pub(super) fn duality_table(ctx: &Context, out: &mut OutputDir) -> Result<Outcome, RunError> {
    ctx.config.require_profile()?;
    let mut rows = Vec::new();
    let mut residuals = Vec::new();
    for &a in &ctx.values {
        let measured = |kind| ctx.measured_visibility(a, kind, CoherenceMode::Coherent);
        rows.push(vec![
            fmt_f64(a.value()),
            fmt_f64(theoretical_visibility(a, AttenuationKind::Stochastic).value),
            fmt_f64(theoretical_visibility(a, AttenuationKind::Deterministic).value),
            opt(measured(AttenuationKind::Stochastic)?),
            opt(measured(AttenuationKind::Deterministic)?),
        ]);
        residuals.push(duality_metrics(a));
    }
    let mut meta = ctx.metadata();
    meta.push(("coherence", "coherent".to_string()));
    out.write_csv(
        "duality_table.csv",
        &meta,
        &[
            "a",
            "V_stoch_theory",
            "V_det_theory",
            "V_stoch_measured",
            "V_det_measured",
        ],
        rows,
    )?;
    #[derive(Serialize)]
    struct Entry {
        a: f64,
        #[serde(rename = "V")]
        v: f64,
        #[serde(rename = "D")]
        d: f64,
        duality_residual: f64,
    }
    let entries: Vec<Entry> = ctx
        .values
        .iter()
        .zip(&residuals)
        .map(|(a, m)| Entry {
            a: a.value(),
            v: m.visibility,
            d: m.distinguishability,
            duality_residual: m.residual,
        })
        .collect();
    out.write_json("duality_metrics.json", &entries)?;
    Ok(Outcome {
        warnings: ctx.warnings.clone(),
        passed: true,
    })
}

/// One verified quantity against its tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub a: f64,
    pub coherence: CoherenceMode,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub(super) fn verify(ctx: &Context, out: &mut OutputDir) -> Result<Outcome, RunError> {
    let section = ctx.config.require_verify()?;
    let setup = &ctx.setup;
    let tau = setup.spreading_time();
    let grid = ScanGrid {
        times: vec![0.1 * tau, tau, setup.screen_time()],
        points_per_time: section.points_per_time,
        half_width_sigmas: section.half_width_sigmas,
    };
    let open = setup.packets();
    let mut checks = Vec::new();
    let mut push = |name: &str, a: TransmissionFactor, coherence, value: f64, tolerance: f64| {
        checks.push(CheckResult {
            name: name.to_string(),
            a: a.value(),
            coherence,
            value,
            tolerance,
            passed: value <= tolerance,
        });
    };
    for &a in &ctx.values {
        let r = oracle_equivalence(&open, a, &grid).map_err(runtime)?;
        push(
            "oracle_density",
            a,
            CoherenceMode::Coherent,
            r.density_relative,
            DENSITY_TOLERANCE,
        );
        push(
            "oracle_velocity",
            a,
            CoherenceMode::Coherent,
            r.velocity_relative,
            VELOCITY_TOLERANCE,
        );
        push(
            "oracle_node_agreement",
            a,
            CoherenceMode::Coherent,
            r.node_disagreements as f64,
            0.0,
        );
        for &coherence in &ctx.config.coherence {
            let c = continuity_residual(
                &open,
                a,
                coherence,
                &grid,
                section.dt_tau * tau,
                section.dx_sigma,
            )
            .map_err(runtime)?;
            push(
                "continuity",
                a,
                coherence,
                c.relative_residual,
                CONTINUITY_TOLERANCE,
            );
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    for c in checks.iter().filter(|c| !c.passed) {
        log::error!(
            "{} failed at a = {} ({:?}): {} > {}",
            c.name,
            c.a,
            c.coherence,
            c.value,
            c.tolerance
        );
    }
    #[derive(Serialize)]
    struct Report<'a> {
        passed: bool,
        checks: &'a [CheckResult],
    }
    out.write_json(
        "verify_report.json",
        &Report {
            passed,
            checks: &checks,
        },
    )?;
    Ok(Outcome {
        warnings: ctx.warnings.clone(),
        passed,
    })
}
