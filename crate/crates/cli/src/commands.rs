//! The `design`, `simulate`, `sweep` and `report` commands.

use std::fs;
use std::path::{Path, PathBuf};

use beamforge_core::beamline::{
    design_radial, end_to_end_report, free_flight_dispersion, lens_impact_spread, radial_sweep, BeamlineError,
    BeamlineSpec, PipelineOptions, RadialTargets, ScalingMode,
};
use beamforge_core::design::{
    build_boundary_conditions, extract_controls, optimize_free_coefficients, peak_potential_energy,
    potential_energy_profile, solve_constrained_polynomials, static_trap_pair, validate_against, validate_design,
    ArtifactError, AuxiliaryPair, AxialTargets, ControlModel, DesignArtifact, DesignError, FreeCoefficients,
    OptimizeOptions, OptimizeOutcome, ShapeParams, ValidationReport,
};
use beamforge_core::dynamics::{moments_of, sample_thermal, DynamicsError, MIN_STEPS};
use beamforge_core::electrodes::{
    extract_effective_controls, noise_sweep, run_trace, stage_times, synthesize_voltages, ElectrodeError,
    ElectrodeGeometry, ForceModel, GaussianElectrode, NoiseMode, NoiseModel, NoiseSweepOptions, SearchWindow,
    VoltageCeiling,
};
use beamforge_core::physics::{thermal_moments, IonSpecies, PhysicsError, ThermalSpec, ELEMENTARY_CHARGE};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::output::{
    effective_table, key_values, num, snapshot_table, trajectory_table, voltage_table, waveform_table, OutputDir, Table,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Artifact { path: PathBuf, source: ArtifactError },
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Electrode(#[from] ElectrodeError),
    #[error(transparent)]
    Beamline(#[from] BeamlineError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

impl CliError {
    /// 1 for unusable input, 2 for a computation that could not meet its
    /// contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) | CliError::Io { .. } | CliError::Artifact { .. } => 1,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn config_err(key: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(ConfigError::Value {
        key: key.to_string(),
        reason: reason.to_string(),
    })
}

/// Whether the command met its acceptance contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Passed,
    Failed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Passed => 0,
            Outcome::Failed => 2,
        }
    }

    fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Passed
        } else {
            Outcome::Failed
        }
    }
}

pub fn species(cfg: &RunConfig) -> Result<IonSpecies, CliError> {
    IonSpecies::new(cfg.real("species.mass"), cfg.real("species.charge") * ELEMENTARY_CHARGE)
        .map_err(|e| config_err("species.mass", e))
}

pub fn axial_targets(cfg: &RunConfig) -> AxialTargets {
    AxialTargets::for_mean_velocity(
        cfg.real("axial.scaling"),
        cfg.real("axial.velocity"),
        cfg.real("axial.freq_start"),
        cfg.real("axial.freq_end"),
        cfg.real("axial.final_center"),
        cfg.real("axial.final_center_velocity"),
        cfg.real("axial.duration"),
        cfg.real("species.mass"),
    )
}

pub fn axial_thermal(cfg: &RunConfig, temperature: f64) -> Result<ThermalSpec, CliError> {
    ThermalSpec::new(temperature, cfg.real("axial.freq_start"), cfg.real("species.mass"))
        .map_err(|e| config_err("thermal.temperature", e))
}

pub fn radial_thermal(cfg: &RunConfig, temperature: f64) -> Result<ThermalSpec, CliError> {
    ThermalSpec::new(temperature, cfg.real("radial.freq_start"), cfg.real("species.mass"))
        .map_err(|e| config_err("thermal.temperature", e))
}

pub fn geometry(cfg: &RunConfig) -> Result<ElectrodeGeometry, CliError> {
    let electrode = |i: usize| {
        GaussianElectrode::new(
            cfg.real(&format!("electrode{i}.amplitude")),
            cfg.real(&format!("electrode{i}.center")),
            cfg.real(&format!("electrode{i}.sigma")),
        )
        .map_err(|e| config_err(&format!("electrode{i}"), e))
    };
    Ok(ElectrodeGeometry::gaussian_pair(electrode(1)?, electrode(2)?))
}

pub fn beamline(cfg: &RunConfig) -> BeamlineSpec {
    BeamlineSpec {
        flight_distance: cfg.real("beamline.flight_distance"),
        focal_length: cfg.real("beamline.focal_length"),
        longitudinal_velocity: cfg.real("beamline.velocity"),
    }
}

pub fn radial_targets(cfg: &RunConfig) -> RadialTargets {
    let mode = match cfg.text("radial.mode") {
        "position" => ScalingMode::Position,
        _ => ScalingMode::Momentum,
    };
    RadialTargets {
        omega_start: cfg.real("radial.freq_start"),
        omega_end: cfg.real("radial.freq_end"),
        mode,
        scaling: cfg.real("radial.scaling"),
        duration: cfg.real("radial.duration"),
        mass: cfg.real("species.mass"),
    }
}

fn steps(cfg: &RunConfig) -> Result<usize, CliError> {
    let n = cfg.count("simulate.steps") as usize;
    if n < MIN_STEPS {
        return Err(config_err(
            "simulate.steps",
            format!("at least {MIN_STEPS} steps required, got {n}"),
        ));
    }
    Ok(n)
}

fn force_model(cfg: &RunConfig) -> ForceModel {
    cfg.text("noise.force").parse().expect("schema restricts force models")
}

fn noise_mode(cfg: &RunConfig) -> NoiseMode {
    cfg.text("noise.mode").parse().expect("schema restricts noise modes")
}

pub fn seeds(cfg: &RunConfig) -> (u64, u64, u64) {
    let s = cfg.count("run.seed");
    (s, s.wrapping_add(1), s.wrapping_add(2))
}

/// The axial design and, when optimized, the optimizer's outcome.
#[derive(Debug, Clone)]
pub struct AxialDesign {
    pub pair: AuxiliaryPair,
    pub optimization: Option<OptimizeOutcome>,
    /// Peak potential energy before optimization (J).
    pub baseline_peak: f64,
    pub peak: f64,
}

fn read_artifact(path: &Path) -> Result<AuxiliaryPair, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("design.artifact: cannot read design '{}': {e}", path.display())))?;
    DesignArtifact::parse(&text)
        .map(|a| a.pair)
        .map_err(|source| CliError::Artifact {
            path: path.to_path_buf(),
            source,
        })
}

fn unoptimized_pair(cfg: &RunConfig) -> Result<AuxiliaryPair, CliError> {
    let artifact = cfg.text("design.artifact");
    if !artifact.is_empty() {
        return read_artifact(Path::new(artifact));
    }
    let m = cfg.real("species.mass");
    if cfg.text("axial.kind") == "static" {
        return Ok(static_trap_pair(
            cfg.real("axial.freq_start"),
            cfg.real("axial.duration"),
            m,
        )?);
    }
    let targets = axial_targets(cfg);
    let bcs = build_boundary_conditions(&targets).map_err(|e| match e {
        DesignError::InvalidTarget { key, reason } => config_err(&format!("axial.{key}"), reason),
        other => other.into(),
    })?;
    let shape = ShapeParams {
        u_mid: cfg.real("axial.u_mid"),
        free: FreeCoefficients {
            a9: cfg.real("axial.a9"),
            a10: cfg.real("axial.a10"),
            b10: cfg.real("axial.b10"),
            b11: cfg.real("axial.b11"),
        },
    };
    Ok(solve_constrained_polynomials(&bcs, shape)?)
}

/// Solve (and optionally optimize) the axial design for initial
/// temperature `temperature`.
pub fn axial_design(cfg: &RunConfig, temperature: f64) -> Result<AxialDesign, CliError> {
    let pair = unoptimized_pair(cfg)?;
    let thermal = axial_thermal(cfg, temperature)?;
    let grid = cfg.count("optimize.grid") as usize;
    let baseline_peak = peak_potential_energy(&pair, &thermal, grid)?;
    let optimizable = cfg.text("design.artifact").is_empty() && cfg.text("axial.kind") == "polynomial";
    if !(optimizable && cfg.flag("axial.optimize")) {
        return Ok(AxialDesign {
            pair,
            optimization: None,
            baseline_peak,
            peak: baseline_peak,
        });
    }
    let limit = cfg.real("axial.voltage_limit");
    let ceiling = VoltageCeiling::new(geometry(cfg)?, species(cfg)?.charge(), limit);
    let options = OptimizeOptions {
        grid_size: grid,
        max_iterations: cfg.count("optimize.max_iterations") as usize,
        restarts: cfg.count("optimize.restarts") as usize,
        constraint: (limit > 0.0).then_some(&ceiling as _),
        ..Default::default()
    };
    let out = optimize_free_coefficients(&pair, &thermal, options)?;
    Ok(AxialDesign {
        pair: out.pair.clone(),
        baseline_peak,
        peak: out.peak_energy,
        optimization: Some(out),
    })
}

pub fn validate_axial(cfg: &RunConfig, pair: &AuxiliaryPair) -> ValidationReport {
    if cfg.text("axial.kind") == "static" {
        validate_against(pair, &pair.bcs)
    } else {
        validate_design(pair, &axial_targets(cfg))
    }
}

pub fn radial_design(cfg: &RunConfig) -> Result<Option<AuxiliaryPair>, CliError> {
    if cfg.text("radial.mode") == "none" {
        return Ok(None);
    }
    Ok(Some(design_radial(&radial_targets(cfg))?))
}

fn design_metadata(design: &AxialDesign, max_voltage: f64) -> Vec<(String, String)> {
    let ev = |e: f64| num(e / ELEMENTARY_CHARGE);
    let mut meta = vec![
        ("meta.peak_energy_ev".into(), ev(design.peak)),
        ("meta.baseline_peak_energy_ev".into(), ev(design.baseline_peak)),
        ("meta.max_voltage".into(), num(max_voltage)),
    ];
    if let Some(o) = &design.optimization {
        meta.push(("meta.optimizer_iterations".into(), o.iterations.to_string()));
        meta.push(("meta.optimizer_evaluations".into(), o.evaluations.to_string()));
        meta.push((
            "meta.optimizer_warning".into(),
            o.warning.clone().unwrap_or_else(|| "none".into()),
        ));
    }
    meta
}

fn open_output(out: &Path) -> Result<OutputDir, CliError> {
    OutputDir::create(out).map_err(io_err(out))
}

fn write(dir: &mut OutputDir, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.path().join(name);
    dir.write(name, text).map_err(io_err(&path))
}

fn write_table(dir: &mut OutputDir, name: &str, table: &Table) -> Result<(), CliError> {
    write(dir, name, &table.to_csv())
}

fn finish(dir: OutputDir, cfg_text: &str) -> Result<(), CliError> {
    let path = dir.path().join("manifest.txt");
    dir.finish(cfg_text).map_err(io_err(&path))
}

/// Coefficients, control waveform, voltages, energy profile and the
/// validation report.
pub fn cmd_design(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let cfg_text = cfg.to_text();
    let temperature = cfg.real("thermal.temperature");
    let design = axial_design(cfg, temperature)?;
    let report = validate_axial(cfg, &design.pair);
    let model = ControlModel::new(&design.pair)?;
    let waveform = extract_controls(&design.pair, cfg.count("design.grid") as usize)?;
    let geo = geometry(cfg)?;
    let sp = species(cfg)?;
    let trace = synthesize_voltages(&model, &geo, sp.charge(), &waveform.times)?;
    let thermal = axial_thermal(cfg, temperature)?;
    let profile = potential_energy_profile(&design.pair, &thermal, cfg.count("design.grid") as usize)?;

    let mut dir = open_output(out)?;
    write(&mut dir, "config.resolved", &cfg_text)?;
    let artifact = DesignArtifact::new(design.pair.clone()).with_metadata(design_metadata(&design, trace.max_abs()));
    write(&mut dir, "axial_design.txt", &artifact.to_text())?;
    write_table(&mut dir, "axial_waveform.csv", &waveform_table(&waveform))?;
    write_table(&mut dir, "voltages.csv", &voltage_table(&trace))?;
    let mut energy = Table::new(&["t", "e_p_ev"]);
    for (t, e) in profile {
        energy.push(&[t, e / ELEMENTARY_CHARGE]);
    }
    write_table(&mut dir, "energy.csv", &energy)?;

    let mut lines = report.to_lines();
    lines.push(("max_voltage".into(), num(trace.max_abs())));
    let mut pass = report.passed();
    if let Some(radial) = radial_design(cfg)? {
        let rr = validate_against(&radial, &radial.bcs);
        pass &= rr.passed();
        lines.extend(rr.to_lines().into_iter().map(|(k, v)| (format!("radial.{k}"), v)));
        write(
            &mut dir,
            "radial_design.txt",
            &DesignArtifact::new(radial.clone()).to_text(),
        )?;
        let rw = extract_controls(&radial, cfg.count("design.grid") as usize)?;
        write_table(&mut dir, "radial_waveform.csv", &waveform_table(&rw))?;
    }
    lines.push(("pass".into(), pass.to_string()));
    write(&mut dir, "validation.txt", &key_values(&lines))?;
    finish(dir, &cfg_text)?;
    Ok(Outcome::from_pass(pass))
}

pub fn pipeline_options(cfg: &RunConfig) -> Result<PipelineOptions, CliError> {
    let temperature = cfg.real("thermal.temperature");
    let (axial_seed, radial_seed, noise_seed) = seeds(cfg);
    let level = cfg.real("noise.level");
    let noise = if level > 0.0 {
        Some(NoiseModel::new(level, noise_mode(cfg), noise_seed)?)
    } else {
        None
    };
    Ok(PipelineOptions {
        species: species(cfg)?,
        axial_thermal: axial_thermal(cfg, temperature)?,
        radial_thermal: radial_thermal(cfg, temperature)?,
        beamline: beamline(cfg),
        noise,
        force: force_model(cfg),
        n_samples: cfg.count("simulate.samples") as usize,
        n_steps: steps(cfg)?,
        checkpoints: cfg.count("simulate.checkpoints") as usize,
        axial_seed,
        radial_seed,
    })
}

/// Axial and radial ensembles, free flight and lens.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let cfg_text = cfg.to_text();
    let design = axial_design(cfg, cfg.real("thermal.temperature"))?;
    let report = validate_axial(cfg, &design.pair);
    let model = ControlModel::new(&design.pair)?;
    let radial = radial_design(cfg)?;
    let geo = geometry(cfg)?;
    let options = pipeline_options(cfg)?;
    let run = end_to_end_report(&model, radial.as_ref(), &geo, &options)?;

    let mut dir = open_output(out)?;
    write(&mut dir, "config.resolved", &cfg_text)?;
    write_table(&mut dir, "trajectory.csv", &trajectory_table(&run.axial))?;
    write_table(
        &mut dir,
        "snapshot_initial.csv",
        &snapshot_table(&run.axial.snapshots[0]),
    )?;
    write_table(
        &mut dir,
        "snapshot_final.csv",
        &snapshot_table(run.axial.final_points()),
    )?;
    write_table(&mut dir, "voltages.csv", &voltage_table(&run.trace))?;
    if let Some(r) = &run.radial {
        write_table(&mut dir, "radial_trajectory.csv", &trajectory_table(r))?;
    }
    if options.noise.is_some() {
        let (lo, hi) = geo.region();
        let window = SearchWindow::new(lo, hi).with_hint(model.bridged_center(0.0));
        let eff = extract_effective_controls(&geo, &run.trace, options.species.charge(), model.mass(), &window);
        write_table(&mut dir, "effective_controls.csv", &effective_table(&eff))?;
    }
    let mut lines = run.report.to_lines();
    lines.push(("design.pass".into(), report.passed().to_string()));
    write(&mut dir, "report.txt", &key_values(&lines))?;
    finish(dir, &cfg_text)?;
    Ok(Outcome::from_pass(report.passed()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Noise,
    Temperature,
    Radial,
    Velocity,
}

impl std::str::FromStr for SweepAxis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "noise" => Ok(SweepAxis::Noise),
            "temperature" => Ok(SweepAxis::Temperature),
            "R_r" | "radial" => Ok(SweepAxis::Radial),
            "velocity" => Ok(SweepAxis::Velocity),
            other => Err(CliError::Usage(format!(
                "unknown sweep axis '{other}' (expected noise, temperature, R_r or velocity)"
            ))),
        }
    }
}

impl SweepAxis {
    fn file_name(self) -> &'static str {
        match self {
            SweepAxis::Noise => "sweep_noise.csv",
            SweepAxis::Temperature => "sweep_temperature.csv",
            SweepAxis::Radial => "sweep_radial.csv",
            SweepAxis::Velocity => "sweep_velocity.csv",
        }
    }

    fn values_key(self) -> &'static str {
        match self {
            SweepAxis::Noise => "sweep.noise.levels",
            SweepAxis::Temperature => "sweep.temperature.values",
            SweepAxis::Radial => "sweep.radial.values",
            SweepAxis::Velocity => "sweep.velocity.values",
        }
    }
}

/// Radial width at the lens and impact spot for the configured radial
/// protocol at `temperature`: `(Δr, Δα, Δr_impact)`.
fn radial_spot(cfg: &RunConfig, temperature: f64, scaling: Option<f64>) -> Result<(f64, f64, f64), CliError> {
    let thermal = radial_thermal(cfg, temperature)?;
    let bl = beamline(cfg);
    let (_, radial_seed, _) = seeds(cfg);
    let n = cfg.count("simulate.samples") as usize;
    let scaling = match (cfg.text("radial.mode"), scaling) {
        ("none", None) => None,
        (_, Some(s)) => Some(s),
        (_, None) => Some(cfg.real("radial.scaling")),
    };
    match scaling {
        Some(s) => {
            let rows = radial_sweep(&radial_targets(cfg), &[s], &thermal, &bl, n, steps(cfg)?, radial_seed)?;
            Ok((rows[0].delta_r_lens, rows[0].delta_alpha, rows[0].delta_r_impact))
        }
        None => {
            let ens = sample_thermal(thermal_moments(&thermal)?, n, radial_seed)?;
            let dr = free_flight_dispersion(
                &moments_of(&ens.samples),
                bl.flight_distance,
                bl.longitudinal_velocity,
                thermal.mass,
            );
            let (a, i) = lens_impact_spread(dr, &bl);
            Ok((dr, a, i))
        }
    }
}

/// One CSV row per value on the chosen axis, in the configured order.
pub fn cmd_sweep(cfg: &RunConfig, axis: SweepAxis, out: &Path) -> Result<Outcome, CliError> {
    let cfg_text = cfg.to_text();
    let values = cfg.reals(axis.values_key()).to_vec();
    if values.is_empty() {
        return Err(config_err(axis.values_key(), "needs at least one value"));
    }
    let sp = species(cfg)?;
    let geo = geometry(cfg)?;
    let temperature = cfg.real("thermal.temperature");
    let (seed, _, _) = seeds(cfg);
    let table = match axis {
        SweepAxis::Noise => {
            let design = axial_design(cfg, temperature)?;
            let model = ControlModel::new(&design.pair)?;
            let options = NoiseSweepOptions {
                levels: values,
                shots: cfg.count("sweep.noise.shots") as usize,
                n_samples: cfg.count("sweep.noise.samples") as usize,
                seed,
                mode: noise_mode(cfg),
                force: force_model(cfg),
                n_steps: steps(cfg)?,
            };
            let sweep = noise_sweep(&model, &geo, &sp, &axial_thermal(cfg, temperature)?, &options)?;
            let mut t = Table::new(&[
                "du_over_u",
                "v_mean",
                "v_std",
                "r_eff",
                "escaped_fraction",
                "v_deviation",
            ]);
            for r in &sweep.rows {
                t.push(&[
                    r.du_over_u,
                    r.v_mean,
                    r.v_std,
                    r.r_eff,
                    r.escaped_fraction,
                    r.v_deviation,
                ]);
            }
            t
        }
        SweepAxis::Temperature => {
            let mut t = Table::new(&[
                "t0",
                "peak_energy_baseline_ev",
                "peak_energy_ev",
                "delta_r_lens",
                "delta_r_impact",
            ]);
            for &t0 in &values {
                let design = axial_design(cfg, t0)?;
                let (dr, _, impact) = radial_spot(cfg, t0, None)?;
                t.push(&[
                    t0,
                    design.baseline_peak / ELEMENTARY_CHARGE,
                    design.peak / ELEMENTARY_CHARGE,
                    dr,
                    impact,
                ]);
            }
            t
        }
        SweepAxis::Radial => {
            let mut t = Table::new(&["r_r", "delta_r_lens", "delta_alpha", "delta_r_impact"]);
            for &r in &values {
                let (dr, a, impact) = radial_spot(cfg, temperature, Some(r))?;
                t.push(&[r, dr, a, impact]);
            }
            t
        }
        SweepAxis::Velocity => {
            let mut t = Table::new(&["v_target", "v_mean", "v_std", "r_eff", "peak_energy_ev", "max_voltage"]);
            let n_steps = steps(cfg)?;
            let thermal = axial_thermal(cfg, temperature)?;
            let ens = sample_thermal(thermal_moments(&thermal)?, cfg.count("simulate.samples") as usize, seed)?;
            for &v in &values {
                let mut c = cfg.clone();
                c.set("axial.velocity", &format!("{v:e}"))?;
                let design = axial_design(&c, temperature)?;
                let model = ControlModel::new(&design.pair)?;
                let trace = synthesize_voltages(&model, &geo, sp.charge(), &stage_times(model.duration(), n_steps))?;
                let s = run_trace(&model, &geo, &sp, &ens.samples, &trace, force_model(cfg), n_steps)?;
                t.push(&[
                    v,
                    s.v_mean,
                    s.v_std,
                    s.r_eff,
                    design.peak / ELEMENTARY_CHARGE,
                    trace.max_abs(),
                ]);
            }
            t
        }
    };
    let mut dir = open_output(out)?;
    write(&mut dir, "config.resolved", &cfg_text)?;
    write_table(&mut dir, axis.file_name(), &table)?;
    finish(dir, &cfg_text)?;
    Ok(Outcome::Passed)
}

/// Re-validate a stored axial design against the configured targets and
/// print the report.
pub fn cmd_report(cfg: &RunConfig, out: &Path) -> Result<(Outcome, String), CliError> {
    let artifact = cfg.text("design.artifact");
    let path = if artifact.is_empty() {
        out.join("axial_design.txt")
    } else {
        PathBuf::from(artifact)
    };
    let pair = read_artifact(&path)?;
    let report = validate_axial(cfg, &pair);
    let mut lines = vec![("design".to_string(), path.display().to_string())];
    lines.extend(report.to_lines());
    lines.push(("pass".into(), report.passed().to_string()));
    Ok((Outcome::from_pass(report.passed()), key_values(&lines)))
}
