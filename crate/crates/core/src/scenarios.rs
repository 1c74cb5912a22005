//! Reference configurations: single-ion extraction of N2+ at 5 km/s, the
//! energy-versus-temperature launches at 1 km/s, and the radial beamline.

use crate::beamline::{BeamlineSpec, PipelineOptions, RadialTargets, ScalingMode};
use crate::design::{
    build_boundary_conditions, optimize_free_coefficients, solve_constrained_polynomials, AxialTargets, DesignError,
    FreeCoefficients, OptimizeOptions, OptimizeOutcome, ShapeParams,
};
use crate::dynamics::DEFAULT_STEPS;
use crate::electrodes::{ElectrodeGeometry, ForceModel, GaussianElectrode, VoltageCeiling};
use crate::physics::{IonSpecies, ThermalSpec};

pub const TRAP_FREQUENCY: f64 = std::f64::consts::TAU * 0.85e6;
pub const EXTRACTION_DURATION: f64 = 0.94e-6;
pub const EXTRACTION_TEMPERATURE: f64 = 1000.0;

/// R = 1/5, 5 km/s, ending 250 um out at 10 km/s after 0.94 us.
pub fn extraction_targets() -> AxialTargets {
    AxialTargets::for_mean_velocity(
        0.2,
        5000.0,
        TRAP_FREQUENCY,
        TRAP_FREQUENCY,
        250e-6,
        10e3,
        EXTRACTION_DURATION,
        IonSpecies::n2_plus().mass(),
    )
}

/// Midpoint value of `u` for the extraction design. Lower values leave no
/// free-coefficient choice that keeps the voltages within a few volts.
pub const EXTRACTION_U_MID: f64 = 13.0;

/// Ceiling imposed on both electrode voltages while optimizing the
/// extraction design (V). Kept below 10 V so that dense stage grids stay
/// under 10 V as well.
pub const EXTRACTION_VOLTAGE_LIMIT: f64 = 9.0;

pub fn extraction_shape() -> ShapeParams {
    ShapeParams {
        u_mid: EXTRACTION_U_MID,
        free: FreeCoefficients::default(),
    }
}

/// Two Gaussian electrodes with A = 0.2 and sigma = 200 um, centered at 0
/// and 250 um.
pub fn extraction_geometry() -> ElectrodeGeometry {
    let electrode = |center| GaussianElectrode::new(0.2, center, 200e-6).expect("valid electrode");
    ElectrodeGeometry::gaussian_pair(electrode(0.0), electrode(250e-6))
}

/// The extraction design with free coefficients chosen to minimize the
/// peak potential energy at 1000 K under the voltage ceiling.
pub fn extraction_design() -> Result<OptimizeOutcome, DesignError> {
    let targets = extraction_targets();
    let bcs = build_boundary_conditions(&targets)?;
    let pair = solve_constrained_polynomials(&bcs, extraction_shape())?;
    let species = IonSpecies::n2_plus();
    let thermal = ThermalSpec::new(EXTRACTION_TEMPERATURE, targets.omega_start, targets.mass)?;
    let ceiling = VoltageCeiling::new(extraction_geometry(), species.charge(), EXTRACTION_VOLTAGE_LIMIT);
    optimize_free_coefficients(
        &pair,
        &thermal,
        OptimizeOptions {
            constraint: Some(&ceiling),
            ..Default::default()
        },
    )
}

/// Slow launch used for the peak-energy study: R = 1/2, mean velocity
/// 1 km/s, trap center ending 250 um out at 2 km/s.
pub fn slow_launch_targets() -> AxialTargets {
    AxialTargets::for_mean_velocity(
        0.5,
        1000.0,
        TRAP_FREQUENCY,
        TRAP_FREQUENCY,
        250e-6,
        2000.0,
        EXTRACTION_DURATION,
        IonSpecies::n2_plus().mass(),
    )
}

/// Radial secular frequency.
pub const RADIAL_FREQUENCY: f64 = std::f64::consts::TAU * 1.4e6;

/// Radial protocol at constant trap frequency lasting `1 / w_r`.
pub fn radial_targets(mode: ScalingMode, scaling: f64) -> RadialTargets {
    RadialTargets {
        omega_start: RADIAL_FREQUENCY,
        omega_end: RADIAL_FREQUENCY,
        mode,
        scaling,
        duration: 1.0 / RADIAL_FREQUENCY,
        mass: IonSpecies::n2_plus().mass(),
    }
}

/// 300 mm of free flight at 5e4 m/s into a lens with F = 13 mm.
pub fn fig3_beamline() -> BeamlineSpec {
    BeamlineSpec {
        flight_distance: 0.3,
        focal_length: 13e-3,
        longitudinal_velocity: 5e4,
    }
}

/// Ideal voltages, effective-harmonic force, both axes thermal at
/// `temperature`.
pub fn pipeline_options(temperature: f64, n_samples: usize) -> PipelineOptions {
    let species = IonSpecies::n2_plus();
    let m = species.mass();
    PipelineOptions {
        species,
        axial_thermal: ThermalSpec::new(temperature, TRAP_FREQUENCY, m).expect("valid thermal state"),
        radial_thermal: ThermalSpec::new(temperature, RADIAL_FREQUENCY, m).expect("valid thermal state"),
        beamline: fig3_beamline(),
        noise: None,
        force: ForceModel::EffectiveHarmonic,
        n_samples,
        n_steps: DEFAULT_STEPS,
        checkpoints: 20,
        axial_seed: 1,
        radial_seed: 2,
    }
}
