//! Two-electrode realization of the harmonic controls: voltage synthesis,
//! voltage noise, effective-control reconstruction and the force fields
//! used to simulate the ion in the resulting potential.

mod effective;
mod fields;
mod geometry;
mod sweep;
mod voltage;

pub use effective::{
    extract_effective_controls, refine_stationary_point, stationary_points, EffectiveControls, SearchWindow,
    CENTER_RESOLUTION,
};
pub use fields::{EffectiveHarmonicField, ExpansionFrame, FullPotentialField};
pub use geometry::{
    effective_potential, EffectivePotential, ElectrodeGeometry, GaussianElectrode, ShapeFunction, ShapeJet,
    EXTENT_SIGMAS,
};
pub use sweep::{
    noise_sweep, run_trace, shot_seed, ForceModel, NoiseSweep, NoiseSweepOptions, NoiseSweepRow, ShotStatistics,
    MIN_SHOTS,
};
pub use voltage::{
    perturb_voltages, stage_times, synthesize_voltages, NoiseMode, NoiseModel, Provenance, VoltageCeiling,
    VoltageTrace, DEGENERACY_THRESHOLD,
};

use thiserror::Error;

use crate::design::DesignError;
use crate::dynamics::DynamicsError;
use crate::physics::PhysicsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElectrodeError {
    #[error("invalid electrode geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("degenerate electrode geometry at t = {time} s")]
    DegenerateGeometry { time: f64 },
    #[error("non-finite voltage at t = {time} s")]
    NonFiniteVoltage { time: f64 },
    #[error("noise sweep needs at least {MIN_SHOTS} shots, got {0}")]
    TooFewShots(usize),
    #[error("shot {shot} at dU/U = {level}: {source}")]
    Shot {
        shot: usize,
        level: f64,
        source: Box<ElectrodeError>,
    },
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}
