//! Inverse engineering of the axial controls from boundary targets.

mod artifact;
mod controls;
mod energy;
mod optimize;
mod solve;
mod targets;
mod validate;

pub use artifact::{ArtifactError, DesignArtifact, ARTIFACT_FORMAT};
pub use controls::{extract_controls, ControlModel, ControlWaveform, K_FLOOR_FRACTION};
pub use energy::{peak_potential_energy, potential_energy_profile};
pub use optimize::{optimize_free_coefficients, DesignConstraint, OptimizeOptions, OptimizeOutcome};
pub use solve::{
    solve_constrained_polynomials, solve_static_center, static_trap_pair, u_minimum, AuxiliaryPair, FreeCoefficients,
    ShapeParams, DETECTION_GRID, F_DEGREE, MAX_MATCHED_ROOTS, U_DEGREE,
};
pub use targets::{build_boundary_conditions, AxialTargets, BoundaryConditions, CONDITION_NAMES};
pub use validate::{
    boundary_residuals, validate_against, validate_design, ValidationReport, BC_TOLERANCE, FDOT_TOLERANCE,
    K_BOUNDARY_TOLERANCE,
};

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::physics::PhysicsError;
use crate::poly::PolyError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("invalid target '{key}': {reason}")]
    InvalidTarget { key: &'static str, reason: String },
    #[error("singular linear system while solving for {0}")]
    SingularSystem(&'static str),
    #[error("u sign change: minimum of u is {minimum}")]
    USignChange { minimum: f64 },
    #[error(
        "insufficient free coefficients: u'' has {roots} interior roots, at most {MAX_MATCHED_ROOTS} can be matched"
    )]
    InsufficientFreeCoefficients { roots: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}
