//! Phase-space propagation: analytic moments through the invariant
//! integrals and seeded Monte-Carlo ensembles evolved classically.

mod analytic;
mod evolve;
mod integrals;
mod sampling;

pub use analytic::{analytic_moments, invariant_value, LinearMap};
pub use evolve::{
    evolve_ensemble, evolve_ensemble_with, EvolveOptions, ForceField, HarmonicField, InvariantTracking, Trajectory,
    DEFAULT_STEPS, MIN_STEPS,
};
pub use integrals::{compute_integrals, compute_integrals_with_third, InvariantIntegrals};
pub(crate) use sampling::substream;
pub use sampling::{moments_of, sample_thermal, ThermalEnsemble};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("ensemble needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("variances must be positive (position {position}, momentum {momentum})")]
    NonPositiveVariance { position: f64, momentum: f64 },
    #[error("u(t) = {value} is not positive at t = {time} s")]
    NonPositiveU { time: f64, value: f64 },
    #[error("integration needs at least 100 steps, got {0}")]
    TooFewSteps(usize),
    #[error("non-finite force at t = {time} s")]
    NonFiniteForce { time: f64 },
}

/// A point `(z, p)` of single-axis phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhasePoint {
    pub position: f64,
    pub momentum: f64,
}

impl PhasePoint {
    pub fn new(position: f64, momentum: f64) -> Self {
        Self { position, momentum }
    }
}

/// First and second moments, `<zp + pz>` stored symmetrized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentSet {
    pub mean_position: f64,
    pub mean_momentum: f64,
    pub position_sq: f64,
    pub momentum_sq: f64,
    pub symmetric_cross: f64,
}

impl MomentSet {
    /// Centered state with the given variances and no correlation.
    pub fn centered(position_variance: f64, momentum_variance: f64) -> Self {
        Self {
            position_sq: position_variance,
            momentum_sq: momentum_variance,
            ..Default::default()
        }
    }

    pub fn position_variance(&self) -> f64 {
        (self.position_sq - self.mean_position * self.mean_position).max(0.0)
    }

    pub fn momentum_variance(&self) -> f64 {
        (self.momentum_sq - self.mean_momentum * self.mean_momentum).max(0.0)
    }

    /// `<zp> - <z><p>` with `<zp>` taken as half the symmetrized product.
    pub fn covariance(&self) -> f64 {
        0.5 * self.symmetric_cross - self.mean_position * self.mean_momentum
    }
}
