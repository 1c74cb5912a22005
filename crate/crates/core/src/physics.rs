//! Physical constants, ion species and thermal-state moments.
//!
//! Everything is SI. Angular frequencies are rad/s; conversion from
//! Hz-style inputs happens at the configuration boundary.

use thiserror::Error;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380_649e-23;
/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_07e-27;

/// Mass of N2 in atomic mass units. The missing electron is ignored.
pub const N2_MASS_U: f64 = 28.006;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("ion mass must be positive and finite, got {0} kg")]
    InvalidMass(f64),
    #[error("ion charge must be a nonzero multiple of e, got {0} C")]
    InvalidCharge(f64),
    #[error("temperature must be non-negative, got {0} K")]
    NegativeTemperature(f64),
    #[error("reference angular frequency must be positive, got {0} rad/s")]
    InvalidFrequency(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonSpecies {
    mass: f64,
    charge: f64,
}

impl IonSpecies {
    pub fn new(mass: f64, charge: f64) -> Result<Self, PhysicsError> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(PhysicsError::InvalidMass(mass));
        }
        let multiple = charge / ELEMENTARY_CHARGE;
        if !charge.is_finite() || multiple.round() == 0.0 || (multiple - multiple.round()).abs() > 1e-6 {
            return Err(PhysicsError::InvalidCharge(charge));
        }
        Ok(Self { mass, charge })
    }

    /// Singly charged molecular nitrogen.
    pub fn n2_plus() -> Self {
        Self {
            mass: N2_MASS_U * ATOMIC_MASS_UNIT,
            charge: ELEMENTARY_CHARGE,
        }
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    /// Charge in units of e.
    pub fn charge_number(&self) -> i64 {
        (self.charge / ELEMENTARY_CHARGE).round() as i64
    }
}

/// Temperature and trap frequency of the initial thermal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalSpec {
    pub temperature: f64,
    pub omega_ref: f64,
    pub mass: f64,
}

impl ThermalSpec {
    pub fn new(temperature: f64, omega_ref: f64, mass: f64) -> Result<Self, PhysicsError> {
        let spec = Self {
            temperature,
            omega_ref,
            mass,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(PhysicsError::NegativeTemperature(self.temperature));
        }
        if !(self.omega_ref > 0.0) || !self.omega_ref.is_finite() {
            return Err(PhysicsError::InvalidFrequency(self.omega_ref));
        }
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(PhysicsError::InvalidMass(self.mass));
        }
        Ok(())
    }
}

/// Second moments of a centered thermal state, `<z^2>_0` and `<p^2>_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalMoments {
    pub position_variance: f64,
    pub momentum_variance: f64,
}

/// `coth(hbar w / 2 kB T)` with both temperature limits handled analytically.
pub fn thermal_occupation_factor(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 1.0;
    }
    coth(HBAR * omega / (2.0 * K_B * temperature))
}

/// Hyperbolic cotangent for positive arguments, stable at both ends.
pub fn coth(x: f64) -> f64 {
    if x > 30.0 {
        1.0
    } else if x < 1e-6 {
        1.0 / x + x / 3.0
    } else {
        1.0 / x.tanh()
    }
}

pub fn thermal_moments(spec: &ThermalSpec) -> Result<ThermalMoments, PhysicsError> {
    spec.validate()?;
    let c = thermal_occupation_factor(spec.omega_ref, spec.temperature);
    Ok(ThermalMoments {
        position_variance: HBAR / (2.0 * spec.mass * spec.omega_ref) * c,
        momentum_variance: spec.mass * HBAR * spec.omega_ref / 2.0 * c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn n2_spec(t: f64) -> ThermalSpec {
        ThermalSpec::new(t, TAU * 0.85e6, IonSpecies::n2_plus().mass()).unwrap()
    }

    #[test]
    fn ground_state_limit() {
        let spec = n2_spec(0.0);
        let m = thermal_moments(&spec).unwrap();
        let mass = spec.mass;
        assert_eq!(m.position_variance, HBAR / (2.0 * mass * spec.omega_ref));
        assert_eq!(m.momentum_variance, mass * HBAR * spec.omega_ref / 2.0);
    }

    #[test]
    fn classical_limit_for_n2_at_1000k() {
        let spec = n2_spec(1000.0);
        let m = thermal_moments(&spec).unwrap();
        // classical oracles kB T/(m w^2) and m kB T
        let z2 = K_B * 1000.0 / (spec.mass * spec.omega_ref.powi(2));
        let p2 = spec.mass * K_B * 1000.0;
        assert!((m.position_variance / z2 - 1.0).abs() < 1e-4);
        assert!((m.momentum_variance / p2 - 1.0).abs() < 1e-4);
        assert!((m.position_variance - 1.04e-8).abs() < 0.01e-8);
        assert!((m.momentum_variance - 6.42e-46).abs() < 0.01e-46);
        let dv = m.momentum_variance.sqrt() / spec.mass;
        assert!((dv - 545.0).abs() < 1.0);
    }

    #[test]
    fn rejects_bad_specs() {
        let mass = IonSpecies::n2_plus().mass();
        assert!(matches!(
            ThermalSpec::new(-1.0, 1.0, mass),
            Err(PhysicsError::NegativeTemperature(_))
        ));
        assert!(matches!(
            ThermalSpec::new(1.0, 0.0, mass),
            Err(PhysicsError::InvalidFrequency(_))
        ));
        let raw = ThermalSpec {
            temperature: 1.0,
            omega_ref: -2.0,
            mass,
        };
        assert!(thermal_moments(&raw).is_err());
    }

    #[test]
    fn coth_branches_are_continuous() {
        for &x in &[1e-6, 30.0] {
            let below = coth(x * (1.0 - 1e-12));
            let above = coth(x * (1.0 + 1e-12));
            assert!((below / above - 1.0).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn species_validation() {
        assert!(IonSpecies::new(0.0, ELEMENTARY_CHARGE).is_err());
        assert!(IonSpecies::new(1e-26, 0.0).is_err());
        assert!(IonSpecies::new(1e-26, 0.5 * ELEMENTARY_CHARGE).is_err());
        let s = IonSpecies::new(1e-26, -2.0 * ELEMENTARY_CHARGE).unwrap();
        assert_eq!(s.charge_number(), -2);
    }

    proptest::proptest! {
        #[test]
        fn uncertainty_bound_and_monotonicity(t in 0.0f64..5000.0, dt in 0.0f64..100.0, f in 0.01f64..10.0) {
            let mass = IonSpecies::n2_plus().mass();
            let omega = TAU * f * 1e6;
            let a = thermal_moments(&ThermalSpec::new(t, omega, mass).unwrap()).unwrap();
            let b = thermal_moments(&ThermalSpec::new(t + dt, omega, mass).unwrap()).unwrap();
            proptest::prop_assert!(a.position_variance * a.momentum_variance >= HBAR * HBAR / 4.0 * (1.0 - 1e-12));
            proptest::prop_assert!(b.position_variance >= a.position_variance);
            proptest::prop_assert!(b.momentum_variance >= a.momentum_variance);
        }

        #[test]
        fn classical_limit_within_one_basis_point(f in 0.01f64..10.0, factor in 100.0f64..1e4) {
            let mass = IonSpecies::n2_plus().mass();
            let omega = TAU * f * 1e6;
            let t = factor * HBAR * omega / K_B;
            let m = thermal_moments(&ThermalSpec::new(t, omega, mass).unwrap()).unwrap();
            let classical = K_B * t / (mass * omega * omega);
            proptest::prop_assert!((m.position_variance / classical - 1.0).abs() < 1e-4);
        }
    }
}
