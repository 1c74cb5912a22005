//! Hand-built designs used as independent fixtures in unit tests.

use crate::design::{static_trap_pair, AuxiliaryPair, BoundaryConditions, FreeCoefficients, ShapeParams};
use crate::physics::IonSpecies;
use crate::poly::Polynomial;

/// `u(t) = cos(w t)` as its degree-10 Taylor polynomial over
/// `fraction` of a trap period, with `f = 0`. The exact static-trap
/// solution of `u'' + w^2 u = 0`.
pub fn truncated_cosine_pair(omega: f64, fraction: f64) -> AuxiliaryPair {
    let tf = fraction * std::f64::consts::TAU / omega;
    static_trap_pair(omega, tf, IonSpecies::n2_plus().mass()).unwrap()
}

/// `u ≡ value`, `f` absent: free motion.
pub fn constant_pair(value: f64, duration: f64) -> AuxiliaryPair {
    let u = Polynomial::new(vec![value], duration).unwrap();
    let mass = IonSpecies::n2_plus().mass();
    AuxiliaryPair {
        bcs: BoundaryConditions {
            duration,
            mass,
            u_start: [value, 0.0, 0.0, 0.0],
            u_end: [value, 0.0, 0.0, 0.0],
            f_start: [0.0; 3],
            f_end: [0.0; 3],
        },
        u,
        f: None,
        mass,
        shape: ShapeParams {
            u_mid: value,
            free: FreeCoefficients::default(),
        },
        matched_roots: Vec::new(),
    }
}
