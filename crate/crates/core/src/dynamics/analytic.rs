use super::{DynamicsError, InvariantIntegrals, MomentSet, PhasePoint};
use crate::design::AuxiliaryPair;

/// Affine map from the initial phase point to the state at time `t`:
/// `z = α z0 + β p0 + γ`, `p = α_p z0 + β_p p0 + γ_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMap {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub alpha_p: f64,
    pub beta_p: f64,
    pub gamma_p: f64,
}

impl LinearMap {
    pub fn at(pair: &AuxiliaryPair, integrals: &InvariantIntegrals, t: f64) -> Result<Self, DynamicsError> {
        let m = pair.mass;
        let u = pair.u_at(t, 0);
        if !(u > 0.0) {
            return Err(DynamicsError::NonPositiveU { time: t, value: u });
        }
        let ud = pair.u_at(t, 1);
        let u0 = pair.u_at(0.0, 0);
        let ud0 = pair.u_at(0.0, 1);
        let f = pair.f_at(t, 0);
        let f0 = pair.f_at(0.0, 0);
        let i1 = integrals.i1_at(t);
        // ∫(f - f0)/u² dt
        let j2 = integrals.i2_at(t) - f0 * i1;
        let w = ud * i1 + 1.0 / u;
        Ok(Self {
            alpha: u / u0 - ud0 * u * i1,
            beta: u0 * u * i1 / m,
            gamma: -u * j2 / m,
            alpha_p: m * (ud / u0 - ud0 * w),
            beta_p: u0 * w,
            gamma_p: -ud * j2 - (f - f0) / u,
        })
    }

    pub fn apply(&self, p: PhasePoint) -> PhasePoint {
        PhasePoint::new(
            self.alpha * p.position + self.beta * p.momentum + self.gamma,
            self.alpha_p * p.position + self.beta_p * p.momentum + self.gamma_p,
        )
    }

    /// Determinant of the linear part; 1 for any Hamiltonian flow.
    pub fn determinant(&self) -> f64 {
        self.alpha * self.beta_p - self.beta * self.alpha_p
    }

    /// Push a full moment set through the map, cross terms included.
    pub fn push_moments(&self, m0: &MomentSet) -> MomentSet {
        let (a, b, c) = (self.alpha, self.beta, self.gamma);
        let (ap, bp, cp) = (self.alpha_p, self.beta_p, self.gamma_p);
        let (z, p) = (m0.mean_position, m0.mean_momentum);
        let (zz, pp, s) = (m0.position_sq, m0.momentum_sq, m0.symmetric_cross);
        MomentSet {
            mean_position: a * z + b * p + c,
            mean_momentum: ap * z + bp * p + cp,
            position_sq: a * a * zz + b * b * pp + c * c + a * b * s + 2.0 * a * c * z + 2.0 * b * c * p,
            momentum_sq: ap * ap * zz + bp * bp * pp + cp * cp + ap * bp * s + 2.0 * ap * cp * z + 2.0 * bp * cp * p,
            symmetric_cross: 2.0 * a * ap * zz
                + 2.0 * b * bp * pp
                + 2.0 * c * cp
                + (a * bp + b * ap) * s
                + 2.0 * (a * cp + c * ap) * z
                + 2.0 * (b * cp + c * bp) * p,
        }
    }
}

/// Moments at time `t` of a state that started with `initial` at `t = 0`.
pub fn analytic_moments(
    pair: &AuxiliaryPair,
    integrals: &InvariantIntegrals,
    initial: &MomentSet,
    t: f64,
) -> Result<MomentSet, DynamicsError> {
    if t == 0.0 {
        return Ok(*initial);
    }
    Ok(LinearMap::at(pair, integrals, t)?.push_moments(initial))
}

/// `I = u p - m u' z + f` at `(point, t)`.
pub fn invariant_value(point: PhasePoint, t: f64, pair: &AuxiliaryPair) -> f64 {
    pair.u_at(t, 0) * point.momentum - pair.mass * pair.u_at(t, 1) * point.position + pair.f_at(t, 0)
}
