use super::DesignError;

/// Desired outcome of the axial launch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxialTargets {
    /// Momentum scaling `R = u0 / uf`.
    pub scaling: f64,
    /// Momentum offset `P` (kg m/s).
    pub offset: f64,
    pub omega_start: f64,
    pub omega_end: f64,
    /// Final trap-center position (m).
    pub final_center: f64,
    /// Final trap-center velocity (m/s).
    pub final_center_velocity: f64,
    pub duration: f64,
    pub mass: f64,
}

impl AxialTargets {
    /// Targets for a launch that ends with mean velocity `mean_velocity`
    /// from a state initially at rest (`P = m v`).
    #[allow(clippy::too_many_arguments)]
    pub fn for_mean_velocity(
        scaling: f64,
        mean_velocity: f64,
        omega_start: f64,
        omega_end: f64,
        final_center: f64,
        final_center_velocity: f64,
        duration: f64,
        mass: f64,
    ) -> Self {
        Self {
            scaling,
            offset: mass * mean_velocity,
            omega_start,
            omega_end,
            final_center,
            final_center_velocity,
            duration,
            mass,
        }
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        if self.scaling == 0.0 || !self.scaling.is_finite() {
            return Err(DesignError::InvalidTarget {
                key: "scaling",
                reason: format!("R must be finite and nonzero, got {}", self.scaling),
            });
        }
        for (key, v) in [
            ("omega_start", self.omega_start),
            ("omega_end", self.omega_end),
            ("duration", self.duration),
            ("mass", self.mass),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(DesignError::InvalidTarget {
                    key,
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        for (key, v) in [
            ("offset", self.offset),
            ("final_center", self.final_center),
            ("final_center_velocity", self.final_center_velocity),
        ] {
            if !v.is_finite() {
                return Err(DesignError::InvalidTarget {
                    key,
                    reason: "must be finite".into(),
                });
            }
        }
        Ok(())
    }

    pub fn mean_velocity(&self) -> f64 {
        self.offset / self.mass
    }
}

/// Required values of `(u, u', u'', u''')` and `(f, f', f'')` at both ends,
/// as SI time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConditions {
    pub duration: f64,
    pub mass: f64,
    pub u_start: [f64; 4],
    pub u_end: [f64; 4],
    pub f_start: [f64; 3],
    pub f_end: [f64; 3],
}

/// Names of the 14 conditions, in the order used by residual reports.
pub const CONDITION_NAMES: [&str; 14] = [
    "u(0)", "u'(0)", "u''(0)", "u'''(0)", "u(tf)", "u'(tf)", "u''(tf)", "u'''(tf)", "f(0)", "f'(0)", "f''(0)", "f(tf)",
    "f'(tf)", "f''(tf)",
];

impl BoundaryConditions {
    pub fn omega_start_sq(&self) -> f64 {
        -self.u_start[2] / self.u_start[0]
    }

    pub fn omega_end_sq(&self) -> f64 {
        -self.u_end[2] / self.u_end[0]
    }

    /// The 14 required values, derivatives scaled to normalized time.
    pub fn normalized(&self) -> [f64; 14] {
        let tf = self.duration;
        let mut out = [0.0; 14];
        for r in 0..4 {
            out[r] = self.u_start[r] * tf.powi(r as i32);
            out[4 + r] = self.u_end[r] * tf.powi(r as i32);
        }
        for r in 0..3 {
            out[8 + r] = self.f_start[r] * tf.powi(r as i32);
            out[11 + r] = self.f_end[r] * tf.powi(r as i32);
        }
        out
    }

    /// Momentum scale used to make `f` residuals dimensionless: the largest
    /// required `f` value in normalized time, or `m * w0 * 1 um` when every
    /// `f` condition is zero.
    pub fn f_scale(&self) -> f64 {
        let n = self.normalized();
        let s = n[8..].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if s > 0.0 {
            s
        } else {
            self.mass * self.omega_start_sq().abs().sqrt() * 1e-6
        }
    }
}

/// The boundary set producing `p_f = R p_0 + P` with prescribed trap
/// frequencies and final trap-center position and velocity.
pub fn build_boundary_conditions(targets: &AxialTargets) -> Result<BoundaryConditions, DesignError> {
    targets.validate()?;
    let u0 = 1.0;
    let uf = 1.0 / targets.scaling;
    let w0sq = targets.omega_start * targets.omega_start;
    let wfsq = targets.omega_end * targets.omega_end;
    let m = targets.mass;
    Ok(BoundaryConditions {
        duration: targets.duration,
        mass: m,
        u_start: [u0, 0.0, -u0 * w0sq, 0.0],
        u_end: [uf, 0.0, -uf * wfsq, 0.0],
        f_start: [0.0, 0.0, 0.0],
        f_end: [
            -targets.offset / targets.scaling,
            -m * uf * wfsq * targets.final_center,
            -m * uf * wfsq * targets.final_center_velocity,
        ],
    })
}
