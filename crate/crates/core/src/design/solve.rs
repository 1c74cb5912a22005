use super::{BoundaryConditions, DesignError};
use crate::numerics::{bracket_roots, midpoint, solve_dense};
use crate::poly::{falling_factorial, Polynomial};

/// Degree of `u`.
pub const U_DEGREE: usize = 10;
/// Degree of `f`.
pub const F_DEGREE: usize = 11;
/// Number of `f` coefficients available for matching interior roots of `u''`.
pub const MAX_MATCHED_ROOTS: usize = 4;
/// Sampling grid used for positivity and root detection.
pub const DETECTION_GRID: usize = 4096;

/// The coefficients left free by the boundary and singularity constraints.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FreeCoefficients {
    pub a9: f64,
    pub a10: f64,
    pub b10: f64,
    pub b11: f64,
}

impl FreeCoefficients {
    pub fn to_array(self) -> [f64; 4] {
        [self.a9, self.a10, self.b10, self.b11]
    }

    pub fn from_array(x: [f64; 4]) -> Self {
        Self {
            a9: x[0],
            a10: x[1],
            b10: x[2],
            b11: x[3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeParams {
    /// Value imposed on `u(t_f / 2)`.
    pub u_mid: f64,
    pub free: FreeCoefficients,
}

impl ShapeParams {
    /// Midpoint between the endpoint values of `u`.
    pub fn default_for(bcs: &BoundaryConditions) -> Self {
        Self {
            u_mid: 0.5 * (bcs.u_start[0] + bcs.u_end[0]),
            free: FreeCoefficients::default(),
        }
    }
}

/// Polynomial auxiliary functions `u(t)` and `f(t)`.
///
/// `f` is `None` for designs with a structurally static trap center.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryPair {
    pub u: Polynomial,
    pub f: Option<Polynomial>,
    pub mass: f64,
    pub bcs: BoundaryConditions,
    pub shape: ShapeParams,
    /// Interior roots of `u''` at which `f'` was forced to vanish.
    pub matched_roots: Vec<f64>,
}

impl AuxiliaryPair {
    pub fn duration(&self) -> f64 {
        self.u.duration()
    }

    pub fn u_at(&self, t: f64, order: u8) -> f64 {
        self.u.eval_unchecked(t, order)
    }

    pub fn f_at(&self, t: f64, order: u8) -> f64 {
        self.f.as_ref().map_or(0.0, |f| f.eval_unchecked(t, order))
    }

    pub fn free_coefficients(&self) -> FreeCoefficients {
        let a = self.u.coefficients();
        let b = self.f.as_ref().map(|f| f.coefficients());
        let get = |c: &[f64], j: usize| c.get(j).copied().unwrap_or(0.0);
        FreeCoefficients {
            a9: get(a, 9),
            a10: get(a, 10),
            b10: b.map_or(0.0, |b| get(b, 10)),
            b11: b.map_or(0.0, |b| get(b, 11)),
        }
    }

    /// Interior roots of `u''` on `(0, t_f)`.
    pub fn curvature_roots(&self) -> Vec<f64> {
        interior_roots(&self.u, 2)
    }
}

pub(crate) fn interior_roots(p: &Polynomial, order: u8) -> Vec<f64> {
    let tf = p.duration();
    bracket_roots(|t| p.eval_unchecked(t, order), tf, DETECTION_GRID)
        .into_iter()
        .map(midpoint)
        .filter(|&t| t > 0.0 && t < tf)
        .collect()
}

fn derivative_row(s: f64, order: usize, n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            if j < order {
                0.0
            } else {
                falling_factorial(j, order) * s.powi((j - order) as i32)
            }
        })
        .collect()
}

struct Condition {
    s: f64,
    order: usize,
    value: f64,
}

/// Solve for the leading coefficients given the trailing (fixed) ones.
fn solve_leading(conditions: &[Condition], fixed: &[(usize, f64)], total: usize) -> Option<Vec<f64>> {
    let n = conditions.len();
    let mut rows = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    for c in conditions {
        let full = derivative_row(c.s, c.order, total);
        let contribution: f64 = fixed.iter().map(|&(j, v)| full[j] * v).sum();
        rows.push(full[..n].to_vec());
        rhs.push(c.value - contribution);
    }
    let lead = solve_dense(&rows, &rhs)?;
    let mut out = vec![0.0; total];
    out[..n].copy_from_slice(&lead);
    for &(j, v) in fixed {
        out[j] = v;
    }
    Some(out)
}

/// Coefficients `a_0..a_8` from the eight endpoint conditions and the
/// midpoint value, with `a_9`, `a_10` given.
pub(crate) fn solve_u(bcs: &BoundaryConditions, u_mid: f64, a9: f64, a10: f64) -> Result<Polynomial, DesignError> {
    let tf = bcs.duration;
    let mut conditions = Vec::with_capacity(9);
    for r in 0..4 {
        conditions.push(Condition {
            s: 0.0,
            order: r,
            value: bcs.u_start[r] * tf.powi(r as i32),
        });
    }
    for r in 0..4 {
        conditions.push(Condition {
            s: 1.0,
            order: r,
            value: bcs.u_end[r] * tf.powi(r as i32),
        });
    }
    conditions.push(Condition {
        s: 0.5,
        order: 0,
        value: u_mid,
    });
    let coeffs =
        solve_leading(&conditions, &[(9, a9), (10, a10)], U_DEGREE + 1).ok_or(DesignError::SingularSystem("u"))?;
    Ok(Polynomial::new(coeffs, tf)?)
}

/// Smallest value of `u` over the detection grid and its interior extrema.
pub fn u_minimum(u: &Polynomial) -> f64 {
    let tf = u.duration();
    let grid_min = (0..=DETECTION_GRID)
        .map(|i| u.eval_unchecked(tf * i as f64 / DETECTION_GRID as f64, 0))
        .fold(f64::INFINITY, f64::min);
    interior_roots(u, 1)
        .into_iter()
        .map(|t| u.eval_unchecked(t, 0))
        .fold(grid_min, f64::min)
}

pub(crate) fn check_positive(u: &Polynomial) -> Result<(), DesignError> {
    let min = u_minimum(u);
    if min > 0.0 {
        Ok(())
    } else {
        Err(DesignError::USignChange { minimum: min })
    }
}

/// Steps one and two of the construction: boundary conditions, the midpoint
/// value of `u`, and `f'` vanishing at every interior root of `u''`.
pub fn solve_constrained_polynomials(
    bcs: &BoundaryConditions,
    shape: ShapeParams,
) -> Result<AuxiliaryPair, DesignError> {
    let u = solve_u(bcs, shape.u_mid, shape.free.a9, shape.free.a10)?;
    check_positive(&u)?;
    let roots = interior_roots(&u, 2);
    if roots.len() > MAX_MATCHED_ROOTS {
        return Err(DesignError::InsufficientFreeCoefficients { roots: roots.len() });
    }
    let f = solve_f(bcs, &roots, shape.free.b10, shape.free.b11)?;
    Ok(AuxiliaryPair {
        u,
        f: Some(f),
        mass: bcs.mass,
        bcs: *bcs,
        shape,
        matched_roots: roots,
    })
}

/// Coefficients `b_0..b_5` from the six conditions on `f`, plus one of
/// `b_6..b_9` per matched root; unused ones stay zero.
pub(crate) fn solve_f(bcs: &BoundaryConditions, roots: &[f64], b10: f64, b11: f64) -> Result<Polynomial, DesignError> {
    let tf = bcs.duration;
    let mut conditions = Vec::with_capacity(6 + roots.len());
    for r in 0..3 {
        conditions.push(Condition {
            s: 0.0,
            order: r,
            value: bcs.f_start[r] * tf.powi(r as i32),
        });
    }
    for r in 0..3 {
        conditions.push(Condition {
            s: 1.0,
            order: r,
            value: bcs.f_end[r] * tf.powi(r as i32),
        });
    }
    for &t in roots {
        conditions.push(Condition {
            s: t / tf,
            order: 1,
            value: 0.0,
        });
    }
    let coeffs =
        solve_leading(&conditions, &[(10, b10), (11, b11)], F_DEGREE + 1).ok_or(DesignError::SingularSystem("f"))?;
    Ok(Polynomial::new(coeffs, tf)?)
}

/// `u` alone, for designs whose trap center never moves.
pub fn solve_static_center(bcs: &BoundaryConditions, u_mid: f64) -> Result<AuxiliaryPair, DesignError> {
    let u = solve_u(bcs, u_mid, 0.0, 0.0)?;
    check_positive(&u)?;
    Ok(AuxiliaryPair {
        u,
        f: None,
        mass: bcs.mass,
        bcs: *bcs,
        shape: ShapeParams {
            u_mid,
            free: FreeCoefficients::default(),
        },
        matched_roots: Vec::new(),
    })
}

/// The static trap of frequency `omega` held for `duration`:
/// `u(t) = cos(omega t)` as its degree-10 Taylor polynomial, `f = 0`.
/// The boundary conditions are the jets of `u` at both ends.
pub fn static_trap_pair(omega: f64, duration: f64, mass: f64) -> Result<AuxiliaryPair, DesignError> {
    let x = omega * duration;
    let mut coeffs = vec![0.0; U_DEGREE + 1];
    let mut term = 1.0;
    for n in 0..=U_DEGREE / 2 {
        coeffs[2 * n] = term;
        term *= -x * x / (((2 * n + 1) * (2 * n + 2)) as f64);
    }
    let u = Polynomial::new(coeffs, duration)?;
    check_positive(&u)?;
    let bcs = BoundaryConditions {
        duration,
        mass,
        u_start: u.jet(0.0),
        u_end: u.jet(duration),
        f_start: [0.0; 3],
        f_end: [0.0; 3],
    };
    Ok(AuxiliaryPair {
        u,
        f: Some(Polynomial::zero(duration)),
        mass,
        bcs,
        shape: ShapeParams {
            u_mid: 0.0,
            free: FreeCoefficients::default(),
        },
        matched_roots: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build_boundary_conditions, AxialTargets};
    use crate::physics::IonSpecies;
    use crate::scenarios;

    fn identity_bcs() -> BoundaryConditions {
        let m = IonSpecies::n2_plus().mass();
        let w = std::f64::consts::TAU * 0.85e6;
        let t = AxialTargets::for_mean_velocity(1.0, 0.0, w, w, 0.0, 0.0, 0.94e-6, m);
        build_boundary_conditions(&t).unwrap()
    }

    #[test]
    fn identity_design_has_zero_f() {
        let bcs = identity_bcs();
        let pair = solve_constrained_polynomials(
            &bcs,
            ShapeParams {
                u_mid: 1.0,
                free: FreeCoefficients::default(),
            },
        )
        .unwrap();
        let f = pair.f.as_ref().unwrap();
        assert!(f.coefficients().iter().all(|&c| c == 0.0));
        // u'' symmetric about t_f / 2 for symmetric conditions
        let tf = pair.duration();
        let roots = pair.curvature_roots();
        assert_eq!(roots.len() % 2, 0);
        for (a, b) in roots.iter().zip(roots.iter().rev()) {
            assert!((a + b - tf).abs() < 1e-9 * tf);
        }
    }

    #[test]
    fn extraction_design_matches_every_curvature_root() {
        let t = scenarios::extraction_targets();
        let bcs = build_boundary_conditions(&t).unwrap();
        let pair = solve_constrained_polynomials(&bcs, ShapeParams::default_for(&bcs)).unwrap();
        assert!(!pair.matched_roots.is_empty());
        let max_fdot = (0..=4096)
            .map(|i| pair.f_at(pair.duration() * i as f64 / 4096.0, 1).abs())
            .fold(0.0, f64::max);
        for &r in &pair.matched_roots {
            assert!(pair.f_at(r, 1).abs() <= 1e-9 * max_fdot);
        }
        assert!(u_minimum(&pair.u) > 0.0);
    }

    #[test]
    fn too_many_curvature_roots() {
        let m = IonSpecies::n2_plus().mass();
        let tf = 0.94e-6;
        let t = AxialTargets::for_mean_velocity(1.0, 0.0, 1.0 / tf, 1.0 / tf, 0.0, 0.0, tf, m);
        let bcs = build_boundary_conditions(&t).unwrap();
        // a large s^9 - s^10 component makes u'' oscillate while u stays positive
        let shape = ShapeParams {
            u_mid: 1.0,
            free: FreeCoefficients {
                a9: -2e4,
                a10: 4e3,
                ..Default::default()
            },
        };
        match solve_constrained_polynomials(&bcs, shape) {
            Err(DesignError::InsufficientFreeCoefficients { roots }) => assert_eq!(roots, 6),
            other => panic!("expected too many roots, got {other:?}"),
        }
    }

    #[test]
    fn negative_midpoint_is_a_sign_change() {
        let bcs = identity_bcs();
        let shape = ShapeParams {
            u_mid: -0.5,
            free: FreeCoefficients::default(),
        };
        assert!(matches!(
            solve_constrained_polynomials(&bcs, shape),
            Err(DesignError::USignChange { .. })
        ));
    }
}
